#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "tcm/errors.hpp"
#include "tcm/flux_calibration.hpp"

using namespace tcm;

namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;

DeviceModel small_device() {
  DeviceModel m;
  m.nu_c = 5755.0;
  m.transmons = {{18000.0, 10000.0, 200.0}, {17000.0, 11000.0, 210.0}};
  m.readouts = {{7000.0, 0.67, 0.55}, {7150.0, 0.67, 0.55}};
  m.flux_map.inductance.resize(2, 2);
  m.flux_map.inductance << 0.6, 0.05, 0.04, 0.55;
  m.flux_map.frozen_offsets.resize(2);
  m.flux_map.frozen_offsets << 0.15, 0.25;
  return m;
}

}  // namespace

TEST_CASE("bare frequency at the sweet spots") {
  const TransmonSpec t{18000.0, 10000.0, 200.0};
  CHECK(bare_frequency(t, 0.0) == doctest::Approx(std::sqrt(1600.0 * 28000.0) - 200.0).epsilon(1e-14));
  CHECK(bare_frequency(t, kHalfPi) == doctest::Approx(std::sqrt(1600.0 * 8000.0) - 200.0).epsilon(1e-14));
  const auto band = frequency_band(t);
  CHECK(band.first < band.second);
}

TEST_CASE("flux and frequency are inverse maps on the first quadrant") {
  const TransmonSpec t{18000.0, 10000.0, 200.0};
  for (int i = 0; i <= 200; ++i) {
    const double phi = kHalfPi * i / 200.0;
    const double eps = bare_frequency(t, phi);
    CHECK(std::abs(flux_from_frequency(t, eps) - phi) <= 1e-9);
  }
  const auto [lo, hi] = frequency_band(t);
  CHECK(flux_from_frequency(t, hi) == doctest::Approx(0.0));
  CHECK(flux_from_frequency(t, lo) == doctest::Approx(kHalfPi));
  CHECK_THROWS_WITH_AS(flux_from_frequency(t, hi + 1.0), doctest::Contains("outside the attainable band"),
                       InvalidArgument);
  CHECK_THROWS_AS(flux_from_frequency(t, lo - 1.0), InvalidArgument);
  CHECK_THROWS_AS(flux_from_frequency(TransmonSpec{-1.0, 1.0, 1.0}, 100.0), InvalidArgument);
}

TEST_CASE("dressing follows the two-level formula and inverts") {
  const double nu = 7000.0, k = 0.45;
  for (double eps : {5000.0, 6900.0, 7100.0, 9000.0}) {
    const auto p = dressed_from_bare(eps, nu, k);
    const double g2 = k * eps;
    // eigenvalues of [[eps, g], [g, nu]]
    const double tr = eps + nu, det = eps * nu - g2;
    const double disc = std::sqrt(tr * tr / 4.0 - det);
    CHECK(p.lower == doctest::Approx(tr / 2.0 - disc).epsilon(1e-14));
    CHECK(p.upper == doctest::Approx(tr / 2.0 + disc).epsilon(1e-14));
    CHECK(p.qubit_is_upper == (eps > nu));
    const double dressed = eps < nu ? p.lower : p.upper;
    CHECK(bare_from_dressed(dressed, nu, k) == doctest::Approx(eps).epsilon(1e-12));
  }
}

TEST_CASE("zero coupling leaves frequencies undressed") {
  const auto p = dressed_from_bare(6000.0, 7000.0, 0.0);
  CHECK(p.lower == 6000.0);
  CHECK(p.upper == 7000.0);
  CHECK(bare_from_dressed(6543.0, 7000.0, 0.0) == 6543.0);
}

TEST_CASE("dressed frequencies inside the forbidden gap are refused") {
  CHECK_THROWS_WITH_AS(bare_from_dressed(6999.8, 7000.0, 0.45), doctest::Contains("forbidden gap"), NumericalError);
  CHECK_THROWS_AS(bare_from_dressed(7000.0, 7000.0, 0.45), NumericalError);
  CHECK_NOTHROW(bare_from_dressed(6999.0, 7000.0, 0.45));
  CHECK_THROWS_AS(dressed_from_bare(6000.0, 7000.0, -1.0), InvalidArgument);
}

TEST_CASE("voltages reproduce target fluxes") {
  const auto m = small_device();
  Eigen::VectorXd target(2);
  target << 0.4, 0.9;
  const auto sol = voltages_from_fluxes(m.flux_map, target);
  CHECK(sol.full_rank);
  CHECK(sol.residual_norm < 1e-12);
  CHECK((fluxes_from_voltages(m.flux_map, sol.voltages) - target).norm() < 1e-12);

  // rank-deficient map: minimum-norm solution, reported as not full rank
  FluxMap deficient = m.flux_map;
  deficient.inductance << 1.0, 1.0, 2.0, 2.0;
  Eigen::VectorXd reachable(2);
  reachable << 0.15 + 0.5, 0.25 + 1.0;
  const auto d = voltages_from_fluxes(deficient, reachable);
  CHECK_FALSE(d.full_rank);
  CHECK(d.residual_norm < 1e-12);
  CHECK(d.voltages(0) == doctest::Approx(0.25));
  CHECK(d.voltages(1) == doctest::Approx(0.25));
  CHECK_THROWS_AS(voltages_from_fluxes(m.flux_map, Eigen::VectorXd::Zero(3)), InvalidArgument);
}

TEST_CASE("extended modes match an independent eigen-decomposition") {
  const std::vector<double> eps = {5600.0, 5900.0};
  const std::vector<ReadoutSpec> ro = {{7000.0, 0.67, 0.55}, {7150.0, 0.6, 0.5}};
  const auto s = extended_eigenfrequencies(eps, ro, 5755.0);
  REQUIRE(s.frequencies.size() == 5);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(5, 5);
  h(0, 0) = 5755.0;
  h(1, 1) = 5600.0;
  h(2, 2) = 5900.0;
  h(3, 3) = 7000.0;
  h(4, 4) = 7150.0;
  h(0, 1) = h(1, 0) = 0.55 * std::sqrt(5600.0);
  h(0, 2) = h(2, 0) = 0.5 * std::sqrt(5900.0);
  h(1, 3) = h(3, 1) = 0.67 * std::sqrt(5600.0);
  h(2, 4) = h(4, 2) = 0.6 * std::sqrt(5900.0);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues();
  CHECK((s.frequencies - ev).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(s.frequencies(static_cast<Eigen::Index>(s.qubit_mode[0])) < 5755.0);
  CHECK(s.frequencies(static_cast<Eigen::Index>(s.qubit_mode[1])) > 5755.0);
}

TEST_CASE("equal qubit weight in two modes goes to the lower mode") {
  // qubit resonant with its readout and decoupled from a far cavity
  const std::vector<ReadoutSpec> ro = {{7000.0, 0.67, 0.0}};
  const auto s = extended_eigenfrequencies({7000.0}, ro, 9000.0);
  CHECK(s.qubit_mode[0] == 0);
  CHECK(s.frequencies(0) == doctest::Approx(7000.0 - 0.67 * std::sqrt(7000.0)));
}

TEST_CASE("device fit recovers noiseless sweeps") {
  const auto truth = small_device();
  std::vector<Observation> obs;
  for (std::size_t coil = 0; coil < 2; ++coil) {
    for (int i = 0; i < 25; ++i) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(2);
      v(static_cast<Eigen::Index>(coil)) = -1.5 + 3.0 * i / 24.0;
      for (std::size_t q = 0; q < 2; ++q) obs.push_back({v, q, predict_dressed_frequency(truth, v, q)});
    }
  }
  auto start = truth;
  start.transmons[0].ej1 *= 1.01;
  start.transmons[1].ej2 *= 0.99;
  start.flux_map.inductance(0, 0) *= 1.02;
  start.flux_map.frozen_offsets(1) += 0.01;
  DeviceFitOptions opt;
  opt.drop_outliers = false;
  const auto fit = fit_device_parameters(obs, start, opt);
  CHECK(fit.converged);
  CHECK(fit.n_used == obs.size());
  CHECK(fit.residuals.std < 1e-3);
  for (const auto& o : obs) {
    CHECK(predict_dressed_frequency(fit.model, o.voltages, o.qubit) ==
          doctest::Approx(o.dressed_frequency).epsilon(1e-7));
  }
}

TEST_CASE("device validation") {
  auto m = small_device();
  CHECK_NOTHROW(validate(m));
  m.readouts.pop_back();
  CHECK_THROWS_AS(validate(m), InvalidArgument);
  CHECK_THROWS_AS(predict_dressed_frequency(small_device(), Eigen::VectorXd::Zero(2), 5), InvalidArgument);
}

TEST_CASE("bare frequency is even, pi-periodic and falls across the quadrant") {
  const TransmonSpec t{16000.0, 9000.0, 220.0};
  double previous = bare_frequency(t, 0.0);
  for (int i = 1; i <= 100; ++i) {
    const double phi = kHalfPi * i / 100.0;
    const double f = bare_frequency(t, phi);
    CHECK(f < previous);
    previous = f;
    CHECK(bare_frequency(t, -phi) == doctest::Approx(f).epsilon(1e-15));
    CHECK(bare_frequency(t, phi + std::numbers::pi) == doctest::Approx(f).epsilon(1e-13));
  }
}

TEST_CASE("dressed branches never cross") {
  for (double eps = 5000.0; eps <= 9000.0; eps += 37.0) {
    const auto p = dressed_from_bare(eps, 7000.0, 0.3);
    CHECK(p.upper > p.lower);
  }
}

TEST_CASE("extended mode frequencies sum to the trace") {
  const std::vector<double> eps = {5600.0, 5900.0, 6100.0};
  const std::vector<ReadoutSpec> ro = {{7000.0, 0.67, 0.55}, {7150.0, 0.6, 0.5}, {6900.0, 0.7, 0.6}};
  const auto s = extended_eigenfrequencies(eps, ro, 5755.0);
  const double trace = 5755.0 + 5600.0 + 5900.0 + 6100.0 + 7000.0 + 7150.0 + 6900.0;
  CHECK(s.frequencies.sum() == doctest::Approx(trace).epsilon(1e-9));
}

TEST_CASE("least-squares voltage residual is orthogonal to the coil directions") {
  FluxMap map;
  map.inductance.resize(3, 2);
  map.inductance << 0.6, 0.1, 0.05, 0.5, 0.2, 0.3;
  map.frozen_offsets = Eigen::Vector3d(0.1, -0.2, 0.05);
  const Eigen::Vector3d target(0.7, 0.3, 1.1);
  const auto sol = voltages_from_fluxes(map, target);
  const Eigen::VectorXd r = map.inductance * sol.voltages + map.frozen_offsets - target;
  CHECK(r.norm() > 1e-3);
  CHECK((map.inductance.transpose() * r).norm() <= 1e-9 * r.norm());
  CHECK(sol.residual_norm == doctest::Approx(r.norm()));
}
