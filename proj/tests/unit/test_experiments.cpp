#include <cmath>
#include <string>

#include "doctest.h"

#include "tcm/config.hpp"
#include "tcm/errors.hpp"
#include "tcm/experiments.hpp"
#include "tcm/response.hpp"

using namespace tcm;

namespace {

ExperimentConfig small_meso() {
  auto c = default_config(ExperimentKind::MesoFluctuations);
  c.n_range = {3, 5, 8, 12, 17};
  c.delta_range = {20.0, 120.0};
  c.n_realizations = 64;
  return c;
}

}  // namespace

TEST_CASE("rabi scaling with one size stores a notice instead of a fit") {
  auto c = default_config(ExperimentKind::RabiScaling);
  c.n_range = {1};
  c.system.remove_parked = true;
  const auto t = run_rabi_scaling(c);
  REQUIRE(t.rows().size() == 1);
  CHECK(t.meta("fit_notice").has_value());
  CHECK_FALSE(t.meta("fit_exponent").has_value());
  CHECK(t.real(0, "splitting_spectral") == doctest::Approx(42.0).epsilon(0.05));
  CHECK(t.real(0, "splitting_analytic") == doctest::Approx(42.0));
}

TEST_CASE("rabi scaling refit reproduces the stored fit") {
  auto c = default_config(ExperimentKind::RabiScaling);
  c.n_range = {3, 6, 12, 23};
  c.system.remove_parked = true;
  const auto t = run_rabi_scaling(c);
  const auto fit = refit_rabi_table(t);
  CHECK(format_real(fit.exponent) == *t.meta("fit_exponent"));
  CHECK(fit.exponent == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("a grid too coarse for the linewidth is refused") {
  auto c = default_config(ExperimentKind::RabiScaling);
  c.n_range = {3, 4, 5};
  c.grid = {5000.0, 6500.0, 201};
  CHECK_THROWS_WITH_AS(run_rabi_scaling(c), doctest::Contains("MHz"), NumericalError);
  c = default_config(ExperimentKind::RabiScaling);
  c.n_range = {40};
  CHECK_THROWS_AS(run_rabi_scaling(c), ConfigError);
}

TEST_CASE("spectra tables are reproducible and carry their realizations") {
  auto c = default_config(ExperimentKind::RealizationSpectra);
  c.delta_range = {50.0};
  c.n_realizations = 2;
  const auto a = run_realization_spectra(c);
  const auto b = run_realization_spectra(c);
  REQUIRE(a.size() == 1);
  CHECK(csv_data_section(to_csv(a[0])) == csv_data_section(to_csv(b[0])));
  CHECK(a[0].meta("epsilons_0").has_value());
  CHECK(a[0].meta("epsilons_1").has_value());
  CHECK(a[0].rows().size() == 2 * c.grid.points);

  c.grid = {5700.0, 5800.0, 4001};
  CHECK_THROWS_AS(run_realization_spectra(c), ConfigError);
}

TEST_CASE("meso refit reproduces the stored fit") {
  auto c = small_meso();
  c.meso.c1 = {1e-4, 1e-4};
  const auto t = run_meso_fluctuations(c);
  CHECK(t.rows().size() == 10);
  const auto fit = refit_meso_table(t);
  CHECK(format_real(fit.gamma_exp) == *t.meta("fit_gamma"));
  CHECK(format_real(fit.a) == *t.meta("fit_a"));
  CHECK(format_real(fit.c2) == *t.meta("fit_c2"));
  CHECK(t.meta("collapse_r_squared").has_value());
}

TEST_CASE("meso thread count leaves the data unchanged") {
  auto c = small_meso();
  c.n_realizations = 16;
  const auto one = run_meso_fluctuations(c);
  c.threads = 3;
  const auto three = run_meso_fluctuations(c);
  CHECK(csv_data_section(to_csv(one)) == csv_data_section(to_csv(three)));
}

TEST_CASE("center sweep of a zero-width band tracks the bright modes") {
  auto c = default_config(ExperimentKind::CenterSweep);
  c.center_sweep.n_qubits = 4;
  c.center_sweep.spread = 0.0;
  c.center_sweep.offset_min = -20.0;
  c.center_sweep.offset_max = 20.0;
  c.center_sweep.steps = 5;
  c.grid = {5500.0, 6000.0, 5001};
  const auto t = run_center_sweep(c);
  const auto offsets = sweep_offsets(c.center_sweep);
  REQUIRE(offsets.size() == 5);
  CHECK(t.rows().size() == 5 * 5001);

  // the first offset: four degenerate qubits detuned by -20 MHz
  const auto sys = uniform_system(c.system.cavity, 4, c.system.cavity.nu_c + offsets[0], 42.0, 1.0);
  const auto ev = build_hamiltonian(sys).eigenvalues();
  std::vector<double> f, mag;
  for (std::size_t r = 0; r < 5001; ++r) {
    f.push_back(t.real(r, "frequency"));
    mag.push_back(t.real(r, "s21_abs"));
  }
  std::vector<Complex> s21;
  for (std::size_t r = 0; r < 5001; ++r) s21.emplace_back(t.real(r, "s21_re"), t.real(r, "s21_im"));
  const auto peaks = find_peaks(ComplexSpectrum{ProbeGrid(f), s21, std::nullopt}, 5500.0, 6000.0);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0].frequency == doctest::Approx(ev(0)).epsilon(1e-4));
  CHECK(peaks[1].frequency == doctest::Approx(ev(ev.size() - 1)).epsilon(1e-4));
}

TEST_CASE("calibration round trip reports its fit") {
  auto c = default_config(ExperimentKind::CalibrationRoundTrip);
  c.calibration.n_qubits = 2;
  c.calibration.points_per_sweep = 21;
  c.calibration.noise_sigma = 5.0;
  const auto t = run_calibration_roundtrip(c);
  CHECK(t.rows().size() == 2 * 2 * 21);
  for (const char* key : {"converged", "iterations", "n_used", "n_dropped", "residual_mean", "residual_std",
                          "residual_histogram"}) {
    CHECK_MESSAGE(t.meta(key).has_value(), key);
  }
  CHECK(std::stod(*t.meta("residual_std")) < 10.0);
}

TEST_CASE("the canonical config copy reproduces the run") {
  auto c = default_config(ExperimentKind::RabiScaling);
  c.n_range = {3, 5, 7};
  c.rabi.jitter_sigma = 5.0;
  const auto first = run_rabi_scaling(c);
  const auto copy = parse_config(canonical_config(c), "copy");
  const auto second = run_rabi_scaling(copy);
  CHECK(csv_data_section(to_csv(first)) == csv_data_section(to_csv(second)));
  CHECK(first.meta("config_hash") == second.meta("config_hash"));
}
