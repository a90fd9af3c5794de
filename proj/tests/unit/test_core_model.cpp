#include <cmath>
#include <limits>
#include <string>

#include "doctest.h"

#include "tcm/core_model.hpp"
#include "tcm/errors.hpp"

using namespace tcm;

namespace {

SystemConfig three_qubits() {
  SystemConfig c;
  c.qubits = {{5700.0, 1.0, 40.0}, {5760.0, 2.0, -35.0}, {5800.0, 0.5, 42.0}};
  return c;
}

}  // namespace

TEST_CASE("hamiltonian matches an element-by-element construction") {
  const auto c = three_qubits();
  const auto h = build_hamiltonian(c).hermitian_part();
  REQUIRE(h.rows() == 4);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(4, 4);
  expected(0, 0) = c.cavity.nu_c;
  for (int j = 0; j < 3; ++j) {
    expected(j + 1, j + 1) = c.qubits[j].epsilon;
    expected(0, j + 1) = c.qubits[j].g;
    expected(j + 1, 0) = c.qubits[j].g;
  }
  CHECK((h - expected).cwiseAbs().maxCoeff() == 0.0);

  const auto m = build_hamiltonian(c).resolvent_matrix(5750.0);
  CHECK(m(0, 0).imag() == doctest::Approx(c.cavity.kappa));
  CHECK(m(2, 2).imag() == doctest::Approx(2.0));
  CHECK(m(2, 2).real() == doctest::Approx(5750.0 - 5760.0));
  CHECK(m(0, 1).real() == doctest::Approx(-40.0));
}

TEST_CASE("single qubit eigenvalues follow the 2x2 formula") {
  SystemConfig c;
  c.qubits = {{5800.0, 1.0, 30.0}};
  const auto ev = build_hamiltonian(c).eigenvalues();
  const double mid = 0.5 * (c.cavity.nu_c + 5800.0);
  const double half = std::sqrt(0.25 * (5800.0 - c.cavity.nu_c) * (5800.0 - c.cavity.nu_c) + 900.0);
  CHECK(ev(0) == doctest::Approx(mid - half).epsilon(1e-13));
  CHECK(ev(1) == doctest::Approx(mid + half).epsilon(1e-13));
}

TEST_CASE("degenerate qubits give bright modes at nu_c +/- g sqrt(N)") {
  for (std::size_t n : {1u, 4u, 25u}) {
    const auto c = uniform_system(CavityParams{}, n, 5755.0, 42.0, 1.0);
    const auto bright = bright_mode_frequencies(c);
    const double split = 42.0 * std::sqrt(static_cast<double>(n));
    CHECK(bright.nu_minus == doctest::Approx(5755.0 - split).epsilon(1e-14));
    CHECK(bright.nu_plus == doctest::Approx(5755.0 + split).epsilon(1e-14));
    CHECK(rabi_splitting(c) == doctest::Approx(split).epsilon(1e-14));

    const auto ev = build_hamiltonian(c).eigenvalues();
    CHECK(ev(0) == doctest::Approx(bright.nu_minus).epsilon(1e-12));
    CHECK(ev(ev.size() - 1) == doctest::Approx(bright.nu_plus).epsilon(1e-12));
    for (Eigen::Index i = 1; i + 1 < ev.size(); ++i) CHECK(ev(i) == doctest::Approx(5755.0).epsilon(1e-12));
  }
}

TEST_CASE("bright modes refuse non-degenerate qubits") {
  auto c = uniform_system(CavityParams{}, 3, 5755.0, 42.0, 1.0);
  c.qubits[1].epsilon += 1e-6;
  CHECK_THROWS_AS(bright_mode_frequencies(c), InvalidArgument);
  SystemConfig empty;
  CHECK_THROWS_AS(bright_mode_frequencies(empty), InvalidArgument);
}

TEST_CASE("validation names the offending parameter") {
  auto c = three_qubits();
  CHECK_NOTHROW(validate(c));
  c.qubits[2].gamma = -1.0;
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("qubit 2"), InvalidArgument);
  c = three_qubits();
  c.qubits[1].g = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("qubit 1 g"), InvalidArgument);
  c = three_qubits();
  c.cavity.kappa = -1.0;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = three_qubits();
  c.qubits[0].epsilon = 0.0;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
}

TEST_CASE("damping detection") {
  auto c = uniform_system(CavityParams{}, 2, 5755.0, 42.0, 0.0);
  c.cavity.kappa = 0.0;
  CHECK_FALSE(has_damping(c));
  c.qubits[1].gamma = 0.1;
  CHECK(has_damping(c));
}

TEST_CASE("rabi splitting scales exactly as sqrt(N)") {
  const double one = rabi_splitting(uniform_system(CavityParams{}, 1, 5755.0, 42.0, 1.0));
  for (std::size_t n : {2u, 9u, 16u}) {
    const double ratio = rabi_splitting(uniform_system(CavityParams{}, n, 5755.0, 42.0, 1.0)) / one;
    CHECK(ratio == doctest::Approx(std::sqrt(static_cast<double>(n))).epsilon(1e-15));
  }
}

TEST_CASE("a bare cavity is a valid system") {
  SystemConfig c;
  CHECK_NOTHROW(validate(c));
  const auto ev = build_hamiltonian(c).eigenvalues();
  REQUIRE(ev.size() == 1);
  CHECK(ev(0) == c.cavity.nu_c);
}
