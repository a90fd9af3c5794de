#include "tcm/response.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "tcm/errors.hpp"
#include "tcm/parallel.hpp"

namespace tcm {

ProbeGrid::ProbeGrid(std::vector<double> frequencies) : frequencies_(std::move(frequencies)) {
  if (frequencies_.empty()) throw InvalidArgument("probe grid is empty");
  for (std::size_t i = 0; i < frequencies_.size(); ++i) {
    if (!std::isfinite(frequencies_[i])) throw InvalidArgument("probe grid has non-finite frequency");
    if (i > 0 && !(frequencies_[i] > frequencies_[i - 1])) {
      throw InvalidArgument("probe grid must be strictly increasing");
    }
  }
}

ProbeGrid ProbeGrid::linspace(double start, double stop, std::size_t points) {
  if (points == 0) throw InvalidArgument("probe grid needs at least one point");
  if (points == 1) return ProbeGrid({start});
  std::vector<double> f(points);
  const double step = (stop - start) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) f[i] = start + step * static_cast<double>(i);
  f.back() = stop;
  return ProbeGrid(std::move(f));
}

double ProbeGrid::max_step() const {
  double step = 0.0;
  for (std::size_t i = 1; i < frequencies_.size(); ++i) {
    step = std::max(step, frequencies_[i] - frequencies_[i - 1]);
  }
  return step;
}

std::vector<double> ComplexSpectrum::magnitude() const {
  std::vector<double> out(s21.size());
  std::transform(s21.begin(), s21.end(), out.begin(), [](Complex z) { return std::abs(z); });
  return out;
}

Complex photon_green_full(const SystemConfig& config, double omega) {
  if (!std::isfinite(omega)) throw InvalidArgument("probe frequency must be finite");
  const auto op = build_hamiltonian(config);
  const Eigen::MatrixXcd m = op.resolvent_matrix(omega);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
  const double rcond = lu.rcond();
  if (!(rcond >= kMinReciprocalCondition)) {
    std::ostringstream msg;
    msg << "resolvent is singular or ill-conditioned at omega=" << omega
        << " MHz (reciprocal condition " << rcond << ")";
    throw NumericalError(msg.str());
  }
  Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(m.rows());
  e0(0) = 1.0;
  const Eigen::VectorXcd x = lu.solve(e0);
  return x(0);
}

Complex photon_green_selfenergy(const SystemConfig& config, double omega) {
  if (!std::isfinite(omega)) throw InvalidArgument("probe frequency must be finite");
  validate(config);
  const auto& c = config.cavity;
  Complex self_energy = 0.0;
  for (const auto& q : config.qubits) {
    const Complex qubit_inverse(omega - q.epsilon, q.gamma);
    if (qubit_inverse == 0.0) {
      throw NumericalError("undamped qubit pole hit exactly at omega=" + std::to_string(omega));
    }
    self_energy += q.g * q.g / qubit_inverse;
  }
  const Complex denominator = Complex(omega - c.nu_c, c.kappa) - self_energy;
  const Complex result = 1.0 / denominator;
  if (denominator == 0.0 || !std::isfinite(result.real()) || !std::isfinite(result.imag())) {
    throw NumericalError("photon propagator is singular at omega=" + std::to_string(omega));
  }
  return result;
}

Complex transmission(const SystemConfig& config, double omega) {
  const double prefactor = std::sqrt(config.cavity.gamma_in * config.cavity.gamma_out);
  return prefactor * photon_green_selfenergy(config, omega);
}

ComplexSpectrum transmission_spectrum(const SystemConfig& config, const ProbeGrid& grid,
                                      std::size_t threads) {
  validate(config);
  ComplexSpectrum spectrum{grid, std::vector<Complex>(grid.size()), std::nullopt};
  parallel_for(grid.size(), threads,
               [&](std::size_t i) { spectrum.s21[i] = transmission(config, grid[i]); });
  return spectrum;
}

std::vector<Peak> find_peaks(const ComplexSpectrum& spectrum, double lo, double hi) {
  const auto mag = spectrum.magnitude();
  const auto& f = spectrum.grid.frequencies();
  std::vector<Peak> peaks;
  for (std::size_t i = 1; i + 1 < mag.size(); ++i) {
    if (f[i] < lo || f[i] > hi) continue;
    if (!(mag[i] > mag[i - 1] && mag[i] >= mag[i + 1])) continue;
    // Parabola through the three samples; exact for locally quadratic peaks.
    const double y0 = mag[i - 1], y1 = mag[i], y2 = mag[i + 1];
    const double curvature = y0 - 2.0 * y1 + y2;
    double shift = 0.0;
    if (curvature < 0.0) shift = 0.5 * (y0 - y2) / curvature;
    const double h_left = f[i] - f[i - 1], h_right = f[i + 1] - f[i];
    const double location = f[i] + shift * (shift < 0.0 ? h_left : h_right);
    peaks.push_back({location, y1, i});
  }
  return peaks;
}

}  // namespace tcm
