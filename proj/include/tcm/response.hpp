#pragma once

// Dissipative photon Green function and microwave transmission S21.
//
// Two independent routes are provided: a dense linear solve of
// (omega*I + i*D - H) x = e0, and the closed-form self-energy resummation
// 1 / (omega + i*kappa - nu_c - sum_j g_j^2 / (omega + i*Gamma_j - eps_j)).

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "tcm/core_model.hpp"

namespace tcm {

using Complex = std::complex<double>;

/// Reciprocal condition estimates below this are treated as singular.
inline constexpr double kMinReciprocalCondition = 1e-12;

class ProbeGrid {
 public:
  explicit ProbeGrid(std::vector<double> frequencies);

  /// `points` evenly spaced frequencies covering [start, stop].
  static ProbeGrid linspace(double start, double stop, std::size_t points);

  const std::vector<double>& frequencies() const { return frequencies_; }
  std::size_t size() const { return frequencies_.size(); }
  double operator[](std::size_t i) const { return frequencies_[i]; }
  /// Largest spacing between neighbouring points (0 for a single point).
  double max_step() const;

 private:
  std::vector<double> frequencies_;
};

struct ComplexSpectrum {
  ProbeGrid grid;
  std::vector<Complex> s21;
  std::optional<std::size_t> realization_id;

  std::vector<double> magnitude() const;
};

Complex photon_green_full(const SystemConfig& config, double omega);
Complex photon_green_selfenergy(const SystemConfig& config, double omega);

/// sqrt(gamma_in*gamma_out) times the photon Green function (self-energy route).
Complex transmission(const SystemConfig& config, double omega);

/// Pointwise transmission over the grid. Points may be evaluated on several
/// threads; the result is identical for every thread count.
ComplexSpectrum transmission_spectrum(const SystemConfig& config, const ProbeGrid& grid,
                                      std::size_t threads = 1);

struct Peak {
  double frequency;  // parabolically refined location
  double height;     // |S21| at the sampled maximum
  std::size_t index; // grid index of the sampled maximum
};

/// Strict local maxima of |S21| with grid index in the open interior, restricted
/// to frequencies in [lo, hi]. Returned in ascending frequency.
std::vector<Peak> find_peaks(const ComplexSpectrum& spectrum, double lo, double hi);

}  // namespace tcm
