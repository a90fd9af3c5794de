#pragma once

// Fits of the scaling laws: power law for the Rabi splitting, and the
// background-corrected forms for the disorder-averaged transmission and its
// mesoscopic variance.

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "tcm/disorder.hpp"
#include "tcm/ensemble.hpp"

namespace tcm {

struct PowerLawPoint {
  double n;
  double y;
};

struct PowerLawFit {
  double amplitude = 0.0;
  double exponent = 0.0;
  double amplitude_stderr = 0.0;
  double exponent_stderr = 0.0;
  double residual_norm = 0.0;  // in log space
};

/// OLS of ln y on ln N. Needs >= 3 points, y > 0, N >= 1.
PowerLawFit fit_power_law(const std::vector<PowerLawPoint>& points);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

enum class FitWeighting { Unweighted, InverseVariance };

struct MesoFitOptions {
  double kappa = 30.0;
  double g = 42.0;
  FitWeighting weighting = FitWeighting::Unweighted;
  /// Per-cell width used for N/Delta; empty means each cell's spread_delta.
  std::vector<double> effective_delta;
};

struct MesoFitReport {
  // <S21> = -i a / (kappa + pi g^2 x)^gamma + c1, x = N/Delta, fitted on the
  // complex mean; its modulus is the reported |<S21>| law
  double a = 0.0;
  double gamma_exp = 0.0;
  std::complex<double> c1;
  // <|dS21|^2> = b x^beta / (kappa + pi g^2 x)^delta + c2
  double b = 0.0;
  double beta_exp = 0.0;
  double delta_exp = 0.0;
  double c2 = 0.0;

  double a_stderr = 0.0, gamma_stderr = 0.0, c1_re_stderr = 0.0, c1_im_stderr = 0.0;
  double b_stderr = 0.0, beta_stderr = 0.0, delta_stderr = 0.0, c2_stderr = 0.0;
  double mean_residual_norm = 0.0;
  double var_residual_norm = 0.0;
  int mean_iterations = 0;
  int var_iterations = 0;
};

/// Fits both forms with Levenberg-Marquardt, starting at the theory exponents.
/// Needs >= 6 cells spanning at least one decade in N/Delta. Throws
/// NumericalError (with the best parameters so far) after 500 iterations.
MesoFitReport fit_meso_scaling(const std::vector<EnsembleStats>& stats, const MesoFitOptions& options);

/// One background pair applied to every cell: mean - c1, max(var - c2, 0).
std::vector<EnsembleStats> subtract_background(const std::vector<EnsembleStats>& stats,
                                               std::complex<double> c1, double c2);

/// Width of the flat band whose infinite-band integral pi/(Delta_eff*Gamma)
/// equals the exact band integral of `spec`.
double effective_delta(const DisorderSpec& spec, double gamma_q);

struct HistogramBin {
  double center;
  std::size_t count;
};

struct ResidualStats {
  double mean = 0.0;
  double std = 0.0;  // M-1 normalisation
  std::vector<HistogramBin> histogram;
};

inline constexpr double kResidualBinWidth = 5.0;  // MHz, bins centred on 0

ResidualStats residual_stats(const std::vector<double>& measured, const std::vector<double>& predicted);

}  // namespace tcm
