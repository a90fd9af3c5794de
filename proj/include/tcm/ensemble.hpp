#pragma once

// Seeded Monte-Carlo disorder averages of S21 at the bare cavity frequency,
// and the large-N closed forms they are compared against.

#include <complex>
#include <cstddef>
#include <vector>

#include "tcm/core_model.hpp"
#include "tcm/disorder.hpp"

namespace tcm {

using Complex = std::complex<double>;

/// Cavity plus the coupling and relaxation shared by every disordered qubit.
struct EnsembleTemplate {
  CavityParams cavity;
  double g = 42.0;
  double gamma = 1.0;
};

struct EnsembleStats {
  std::size_t n_qubits = 0;
  double spread_delta = 0.0;
  std::size_t n_realizations = 0;
  Complex mean_s21;
  double var_s21 = 0.0;        // (1/M) sum |S21 - mean|^2
  double std_error_mean = 0.0; // jackknife, complex magnitude
  double std_error_var = 0.0;  // jackknife
};

/// S21(nu_c) for realizations 0..M-1, in index order.
std::vector<Complex> ensemble_samples(const EnsembleTemplate& base, const DisorderSpec& spec,
                                      std::size_t n_qubits, std::size_t n_realizations,
                                      std::size_t threads = 1);

/// Mean, population variance and jackknife errors of a sample, accumulated in order.
EnsembleStats summarize(const std::vector<Complex>& samples, std::size_t n_qubits,
                        double spread_delta);

EnsembleStats ensemble_average(const EnsembleTemplate& base, const DisorderSpec& spec,
                               std::size_t n_qubits, std::size_t n_realizations,
                               std::size_t threads = 1);

/// Self-averaged transmission with the infinite-band integral pi/(Delta*Gamma).
Complex mean_s21_analytic(double g, double kappa, double gamma_in, double gamma_out,
                          double n_qubits, double delta);

/// Same, with pi/Delta replaced by Gamma times the exact band integral of `spec`.
Complex mean_s21_finite_band(double g, double kappa, double gamma_in, double gamma_out,
                             double gamma_q, double n_qubits, const DisorderSpec& spec);

/// Leading-order mesoscopic variance <|dS21|^2>. Refuses gamma_q <= 0.
double var_s21_analytic(double g, double kappa, double gamma_in, double gamma_out,
                        double gamma_q, double n_qubits, double delta);

/// Qubit number Delta/(2 pi Gamma) separating the mesoscopic and self-averaging regimes.
double crossover_n0(double delta, double gamma_q);

/// pi/(Delta*Gamma): the band integral with the band edges sent to infinity.
double infinite_band_integral(double delta, double gamma_q);

/// Integral of p(e) / (e^2 + Gamma^2) over the disorder density of `spec`
/// (centred at zero). Flat: exact arctan form. Jittered: adaptive quadrature
/// of the Gaussian-smeared box, 1e-8 relative.
double self_energy_integral(const DisorderSpec& spec, double gamma_q);
double self_energy_integral(double delta, double gamma_q);

/// Integral of p(e) e^2 / (e^2 + Gamma^2)^2, the per-qubit variance of the
/// odd self-energy term.
double fluctuation_integral(const DisorderSpec& spec, double gamma_q);

}  // namespace tcm
