#include "tcm/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tcm/errors.hpp"
#include "tcm/parallel.hpp"
#include "tcm/response.hpp"

namespace tcm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kQuadratureTolerance = 1e-8;

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(std::string(what) + " must be positive and finite");
  }
}

// Smeared box density: uniform on [-a, a] convolved with N(0, sigma^2).
double jittered_density(double x, double half_width, double sigma) {
  const double scale = 1.0 / (sigma * std::numbers::sqrt2);
  const double ax = std::abs(x);
  // erfc differences keep precision out in the tails.
  const double mass = 0.5 * (std::erfc((ax - half_width) * scale) - std::erfc((ax + half_width) * scale));
  return mass / (2.0 * half_width);
}

template <typename Fn>
double integrate_even(Fn&& integrand, double half_width, double sigma, double gamma_q) {
  using boost::math::quadrature::gauss_kronrod;
  const double reach = half_width + 12.0 * sigma;
  std::vector<double> cuts = {0.0, gamma_q, 10.0 * gamma_q, half_width, reach};
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double c) { return c > reach; }), cuts.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double total = 0.0, total_error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double error = 0.0;
    total += gauss_kronrod<double, 61>::integrate(integrand, cuts[i], cuts[i + 1], 20,
                                                  kQuadratureTolerance * 1e-2, &error);
    total_error += error;
  }
  if (!(total > 0.0) || total_error > kQuadratureTolerance * total) {
    std::ostringstream msg;
    msg << "disorder quadrature did not converge: achieved relative error "
        << (total > 0.0 ? total_error / total : total_error);
    throw NumericalError(msg.str());
  }
  return 2.0 * total;
}

bool is_jittered(const DisorderSpec& spec) {
  return spec.shape == DisorderShape::FlatPlusGaussianJitter && spec.jitter_sigma > 0.0;
}

}  // namespace

std::vector<Complex> ensemble_samples(const EnsembleTemplate& base, const DisorderSpec& spec,
                                      std::size_t n_qubits, std::size_t n_realizations,
                                      std::size_t threads) {
  validate(spec);
  if (n_qubits == 0) throw InvalidArgument("ensemble needs at least one qubit");
  std::vector<Complex> samples(n_realizations);
  parallel_for(n_realizations, threads, [&](std::size_t m) {
    const auto realization = draw_realization(spec, n_qubits, m);
    SystemConfig config;
    config.cavity = base.cavity;
    config.qubits.reserve(n_qubits);
    for (double eps : realization.epsilons) config.qubits.push_back({eps, base.gamma, base.g});
    try {
      samples[m] = transmission(config, base.cavity.nu_c);
    } catch (const NumericalError& e) {
      throw NumericalError("realization " + std::to_string(m) + ": " + e.what());
    }
  });
  return samples;
}

EnsembleStats summarize(const std::vector<Complex>& samples, std::size_t n_qubits,
                        double spread_delta) {
  const std::size_t m = samples.size();
  if (m < 2) throw InvalidArgument("ensemble statistics need at least two realizations");
  const double md = static_cast<double>(m);

  Complex sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& s : samples) {
    sum += s;
    sum_sq += std::norm(s);
  }
  const Complex mean = sum / md;
  double var = 0.0;
  for (const auto& s : samples) var += std::norm(s - mean);
  var /= md;

  // Leave-one-out replicates of the population variance.
  std::vector<double> loo(m);
  double loo_mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Complex mean_i = (sum - samples[i]) / (md - 1.0);
    loo[i] = std::max((sum_sq - std::norm(samples[i])) / (md - 1.0) - std::norm(mean_i), 0.0);
    loo_mean += loo[i];
  }
  loo_mean /= md;
  double loo_spread = 0.0;
  for (double v : loo) loo_spread += (v - loo_mean) * (v - loo_mean);

  EnsembleStats stats;
  stats.n_qubits = n_qubits;
  stats.spread_delta = spread_delta;
  stats.n_realizations = m;
  stats.mean_s21 = mean;
  stats.var_s21 = var;
  // Jackknife error of the mean reduces to the sample standard error.
  stats.std_error_mean = std::sqrt(var / (md - 1.0));
  stats.std_error_var = std::sqrt((md - 1.0) / md * loo_spread);
  return stats;
}

EnsembleStats ensemble_average(const EnsembleTemplate& base, const DisorderSpec& spec,
                               std::size_t n_qubits, std::size_t n_realizations,
                               std::size_t threads) {
  if (n_realizations < 2) throw InvalidArgument("ensemble average needs at least two realizations");
  return summarize(ensemble_samples(base, spec, n_qubits, n_realizations, threads), n_qubits,
                   spec.spread_delta);
}

Complex mean_s21_analytic(double g, double kappa, double gamma_in, double gamma_out,
                          double n_qubits, double delta) {
  require_positive(delta, "spread Delta");
  const double prefactor = std::sqrt(gamma_in * gamma_out);
  return Complex(0.0, -prefactor / (kappa + kPi * g * g * n_qubits / delta));
}

Complex mean_s21_finite_band(double g, double kappa, double gamma_in, double gamma_out,
                             double gamma_q, double n_qubits, const DisorderSpec& spec) {
  const double band = self_energy_integral(spec, gamma_q);
  const double prefactor = std::sqrt(gamma_in * gamma_out);
  return Complex(0.0, -prefactor / (kappa + g * g * n_qubits * gamma_q * band));
}

double var_s21_analytic(double g, double kappa, double gamma_in, double gamma_out, double gamma_q,
                        double n_qubits, double delta) {
  require_positive(delta, "spread Delta");
  if (!(gamma_q > 0.0)) {
    throw InvalidArgument("mesoscopic variance diverges for Gamma = 0");
  }
  const double denom = kappa + kPi * g * g * n_qubits / delta;
  return gamma_in * gamma_out * kPi * n_qubits * std::pow(g, 4) /
         (2.0 * gamma_q * delta * std::pow(denom, 4));
}

double crossover_n0(double delta, double gamma_q) {
  require_positive(gamma_q, "qubit relaxation Gamma");
  return delta / (2.0 * kPi * gamma_q);
}

double infinite_band_integral(double delta, double gamma_q) {
  require_positive(delta, "spread Delta");
  require_positive(gamma_q, "qubit relaxation Gamma");
  return kPi / (delta * gamma_q);
}

double self_energy_integral(double delta, double gamma_q) {
  require_positive(delta, "spread Delta");
  require_positive(gamma_q, "qubit relaxation Gamma");
  return 2.0 / (delta * gamma_q) * std::atan(delta / (2.0 * gamma_q));
}

double self_energy_integral(const DisorderSpec& spec, double gamma_q) {
  validate(spec);
  if (!is_jittered(spec)) return self_energy_integral(spec.spread_delta, gamma_q);
  require_positive(gamma_q, "qubit relaxation Gamma");
  const double a = 0.5 * spec.spread_delta, sigma = spec.jitter_sigma, g2 = gamma_q * gamma_q;
  return integrate_even(
      [&](double x) { return jittered_density(x, a, sigma) / (x * x + g2); }, a, sigma, gamma_q);
}

double fluctuation_integral(const DisorderSpec& spec, double gamma_q) {
  validate(spec);
  require_positive(gamma_q, "qubit relaxation Gamma");
  const double a = 0.5 * spec.spread_delta, g2 = gamma_q * gamma_q;
  if (!is_jittered(spec)) {
    // Antiderivative of e^2/(e^2+G^2)^2 is atan(e/G)/(2G) - e/(2(e^2+G^2)).
    return (std::atan(a / gamma_q) / gamma_q - a / (a * a + g2)) / spec.spread_delta;
  }
  const double sigma = spec.jitter_sigma;
  return integrate_even(
      [&](double x) {
        const double d = x * x + g2;
        return jittered_density(x, a, sigma) * x * x / (d * d);
      },
      a, sigma, gamma_q);
}

}  // namespace tcm
