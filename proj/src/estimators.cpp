#include "tcm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tcm/errors.hpp"
#include "tcm/levenberg_marquardt.hpp"

namespace tcm {

namespace {

constexpr double kPi = std::numbers::pi;

std::string describe(const Eigen::VectorXd& v) {
  std::ostringstream out;
  out.precision(10);
  out << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v(i);
  out << "]";
  return out.str();
}

}  // namespace

PowerLawFit fit_power_law(const std::vector<PowerLawPoint>& points) {
  const std::size_t n = points.size();
  if (n < 3) throw InvalidArgument("power-law fit needs at least 3 points");
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(points[i].y > 0.0) || !std::isfinite(points[i].y)) {
      throw InvalidArgument("power-law fit needs y > 0");
    }
    if (!(points[i].n >= 1.0)) throw InvalidArgument("power-law fit needs N >= 1");
    lx[i] = std::log(points[i].n);
    ly[i] = std::log(points[i].y);
  }
  const double nd = static_cast<double>(n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= nd;
  my /= nd;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("power-law fit needs at least two distinct N");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (intercept + slope * lx[i]);
    rss += r * r;
  }
  const double s2 = rss / (nd - 2.0);

  PowerLawFit fit;
  fit.exponent = slope;
  fit.amplitude = std::exp(intercept);
  fit.exponent_stderr = std::sqrt(s2 / sxx);
  fit.amplitude_stderr = fit.amplitude * std::sqrt(s2 * (1.0 / nd + mx * mx / sxx));
  fit.residual_norm = std::sqrt(rss);
  return fit;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("line fit needs matching x, y with >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("line fit needs distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

MesoFitReport fit_meso_scaling(const std::vector<EnsembleStats>& stats, const MesoFitOptions& options) {
  const std::size_t n = stats.size();
  if (n < 6) throw InvalidArgument("meso fit is underdetermined: need at least 6 cells, got " + std::to_string(n));
  if (!options.effective_delta.empty() && options.effective_delta.size() != n) {
    throw InvalidArgument("effective_delta must have one entry per cell");
  }

  std::vector<double> x(n), u(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = options.effective_delta.empty() ? stats[i].spread_delta : options.effective_delta[i];
    if (!(delta > 0.0)) throw InvalidArgument("cell spread must be positive");
    x[i] = static_cast<double>(stats[i].n_qubits) / delta;
    u[i] = options.kappa + kPi * options.g * options.g * x[i];
  }
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  if (!(*lo_it > 0.0) || *hi_it < 10.0 * *lo_it) {
    throw InvalidArgument("meso fit needs N/Delta cells spanning at least one decade");
  }
  const std::size_t lo = static_cast<std::size_t>(lo_it - x.begin());
  const std::size_t hi = static_cast<std::size_t>(hi_it - x.begin());
  const bool weighted = options.weighting == FitWeighting::InverseVariance;

  MesoFitReport report;

  // Mean: params (ln a, gamma, Re c1, Im c1); the phase of a is the theory
  // phase -i. Residuals are the real and imaginary parts of model - data;
  // the modulus alone is even in Re c1 and stalls Gauss-Newton at Re c1 = 0.
  {
    double max_mag = 0.0;
    for (const auto& s : stats) max_mag = std::max(max_mag, std::abs(s.mean_s21));
    const std::complex<double> c1_0 = stats[hi].mean_s21;
    double a0 = std::abs(stats[lo].mean_s21 - stats[hi].mean_s21) / (1.0 / u[lo] - 1.0 / u[hi]);
    if (!(a0 > 0.0)) a0 = std::abs(stats[lo].mean_s21) * u[lo];
    Eigen::VectorXd p0(4);
    p0 << std::log(a0), 1.0, c1_0.real(), c1_0.imag();

    auto residuals = [&](const Eigen::VectorXd& p) {
      Eigen::VectorXd r(static_cast<Eigen::Index>(2 * n));
      const double a = std::exp(p(0));
      const std::complex<double> c1(p(2), p(3));
      for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> model = std::complex<double>(0.0, -a * std::pow(u[i], -p(1))) + c1;
        double w = 1.0;
        if (weighted && stats[i].std_error_mean > 0.0) w = 1.0 / stats[i].std_error_mean;
        const std::complex<double> d = w * (model - stats[i].mean_s21);
        r(static_cast<Eigen::Index>(2 * i)) = d.real();
        r(static_cast<Eigen::Index>(2 * i + 1)) = d.imag();
      }
      return r;
    };
    LmOptions opt;
    opt.parameter_scale = Eigen::Vector4d(1.0, 1.0, 1e-2 * max_mag, 1e-2 * max_mag);
    const auto fit = levenberg_marquardt(residuals, p0, opt);
    if (!fit.converged) {
      throw NumericalError("mean fit did not converge in " + std::to_string(opt.max_iterations) +
                           " iterations; best (ln a, gamma, Re c1, Im c1) = " + describe(fit.params));
    }
    const auto se = fit.standard_errors();
    report.a = std::exp(fit.params(0));
    report.gamma_exp = fit.params(1);
    report.c1 = {fit.params(2), fit.params(3)};
    report.a_stderr = report.a * se(0);
    report.gamma_stderr = se(1);
    report.c1_re_stderr = se(2);
    report.c1_im_stderr = se(3);
    report.mean_residual_norm = std::sqrt(fit.cost);
    report.mean_iterations = fit.iterations;
  }

  // Variance: params (ln b, beta, delta, c2). The floor must stay >= 0; when
  // the free fit lands below, it is repeated with c2 held at 0.
  {
    double floor = stats.front().var_s21, max_var = 0.0;
    for (const auto& s : stats) {
      floor = std::min(floor, s.var_s21);
      max_var = std::max(max_var, s.var_s21);
    }
    floor = std::max(floor, 0.0);
    auto shape = [&](std::size_t i, double beta, double delta) {
      return std::pow(x[i], beta) * std::pow(u[i], -delta);
    };
    double b0 = (stats[lo].var_s21 - stats[hi].var_s21) / (shape(lo, 1.0, 4.0) - shape(hi, 1.0, 4.0));
    if (!(b0 > 0.0)) b0 = std::max(stats[lo].var_s21, 1e-300) / shape(lo, 1.0, 4.0);

    auto run = [&](bool free_floor) {
      auto residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        const double b = std::exp(p(0));
        const double c2 = free_floor ? p(3) : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double model = b * shape(i, p(1), p(2)) + c2;
          double w = 1.0;
          if (weighted && stats[i].std_error_var > 0.0) w = 1.0 / stats[i].std_error_var;
          r(static_cast<Eigen::Index>(i)) = w * (model - stats[i].var_s21);
        }
        return r;
      };
      Eigen::VectorXd p0(free_floor ? 4 : 3);
      p0.head(3) << std::log(b0), 1.0, 4.0;
      LmOptions opt;
      opt.parameter_scale = Eigen::VectorXd::Ones(p0.size());
      if (free_floor) {
        p0(3) = floor;
        opt.parameter_scale(3) = 1e-2 * max_var;
      }
      auto fit = levenberg_marquardt(residuals, p0, opt);
      if (!fit.converged) {
        throw NumericalError("variance fit did not converge in " + std::to_string(opt.max_iterations) +
                             " iterations; best (ln b, beta, delta, c2) = " + describe(fit.params));
      }
      return fit;
    };

    auto fit = run(true);
    const bool floor_at_zero = fit.params(3) < 0.0;
    if (floor_at_zero) fit = run(false);
    const auto se = fit.standard_errors();
    report.b = std::exp(fit.params(0));
    report.beta_exp = fit.params(1);
    report.delta_exp = fit.params(2);
    report.c2 = floor_at_zero ? 0.0 : fit.params(3);
    report.b_stderr = report.b * se(0);
    report.beta_stderr = se(1);
    report.delta_stderr = se(2);
    report.c2_stderr = floor_at_zero ? 0.0 : se(3);
    report.var_residual_norm = std::sqrt(fit.cost);
    report.var_iterations = fit.iterations;
  }
  return report;
}

std::vector<EnsembleStats> subtract_background(const std::vector<EnsembleStats>& stats,
                                               std::complex<double> c1, double c2) {
  std::vector<EnsembleStats> out = stats;
  for (auto& s : out) {
    s.mean_s21 -= c1;
    s.var_s21 = std::max(s.var_s21 - c2, 0.0);
  }
  return out;
}

double effective_delta(const DisorderSpec& spec, double gamma_q) {
  if (!(gamma_q > 0.0)) throw InvalidArgument("effective width needs Gamma > 0");
  const double integral = self_energy_integral(spec, gamma_q);
  if (!(integral > 0.0)) throw NumericalError("band integral must be positive");
  return std::numbers::pi / (gamma_q * integral);
}

ResidualStats residual_stats(const std::vector<double>& measured, const std::vector<double>& predicted) {
  if (measured.size() != predicted.size()) {
    throw InvalidArgument("residual_stats: length mismatch (" + std::to_string(measured.size()) + " vs " +
                          std::to_string(predicted.size()) + ")");
  }
  const std::size_t m = measured.size();
  if (m < 2) throw InvalidArgument("residual_stats needs at least 2 values");

  std::vector<double> r(m);
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    r[i] = measured[i] - predicted[i];
    mean += r[i];
  }
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);

  ResidualStats out;
  out.mean = mean;
  out.std = std::sqrt(ss / static_cast<double>(m - 1));

  auto bin_of = [](double v) { return static_cast<long>(std::floor(v / kResidualBinWidth + 0.5)); };
  const auto [lo_it, hi_it] = std::minmax_element(r.begin(), r.end());
  const long first = bin_of(*lo_it), last = bin_of(*hi_it);
  out.histogram.reserve(static_cast<std::size_t>(last - first + 1));
  for (long b = first; b <= last; ++b) out.histogram.push_back({kResidualBinWidth * static_cast<double>(b), 0});
  for (double v : r) ++out.histogram[static_cast<std::size_t>(bin_of(v) - first)].count;
  return out;
}

}  // namespace tcm
