#include "tcm/flux_calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "tcm/errors.hpp"
#include "tcm/levenberg_marquardt.hpp"
#include "tcm/parallel.hpp"

namespace tcm {

void validate(const TransmonSpec& spec) {
  if (!(spec.ej1 > 0.0) || !(spec.ej2 > 0.0) || !(spec.ec > 0.0) || !std::isfinite(spec.ej1) ||
      !std::isfinite(spec.ej2) || !std::isfinite(spec.ec)) {
    throw InvalidArgument("transmon energies must be positive and finite");
  }
}

double bare_frequency(const TransmonSpec& spec, double phi) {
  const double sum = spec.ej1 + spec.ej2, diff = spec.ej1 - spec.ej2;
  const double c = std::cos(phi), s = std::sin(phi);
  const double effective = sum * sum * c * c + diff * diff * s * s;
  return std::sqrt(8.0 * spec.ec) * std::pow(effective, 0.25) - spec.ec;
}

std::pair<double, double> frequency_band(const TransmonSpec& spec) {
  return {bare_frequency(spec, 0.5 * std::numbers::pi), bare_frequency(spec, 0.0)};
}

double flux_from_frequency(const TransmonSpec& spec, double epsilon_target, FluxBranch) {
  validate(spec);
  const auto [lo, hi] = frequency_band(spec);
  constexpr double kSlack = 1e-9;
  if (!(epsilon_target >= lo - kSlack && epsilon_target <= hi + kSlack)) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "target frequency " << epsilon_target << " MHz is outside the attainable band [" << lo << ", "
        << hi << "] MHz";
    throw InvalidArgument(msg.str());
  }
  const double sum2 = (spec.ej1 + spec.ej2) * (spec.ej1 + spec.ej2);
  const double diff2 = (spec.ej1 - spec.ej2) * (spec.ej1 - spec.ej2);
  const double root = (epsilon_target + spec.ec) * (epsilon_target + spec.ec) / (8.0 * spec.ec);
  const double effective = root * root;
  // Separate cos^2 and sin^2 numerators keep both ends of the quadrant accurate.
  const double cos2 = std::max(effective - diff2, 0.0);
  const double sin2 = std::max(sum2 - effective, 0.0);
  return std::atan2(std::sqrt(sin2), std::sqrt(cos2));
}

DressedPair dressed_from_bare(double epsilon, double nu, double k) {
  if (!(epsilon > 0.0) || !(nu > 0.0) || !(k >= 0.0)) {
    throw InvalidArgument("dressed_from_bare needs epsilon > 0, nu > 0, k >= 0");
  }
  const double mid = 0.5 * (epsilon + nu);
  const double half = 0.5 * std::sqrt((epsilon - nu) * (epsilon - nu) + 4.0 * k * epsilon);
  return {mid - half, mid + half, epsilon > nu};
}

double bare_from_dressed(double epsilon_c, double nu, double k) {
  if (!(epsilon_c > 0.0) || !(nu > 0.0) || !(k >= 0.0)) {
    throw InvalidArgument("bare_from_dressed needs epsilon_c > 0, nu > 0, k >= 0");
  }
  if (k == 0.0) return epsilon_c;
  // Squaring the branch equation leaves a relation linear in epsilon.
  const double detuning = epsilon_c - nu;
  if (detuning <= 0.0 && detuning > -k) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "dressed frequency " << epsilon_c << " MHz lies in the forbidden gap (" << nu - k << ", " << nu
        << "] MHz; no real bare frequency";
    throw NumericalError(msg.str());
  }
  return epsilon_c * detuning / (detuning + k);
}

VoltageSolution voltages_from_fluxes(const FluxMap& map, const Eigen::VectorXd& target_phis) {
  if (map.inductance.rows() != target_phis.size() || map.frozen_offsets.size() != target_phis.size()) {
    throw InvalidArgument("flux map and target dimensions differ");
  }
  if (!map.inductance.allFinite() || !map.frozen_offsets.allFinite() || !target_phis.allFinite()) {
    throw InvalidArgument("flux map entries must be finite");
  }
  const Eigen::VectorXd rhs = target_phis - map.frozen_offsets;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(map.inductance);
  VoltageSolution out;
  out.voltages = cod.solve(rhs);
  out.residual_norm = (map.inductance * out.voltages - rhs).norm();
  out.full_rank = cod.rank() == map.inductance.cols();
  return out;
}

Eigen::VectorXd fluxes_from_voltages(const FluxMap& map, const Eigen::VectorXd& voltages) {
  if (map.inductance.cols() != voltages.size()) throw InvalidArgument("voltage vector has wrong length");
  return map.inductance * voltages + map.frozen_offsets;
}

ModeSpectrum extended_eigenfrequencies(const std::vector<double>& qubit_frequencies,
                                       const std::vector<ReadoutSpec>& readouts, double nu_c) {
  const std::size_t n = qubit_frequencies.size();
  if (readouts.size() != n) throw InvalidArgument("one readout spec per qubit is required");
  if (!(nu_c > 0.0)) throw InvalidArgument("cavity frequency must be positive");
  const auto dim = static_cast<Eigen::Index>(2 * n + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  h(0, 0) = nu_c;
  for (std::size_t j = 0; j < n; ++j) {
    const double eps = qubit_frequencies[j];
    if (!(eps > 0.0) || !(readouts[j].nu_ind > 0.0)) throw InvalidArgument("mode frequencies must be positive");
    const auto q = static_cast<Eigen::Index>(1 + j), r = static_cast<Eigen::Index>(1 + n + j);
    const double root = std::sqrt(eps);
    h(q, q) = eps;
    h(r, r) = readouts[j].nu_ind;
    h(0, q) = h(q, 0) = readouts[j].k_common * root;
    h(q, r) = h(r, q) = readouts[j].k_ind * root;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  ModeSpectrum out;
  out.frequencies = solver.eigenvalues();
  out.modes = solver.eigenvectors();
  out.qubit_mode.resize(n);
  constexpr double kTieTolerance = 1e-12;
  for (std::size_t j = 0; j < n; ++j) {
    const auto q = static_cast<Eigen::Index>(1 + j);
    std::size_t best = 0;
    double best_weight = -1.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double w = out.modes(q, k) * out.modes(q, k);
      if (w > best_weight + kTieTolerance) {
        best_weight = w;
        best = static_cast<std::size_t>(k);
      }
    }
    out.qubit_mode[j] = best;
  }
  return out;
}

void validate(const DeviceModel& model) {
  const auto n = static_cast<Eigen::Index>(model.n_qubits());
  if (n == 0) throw InvalidArgument("device model has no qubits");
  if (model.readouts.size() != model.transmons.size()) throw InvalidArgument("one readout per transmon required");
  if (model.flux_map.inductance.rows() != n || model.flux_map.frozen_offsets.size() != n) {
    throw InvalidArgument("flux map rows must match the qubit count");
  }
}

double predict_dressed_frequency(const DeviceModel& model, const Eigen::VectorXd& voltages, std::size_t qubit) {
  if (qubit >= model.n_qubits()) throw InvalidArgument("qubit index out of range");
  const Eigen::VectorXd phis = fluxes_from_voltages(model.flux_map, voltages);
  std::vector<double> eps(model.n_qubits());
  for (std::size_t j = 0; j < eps.size(); ++j) {
    eps[j] = bare_frequency(model.transmons[j], phis(static_cast<Eigen::Index>(j)));
    // Outside the physical regime during a fit excursion; keep the matrix defined.
    eps[j] = std::max(eps[j], 1.0);
  }
  const auto spectrum = extended_eigenfrequencies(eps, model.readouts, model.nu_c);
  return spectrum.frequencies(static_cast<Eigen::Index>(spectrum.qubit_mode[qubit]));
}

namespace {

// Flattens the enabled parameter groups of a DeviceModel into a vector. The
// visitor fixes one ordering for packing, unpacking and step scales.
class ParameterLayout {
 public:
  ParameterLayout(const DeviceModel& base, const DeviceFitOptions& opt) : base_(base), opt_(opt) {}

  Eigen::VectorXd pack(const DeviceModel& m) const {
    DeviceModel copy = m;
    std::vector<double> v;
    visit(copy, [&](double& field, double) { v.push_back(field); });
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  DeviceModel unpack(const Eigen::VectorXd& v) const {
    DeviceModel m = base_;
    Eigen::Index k = 0;
    visit(m, [&](double& field, double) { field = v(k++); });
    return m;
  }

  Eigen::VectorXd scales() const {
    DeviceModel copy = base_;
    std::vector<double> s;
    visit(copy, [&](double& field, double typical) { s.push_back(std::max(std::abs(field), typical)); });
    return Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  }

 private:
  template <typename Fn>
  void visit(DeviceModel& m, Fn&& fn) const {
    for (std::size_t j = 0; j < m.n_qubits(); ++j) {
      if (opt_.fit_josephson) {
        fn(m.transmons[j].ej1, 1.0);
        fn(m.transmons[j].ej2, 1.0);
      }
      if (opt_.fit_charging) fn(m.transmons[j].ec, 1.0);
      if (opt_.fit_couplings) {
        fn(m.readouts[j].k_common, 1e-3);
        fn(m.readouts[j].k_ind, 1e-3);
      }
      if (opt_.fit_readout_frequencies) fn(m.readouts[j].nu_ind, 1.0);
    }
    if (opt_.fit_flux_map) {
      auto& l = m.flux_map.inductance;
      for (Eigen::Index i = 0; i < l.rows(); ++i) {
        // Crosstalk entries may start at zero; flux is O(0.01..1).
        for (Eigen::Index c = 0; c < l.cols(); ++c) fn(l(i, c), 0.1);
        fn(m.flux_map.frozen_offsets(i), 0.1);
      }
    }
    if (opt_.fit_cavity) fn(m.nu_c, 1.0);
  }

  const DeviceModel& base_;
  const DeviceFitOptions& opt_;
};

void check_coverage(const std::vector<Observation>& obs, const DeviceModel& model) {
  const auto coils = static_cast<Eigen::Index>(model.n_coils());
  for (const auto& o : obs) {
    if (o.voltages.size() != coils) throw InvalidArgument("observation voltage vector has wrong length");
    if (o.qubit >= model.n_qubits()) throw InvalidArgument("observation refers to an unknown qubit");
    if (!std::isfinite(o.dressed_frequency)) throw InvalidArgument("observation frequency must be finite");
  }
  for (Eigen::Index c = 0; c < coils; ++c) {
    if (model.flux_map.inductance.col(c).isZero(0.0)) continue;
    std::set<double> distinct;
    for (const auto& o : obs) distinct.insert(o.voltages(c));
    if (distinct.size() < 2) {
      throw InvalidArgument("coil " + std::to_string(c) + " needs observations at >= 2 distinct voltages");
    }
  }
}

struct SingleFit {
  DeviceModel model;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
};

SingleFit fit_once(const std::vector<Observation>& obs, const DeviceModel& start, const DeviceFitOptions& opt) {
  ParameterLayout layout(start, opt);
  const Eigen::VectorXd x0 = layout.pack(start);
  auto residuals = [&](const Eigen::VectorXd& x) {
    const DeviceModel m = layout.unpack(x);
    Eigen::VectorXd r(static_cast<Eigen::Index>(obs.size()));
    parallel_for(obs.size(), opt.threads, [&](std::size_t i) {
      r(static_cast<Eigen::Index>(i)) =
          predict_dressed_frequency(m, obs[i].voltages, obs[i].qubit) - obs[i].dressed_frequency;
    });
    return r;
  };
  LmOptions lm;
  lm.max_iterations = opt.max_iterations;
  lm.parameter_scale = layout.scales();
  // Mode assignment switches branch at anticrossings, so the cost is only
  // piecewise smooth and damped steps can creep on for hundreds of
  // iterations. A relative change of 1e-5 is far below one unit of chi^2.
  lm.stall_window = 25;
  lm.stall_tolerance = 1e-5;
  const auto fit = levenberg_marquardt(residuals, x0, lm);
  return {layout.unpack(fit.params), fit.iterations, fit.converged, fit.stalled};
}

std::vector<double> residuals_of(const DeviceModel& m, const std::vector<Observation>& obs,
                                 std::vector<double>& predicted, std::vector<double>& measured) {
  predicted.resize(obs.size());
  measured.resize(obs.size());
  std::vector<double> r(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    predicted[i] = predict_dressed_frequency(m, obs[i].voltages, obs[i].qubit);
    measured[i] = obs[i].dressed_frequency;
    r[i] = measured[i] - predicted[i];
  }
  return r;
}

}  // namespace

DeviceFitResult fit_device_parameters(const std::vector<Observation>& observations, const DeviceModel& initial,
                                      const DeviceFitOptions& options) {
  validate(initial);
  check_coverage(observations, initial);

  DeviceFitResult result;
  auto fit = fit_once(observations, initial, options);
  std::vector<Observation> kept = observations;
  std::vector<double> predicted, measured;
  auto r = residuals_of(fit.model, kept, predicted, measured);
  auto stats = residual_stats(measured, predicted);
  result.iterations = fit.iterations;

  if (options.drop_outliers && stats.std > 0.0) {
    std::vector<Observation> filtered;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (std::abs(r[i]) <= options.outlier_threshold * stats.std) filtered.push_back(kept[i]);
    }
    if (filtered.size() < kept.size() && filtered.size() >= 2) {
      result.n_dropped = kept.size() - filtered.size();
      kept = std::move(filtered);
      fit = fit_once(kept, fit.model, options);
      result.iterations += fit.iterations;
      residuals_of(fit.model, kept, predicted, measured);
      stats = residual_stats(measured, predicted);
    }
  }

  result.model = fit.model;
  result.residuals = stats;
  result.n_used = kept.size();
  result.converged = fit.converged;
  if (!fit.converged) {
    std::ostringstream msg;
    msg << "device fit stopped after " << options.max_iterations
        << " iterations without converging; returning best parameters (residual std " << stats.std << " MHz)";
    result.diagnostic = msg.str();
  } else if (fit.stalled) {
    result.diagnostic = "converged on a stalled cost (relative change below 1e-5 over 25 iterations)";
  }
  return result;
}

}  // namespace tcm
