#include "tcm/core_model.hpp"

#include <cmath>
#include <string>

#include "tcm/errors.hpp"

namespace tcm {

namespace {

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw InvalidArgument(std::string("non-finite parameter: ") + what);
  }
}

}  // namespace

void validate(const SystemConfig& config) {
  const auto& c = config.cavity;
  require_finite(c.nu_c, "nu_c");
  require_finite(c.kappa, "kappa");
  require_finite(c.gamma_in, "gamma_in");
  require_finite(c.gamma_out, "gamma_out");
  if (c.nu_c <= 0.0) throw InvalidArgument("nu_c must be positive");
  if (c.kappa < 0.0) throw InvalidArgument("kappa must be non-negative");
  if (c.gamma_in < 0.0 || c.gamma_out < 0.0) {
    throw InvalidArgument("radiation rates must be non-negative");
  }
  for (std::size_t j = 0; j < config.qubits.size(); ++j) {
    const auto& q = config.qubits[j];
    const bool finite = std::isfinite(q.epsilon) && std::isfinite(q.gamma) && std::isfinite(q.g);
    if (finite && q.epsilon > 0.0 && q.gamma >= 0.0) continue;
    const std::string tag = "qubit " + std::to_string(j);
    require_finite(q.epsilon, (tag + " epsilon").c_str());
    require_finite(q.gamma, (tag + " gamma").c_str());
    require_finite(q.g, (tag + " g").c_str());
    if (q.epsilon <= 0.0) throw InvalidArgument(tag + ": epsilon must be positive");
    throw InvalidArgument(tag + ": gamma must be non-negative");
  }
}

bool has_damping(const SystemConfig& config) {
  if (config.cavity.kappa > 0.0) return true;
  for (const auto& q : config.qubits) {
    if (q.gamma > 0.0) return true;
  }
  return false;
}

SingleExcitationOperator::SingleExcitationOperator(Eigen::VectorXd diagonal,
                                                   Eigen::VectorXd damping,
                                                   Eigen::VectorXd coupling_row)
    : diagonal_(std::move(diagonal)), damping_(std::move(damping)), coupling_(std::move(coupling_row)) {
  if (diagonal_.size() < 1 || damping_.size() != diagonal_.size() ||
      coupling_.size() != diagonal_.size() - 1) {
    throw InvalidArgument("inconsistent single-excitation operator dimensions");
  }
  if ((damping_.array() < 0.0).any()) throw InvalidArgument("damping must be non-negative");
}

Eigen::MatrixXd SingleExcitationOperator::hermitian_part() const {
  const Eigen::Index n = diagonal_.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  h.diagonal() = diagonal_;
  h.block(0, 1, 1, n - 1) = coupling_.transpose();
  h.block(1, 0, n - 1, 1) = coupling_;
  return h;
}

Eigen::MatrixXcd SingleExcitationOperator::resolvent_matrix(double omega) const {
  const Eigen::Index n = diagonal_.size();
  Eigen::MatrixXcd m = -hermitian_part().cast<std::complex<double>>();
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) += std::complex<double>(omega, damping_(i));
  }
  return m;
}

Eigen::VectorXd SingleExcitationOperator::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hermitian_part(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

SingleExcitationOperator build_hamiltonian(const SystemConfig& config) {
  validate(config);
  const auto n = static_cast<Eigen::Index>(config.qubits.size());
  Eigen::VectorXd diagonal(n + 1), damping(n + 1), coupling(n);
  diagonal(0) = config.cavity.nu_c;
  damping(0) = config.cavity.kappa;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& q = config.qubits[static_cast<std::size_t>(j)];
    diagonal(j + 1) = q.epsilon;
    damping(j + 1) = q.gamma;
    coupling(j) = q.g;
  }
  return {std::move(diagonal), std::move(damping), std::move(coupling)};
}

BrightModes bright_mode_frequencies(const SystemConfig& config) {
  validate(config);
  if (config.qubits.empty()) {
    throw InvalidArgument("bright modes need at least one qubit");
  }
  const double eps = config.qubits.front().epsilon;
  double g2 = 0.0;
  for (const auto& q : config.qubits) {
    if (std::abs(q.epsilon - eps) > kDegenerateTolerance) {
      throw InvalidArgument("analytic formula requires degenerate qubits");
    }
    g2 += q.g * q.g;
  }
  const double nu_c = config.cavity.nu_c;
  const double root = std::sqrt((nu_c - eps) * (nu_c - eps) + 4.0 * g2);
  return {0.5 * (nu_c + eps - root), 0.5 * (nu_c + eps + root)};
}

double rabi_splitting(const SystemConfig& config) {
  const auto modes = bright_mode_frequencies(config);
  return 0.5 * (modes.nu_plus - modes.nu_minus);
}

SystemConfig uniform_system(const CavityParams& cavity, std::size_t n_qubits, double epsilon,
                            double g, double gamma) {
  SystemConfig config;
  config.cavity = cavity;
  config.qubits.assign(n_qubits, QubitParams{epsilon, gamma, g});
  return config;
}

}  // namespace tcm
