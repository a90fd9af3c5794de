#pragma once

// Single-excitation Tavis-Cummings model of N qubits coupled to one lossy
// cavity mode. All frequencies and rates are linear frequencies in MHz.

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tcm {

inline constexpr double kMHzPerGHz = 1000.0;

struct CavityParams {
  double nu_c = 5755.0;   // bare cavity frequency
  double kappa = 30.0;    // internal loss rate
  double gamma_in = 1.0;  // radiation rate into the input line
  double gamma_out = 1.0; // radiation rate into the output line
};

struct QubitParams {
  double epsilon = 5755.0;  // bare transition frequency
  double gamma = 1.0;       // relaxation rate
  double g = 42.0;          // coupling to the cavity, sign allowed
};

struct SystemConfig {
  CavityParams cavity;
  std::vector<QubitParams> qubits;

  std::size_t n_qubits() const { return qubits.size(); }
};

/// Throws InvalidArgument when a parameter is non-finite or violates its range.
void validate(const SystemConfig& config);

/// True when some damping rate is strictly positive, so the resolvent is
/// regular on the whole real axis.
bool has_damping(const SystemConfig& config);

/// Arrow-shaped (N+1)x(N+1) operator: index 0 is the photon, 1..N the qubits.
class SingleExcitationOperator {
 public:
  SingleExcitationOperator(Eigen::VectorXd diagonal, Eigen::VectorXd damping,
                           Eigen::VectorXd coupling_row);

  std::size_t dimension() const { return static_cast<std::size_t>(diagonal_.size()); }
  const Eigen::VectorXd& diagonal() const { return diagonal_; }
  const Eigen::VectorXd& damping() const { return damping_; }
  const Eigen::VectorXd& coupling_row() const { return coupling_; }

  /// Real-symmetric Hamiltonian matrix without damping.
  Eigen::MatrixXd hermitian_part() const;
  /// omega*I + i*D - H, the matrix whose inverse is the Green function.
  Eigen::MatrixXcd resolvent_matrix(double omega) const;
  /// Eigenvalues of the Hamiltonian in ascending order.
  Eigen::VectorXd eigenvalues() const;

 private:
  Eigen::VectorXd diagonal_;
  Eigen::VectorXd damping_;
  Eigen::VectorXd coupling_;
};

SingleExcitationOperator build_hamiltonian(const SystemConfig& config);

struct BrightModes {
  double nu_minus;
  double nu_plus;
};

inline constexpr double kDegenerateTolerance = 1e-9;  // MHz

/// Closed-form bright (polariton) frequencies; requires all qubits at one
/// frequency within kDegenerateTolerance and N >= 1.
BrightModes bright_mode_frequencies(const SystemConfig& config);

/// Half the bright-mode gap, g*sqrt(N) at resonance.
double rabi_splitting(const SystemConfig& config);

/// N identical qubits at `epsilon` with coupling `g` and relaxation `gamma`.
SystemConfig uniform_system(const CavityParams& cavity, std::size_t n_qubits,
                            double epsilon, double g, double gamma);

}  // namespace tcm
