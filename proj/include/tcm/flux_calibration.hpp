#pragma once

// Device model for frequency control of flux-tunable transmons: SQUID
// flux -> bare frequency, coil voltages -> flux, bare <-> dressed frequency
// with the individual readout resonator, and least-squares parameter fitting
// against spectroscopy-style observations.
//
// Coupling slopes k have units of MHz^(1/2): a qubit at bare frequency eps
// couples with g = k * sqrt(eps). The two-mode formulas below take the
// squared slope k^2 (MHz), so that g^2 = k^2 * eps.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcm/estimators.hpp"

namespace tcm {

struct TransmonSpec {
  double ej1 = 18000.0;  // MHz
  double ej2 = 10000.0;  // MHz
  double ec = 200.0;     // MHz
};

void validate(const TransmonSpec& spec);

struct FluxMap {
  Eigen::MatrixXd inductance;     // qubits x coils, flux per volt
  Eigen::VectorXd frozen_offsets; // per qubit
};

struct ReadoutSpec {
  double nu_ind = 7000.0;   // individual readout resonator, MHz
  double k_ind = 0.67;      // qubit <-> own readout slope, MHz^(1/2)
  double k_common = 0.55;   // qubit <-> common cavity slope, MHz^(1/2)
};

/// sqrt(8 Ec) ((Ej1+Ej2)^2 cos^2 phi + (Ej1-Ej2)^2 sin^2 phi)^(1/4) - Ec.
double bare_frequency(const TransmonSpec& spec, double phi);

/// Attainable band [eps(pi/2), eps(0)].
std::pair<double, double> frequency_band(const TransmonSpec& spec);

enum class FluxBranch { FirstQuadrant };

/// Inverse of bare_frequency on phi in [0, pi/2].
double flux_from_frequency(const TransmonSpec& spec, double epsilon_target,
                           FluxBranch branch = FluxBranch::FirstQuadrant);

struct DressedPair {
  double lower;
  double upper;
  bool qubit_is_upper;  // branch with the larger qubit participation
};

/// Eigenfrequencies of a qubit at `epsilon` coupled to a resonator at `nu`
/// with g^2 = k * epsilon.
DressedPair dressed_from_bare(double epsilon, double nu, double k);

/// Bare frequency whose dressed branch on the same side of `nu` equals
/// `epsilon_c`. Throws NumericalError inside the forbidden gap (nu - k, nu].
double bare_from_dressed(double epsilon_c, double nu, double k);

struct VoltageSolution {
  Eigen::VectorXd voltages;
  double residual_norm = 0.0;  // ||L V + phi0 - phi_target||
  bool full_rank = true;
};

/// Minimum-norm least-squares solution of L V = phi_target - phi0.
VoltageSolution voltages_from_fluxes(const FluxMap& map, const Eigen::VectorXd& target_phis);

Eigen::VectorXd fluxes_from_voltages(const FluxMap& map, const Eigen::VectorXd& voltages);

struct ModeSpectrum {
  Eigen::VectorXd frequencies;         // ascending, length 2N+1
  Eigen::MatrixXd modes;               // columns are eigenvectors
  std::vector<std::size_t> qubit_mode; // assigned mode index per qubit
};

/// Single-excitation eigenmodes of the cavity + N qubits + N readout
/// resonators under RWA. Basis order: cavity, qubits 1..N, readouts 1..N.
/// Each qubit gets the mode with its largest squared amplitude; exact ties go
/// to the lower mode index.
ModeSpectrum extended_eigenfrequencies(const std::vector<double>& qubit_frequencies,
                                       const std::vector<ReadoutSpec>& readouts, double nu_c);

struct DeviceModel {
  double nu_c = 5755.0;
  std::vector<TransmonSpec> transmons;
  FluxMap flux_map;
  std::vector<ReadoutSpec> readouts;

  std::size_t n_qubits() const { return transmons.size(); }
  std::size_t n_coils() const { return static_cast<std::size_t>(flux_map.inductance.cols()); }
};

void validate(const DeviceModel& model);

struct Observation {
  Eigen::VectorXd voltages;
  std::size_t qubit = 0;
  double dressed_frequency = 0.0;
};

/// voltages -> fluxes -> bare frequencies -> extended modes -> mode assigned to `qubit`.
double predict_dressed_frequency(const DeviceModel& model, const Eigen::VectorXd& voltages,
                                 std::size_t qubit);

struct DeviceFitOptions {
  bool fit_josephson = true;
  bool fit_charging = false;
  bool fit_flux_map = true;  // inductance matrix and frozen offsets
  bool fit_couplings = false;
  bool fit_readout_frequencies = false;
  bool fit_cavity = false;
  bool drop_outliers = true;
  double outlier_threshold = 3.0;  // in residual standard deviations
  int max_iterations = 500;
  std::size_t threads = 1;
};

struct DeviceFitResult {
  DeviceModel model;
  ResidualStats residuals;  // on the observations kept for the final fit
  std::size_t n_used = 0;
  std::size_t n_dropped = 0;
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
};

/// Least squares over the parameter groups enabled in `options`, starting at
/// `initial`. Non-convergence is reported through `converged`/`diagnostic`
/// together with the best parameters found.
DeviceFitResult fit_device_parameters(const std::vector<Observation>& observations,
                                      const DeviceModel& initial, const DeviceFitOptions& options = {});

}  // namespace tcm
