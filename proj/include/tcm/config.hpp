#pragma once

// Experiment configuration: YAML in, canonical YAML out.
//
// Frequencies and rates are MHz. Any quantity may instead be written as a
// string with a unit suffix ("5.755 GHz", "30 MHz"); it is converted on load.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tcm/core_model.hpp"
#include "tcm/disorder.hpp"
#include "tcm/estimators.hpp"
#include "tcm/result_table.hpp"

namespace tcm {

enum class ExperimentKind { RabiScaling, RealizationSpectra, MesoFluctuations, CenterSweep, CalibrationRoundTrip };

std::string experiment_name(ExperimentKind kind);
ExperimentKind parse_experiment(const std::string& name);

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  std::size_t points = 0;  // 0: experiment picks a default around the cavity
};

struct SystemTemplate {
  CavityParams cavity;
  double g = 42.0;
  double gamma = 1.0;
  std::size_t n_total = 25;     // qubits on the chip
  double park_offset = -755.0;  // parked qubits sit at nu_c + park_offset
  bool remove_parked = false;
};

struct RabiOptions {
  double jitter_sigma = 0.0;  // frequency-setting error of the tuned qubits, MHz
};

struct SpectraOptions {
  std::size_t n_qubits = 17;
  double noise_sigma = 0.0;  // additive complex Gaussian noise on S21, off by default
};

struct MesoOptions {
  std::complex<double> c1{0.0, 0.0};  // injected complex background on <S21>
  double c2 = 0.0;                    // injected variance floor
  bool use_effective_delta = true;
  FitWeighting weighting = FitWeighting::Unweighted;
};

struct CenterSweepOptions {
  std::size_t n_qubits = 17;
  double spread = 120.0;
  double offset_min = -300.0;
  double offset_max = 300.0;
  std::size_t steps = 61;
};

struct CalibrationOptions {
  std::size_t n_qubits = 3;
  std::size_t points_per_sweep = 101;
  double max_voltage = 1.5;
  double noise_sigma = 20.0;
  double initial_perturbation = 0.02;  // relative error of the starting guess
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::MesoFluctuations;
  std::uint64_t master_seed = 20211;
  SystemTemplate system;
  DisorderSpec disorder;  // mean defaults to nu_c; master_seed mirrors the top level
  GridSpec grid;
  std::size_t n_realizations = 0;  // 0: experiment default
  std::vector<std::size_t> n_range;
  std::vector<double> delta_range;
  RabiOptions rabi;
  SpectraOptions spectra;
  MesoOptions meso;
  CenterSweepOptions center_sweep;
  CalibrationOptions calibration;

  // Run settings; not part of the canonical form.
  std::string output_path = "results";
  TableFormat format = TableFormat::Csv;
  std::size_t threads = 1;
};

/// Config with every experiment-dependent default filled in.
ExperimentConfig default_config(ExperimentKind kind);

/// Applies experiment defaults to fields left unset (n_range, grid, ...).
void resolve_defaults(ExperimentConfig& config);

/// Parses YAML text; `source` names the file in diagnostics. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved YAML that parse_config maps back to the same config.
std::string canonical_config(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Closest candidate by edit distance, for "did you mean" hints.
std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates);

}  // namespace tcm
