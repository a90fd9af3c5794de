#pragma once

// Orchestration of the simulated experiments. Each runner turns a resolved
// ExperimentConfig into result tables whose data rows depend only on the
// config (never on the thread count).

#include <cstddef>
#include <string>
#include <vector>

#include "tcm/config.hpp"
#include "tcm/estimators.hpp"
#include "tcm/result_table.hpp"

namespace tcm {

/// Metadata shared by every table: experiment, config hash, seed, tool version.
void stamp_metadata(ResultTable& table, const ExperimentConfig& config);

/// Columns n_qubits, splitting_spectral, splitting_analytic, nu_minus, nu_plus.
/// The power-law fit of the spectral splittings is stored as fit_* metadata
/// (skipped with a fit_notice when fewer than three sizes are given).
ResultTable run_rabi_scaling(const ExperimentConfig& config);

/// One table per spread in delta_range with columns realization, frequency,
/// s21_re, s21_im, s21_abs; the qubit frequencies of realization r are stored
/// in the metadata entry epsilons_r.
std::vector<ResultTable> run_realization_spectra(const ExperimentConfig& config);

/// One row per (N, Delta) cell with ensemble statistics (background already
/// injected), closed-form comparisons and background-corrected values. The
/// scaling fit and the data-collapse R^2 are stored as metadata.
ResultTable run_meso_fluctuations(const ExperimentConfig& config);

/// Rebuilds the cell statistics of a meso table and repeats the scaling fit.
MesoFitReport refit_meso_table(const ResultTable& table);

/// Power-law fit of a rabi-scaling table.
PowerLawFit refit_rabi_table(const ResultTable& table);

/// Spectra of one fixed realization shifted rigidly through the offsets.
/// Columns center_offset, frequency, s21_re, s21_im, s21_abs.
ResultTable run_center_sweep(const ExperimentConfig& config);

/// Offsets used by the center sweep, in order.
std::vector<double> sweep_offsets(const CenterSweepOptions& options);

struct PeakTrack {
  std::vector<double> offsets;
  std::vector<double> frequencies;
  LinearFit fit;  // frequency against offset
};

/// Follows interior peaks of a center-sweep table from one offset to the
/// next. A peak continues a track when it lies within `tolerance` of the
/// previous position moved by the offset step. Peaks closer than `margin` to
/// the shifted band edges are ignored, and tracks shorter than `min_length`
/// are dropped.
std::vector<PeakTrack> track_interior_peaks(const ResultTable& sweep, double band_center,
                                            double band_width, double margin, double tolerance,
                                            std::size_t min_length);

/// Synthetic coil sweeps of a flux-tunable device with Gaussian readout
/// noise, followed by a fit from a perturbed starting model. Columns coil,
/// voltage, qubit, measured, predicted, residual.
ResultTable run_calibration_roundtrip(const ExperimentConfig& config);

}  // namespace tcm
