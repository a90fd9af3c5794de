#include "tcm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "tcm/core_model.hpp"
#include "tcm/disorder.hpp"
#include "tcm/ensemble.hpp"
#include "tcm/errors.hpp"
#include "tcm/flux_calibration.hpp"
#include "tcm/parallel.hpp"
#include "tcm/response.hpp"

namespace tcm {

namespace {

using I = std::int64_t;

const std::vector<Column> kSpectrumColumns = {{"frequency", ColumnType::Real},
                                              {"s21_re", ColumnType::Real},
                                              {"s21_im", ColumnType::Real},
                                              {"s21_abs", ColumnType::Real}};

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_real(values[i]);
  }
  return out;
}

double meta_real(const ResultTable& table, const std::string& key) {
  const auto value = table.meta(key);
  if (!value) throw ConfigError("table metadata lacks '" + key + "'");
  return std::stod(*value);
}

ProbeGrid make_grid(const GridSpec& spec) {
  if (spec.points < 2 || !(spec.stop > spec.start)) {
    throw ConfigError("probe grid needs stop > start and at least 2 points");
  }
  return ProbeGrid::linspace(spec.start, spec.stop, spec.points);
}

SystemConfig system_with(const SystemTemplate& sys, const std::vector<double>& epsilons) {
  SystemConfig config;
  config.cavity = sys.cavity;
  config.qubits.reserve(epsilons.size());
  for (double eps : epsilons) config.qubits.push_back({eps, sys.gamma, sys.g});
  return config;
}

void append_spectrum(ResultTable& table, Cell key, const ComplexSpectrum& spectrum) {
  for (std::size_t i = 0; i < spectrum.grid.size(); ++i) {
    const auto s = spectrum.s21[i];
    table.add_row({key, spectrum.grid[i], s.real(), s.imag(), std::abs(s)});
  }
}

std::vector<Column> with_key(Column key) {
  std::vector<Column> cols = {std::move(key)};
  cols.insert(cols.end(), kSpectrumColumns.begin(), kSpectrumColumns.end());
  return cols;
}

}  // namespace

void stamp_metadata(ResultTable& table, const ExperimentConfig& config) {
  table.set_meta("experiment", experiment_name(config.experiment));
  table.set_meta("config_hash", config_hash(config));
  table.set_meta("master_seed", std::to_string(config.master_seed));
  table.set_meta("tool_version", kToolVersion);
}

// ---------------------------------------------------------------------------

ResultTable run_rabi_scaling(const ExperimentConfig& config) {
  const auto& sys = config.system;
  const double nu_c = sys.cavity.nu_c;
  ResultTable table({{"n_qubits", ColumnType::Integer},
                     {"splitting_spectral", ColumnType::Real},
                     {"splitting_analytic", ColumnType::Real},
                     {"nu_minus", ColumnType::Real},
                     {"nu_plus", ColumnType::Real}});
  stamp_metadata(table, config);

  const auto grid = make_grid(config.grid);
  const double required_step = (sys.cavity.kappa + sys.gamma) / 8.0;
  if (grid.max_step() > required_step) {
    std::ostringstream msg;
    msg << "probe grid step " << grid.max_step() << " MHz cannot resolve the polariton peaks; "
        << "use a step of at most " << required_step << " MHz";
    throw NumericalError(msg.str());
  }

  std::vector<PowerLawPoint> points;
  for (std::size_t n : config.n_range) {
    if (n == 0 || n > sys.n_total) {
      throw ConfigError("n_range entry " + std::to_string(n) + " outside [1, " + std::to_string(sys.n_total) + "]");
    }
    std::vector<double> eps(n, nu_c);
    if (config.rabi.jitter_sigma > 0.0) {
      DisorderSpec jitter{nu_c, 0.0, DisorderShape::FlatPlusGaussianJitter, config.rabi.jitter_sigma,
                          config.master_seed};
      eps = draw_realization(jitter, n, n).epsilons;
    }
    if (!sys.remove_parked) eps.insert(eps.end(), sys.n_total - n, nu_c + sys.park_offset);

    const auto spectrum = transmission_spectrum(system_with(sys, eps), grid, config.threads);
    const auto peaks = find_peaks(spectrum, grid.frequencies().front(), grid.frequencies().back());
    const Peak* lower = nullptr;
    const Peak* upper = nullptr;
    for (const auto& p : peaks) {
      if (p.frequency < nu_c && (!lower || p.height > lower->height)) lower = &p;
      if (p.frequency > nu_c && (!upper || p.height > upper->height)) upper = &p;
    }
    if (!lower || !upper) {
      std::ostringstream msg;
      msg << "polariton peaks for N=" << n << " not resolved: the grid must cover " << nu_c << " +/- "
          << 1.5 * std::abs(sys.g) * std::sqrt(static_cast<double>(n)) << " MHz with a step of at most "
          << required_step << " MHz";
      throw NumericalError(msg.str());
    }
    const double spectral = 0.5 * (upper->frequency - lower->frequency);
    const double analytic = rabi_splitting(uniform_system(sys.cavity, n, nu_c, sys.g, sys.gamma));
    table.add_row({static_cast<I>(n), spectral, analytic, lower->frequency, upper->frequency});
    points.push_back({static_cast<double>(n), spectral});
  }

  if (points.size() >= 3) {
    const auto fit = fit_power_law(points);
    table.set_meta("fit_exponent", format_real(fit.exponent));
    table.set_meta("fit_exponent_stderr", format_real(fit.exponent_stderr));
    table.set_meta("fit_amplitude", format_real(fit.amplitude));
    table.set_meta("fit_amplitude_stderr", format_real(fit.amplitude_stderr));
  } else {
    table.set_meta("fit_notice", "power-law fit skipped: fewer than 3 qubit numbers");
  }
  return table;
}

PowerLawFit refit_rabi_table(const ResultTable& table) {
  std::vector<PowerLawPoint> points;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    points.push_back({static_cast<double>(table.integer(r, "n_qubits")), table.real(r, "splitting_spectral")});
  }
  return fit_power_law(points);
}

// ---------------------------------------------------------------------------

std::vector<ResultTable> run_realization_spectra(const ExperimentConfig& config) {
  const auto& sys = config.system;
  const std::size_t n = config.spectra.n_qubits;
  if (n == 0) throw ConfigError("spectra.n_qubits must be positive");
  const auto grid = make_grid(config.grid);
  const double mean = config.disorder.mean;

  std::vector<ResultTable> tables;
  for (std::size_t d = 0; d < config.delta_range.size(); ++d) {
    const double delta = config.delta_range[d];
    const double half = std::max(delta, 4.0 * std::abs(sys.g) * std::sqrt(static_cast<double>(n)));
    if (grid.frequencies().front() > mean - half || grid.frequencies().back() < mean + half) {
      std::ostringstream msg;
      msg << "probe grid must cover " << mean - half << " .. " << mean + half << " MHz for spread " << delta;
      throw ConfigError(msg.str());
    }

    DisorderSpec spec = config.disorder;
    spec.spread_delta = delta;
    spec.master_seed = derive_seed(config.master_seed, d);

    ResultTable table(with_key({"realization", ColumnType::Integer}));
    stamp_metadata(table, config);
    table.set_meta("spread", format_real(delta));
    table.set_meta("n_qubits", std::to_string(n));
    for (std::size_t r = 0; r < config.n_realizations; ++r) {
      const auto realization = draw_realization(spec, n, r);
      auto spectrum = transmission_spectrum(system_with(sys, realization.epsilons), grid, config.threads);
      if (config.spectra.noise_sigma > 0.0) {
        std::mt19937_64 engine(derive_seed(realization.derived_seed, 1));
        std::normal_distribution<double> noise(0.0, config.spectra.noise_sigma);
        for (auto& s : spectrum.s21) {
          const double re = noise(engine);
          const double im = noise(engine);
          s += Complex(re, im);
        }
      }
      table.set_meta("epsilons_" + std::to_string(r), join(realization.epsilons));
      append_spectrum(table, static_cast<I>(r), spectrum);
    }
    tables.push_back(std::move(table));
  }
  return tables;
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<Column> kMesoColumns = {
    {"n_qubits", ColumnType::Integer},   {"delta", ColumnType::Real},
    {"delta_eff", ColumnType::Real},     {"n_over_delta", ColumnType::Real},
    {"n_realizations", ColumnType::Integer},
    {"mean_re", ColumnType::Real},       {"mean_im", ColumnType::Real},
    {"mean_abs", ColumnType::Real},      {"var", ColumnType::Real},
    {"se_mean", ColumnType::Real},       {"se_var", ColumnType::Real},
    {"eq3_abs", ColumnType::Real},       {"eq3_finite_band_re", ColumnType::Real},
    {"eq3_finite_band_im", ColumnType::Real},
    {"eq4_var", ColumnType::Real},       {"thermodynamic", ColumnType::Integer},
    {"mean_corrected_abs", ColumnType::Real},
    {"var_corrected", ColumnType::Real}, {"inverse_mean_corrected", ColumnType::Real}};

void store_fit(ResultTable& table, const MesoFitReport& fit) {
  const std::vector<std::pair<std::string, double>> values = {
      {"fit_a", fit.a},          {"fit_a_stderr", fit.a_stderr},
      {"fit_gamma", fit.gamma_exp}, {"fit_gamma_stderr", fit.gamma_stderr},
      {"fit_c1_re", fit.c1.real()}, {"fit_c1_re_stderr", fit.c1_re_stderr},
      {"fit_c1_im", fit.c1.imag()}, {"fit_c1_im_stderr", fit.c1_im_stderr},
      {"fit_b", fit.b},          {"fit_b_stderr", fit.b_stderr},
      {"fit_beta", fit.beta_exp}, {"fit_beta_stderr", fit.beta_stderr},
      {"fit_delta", fit.delta_exp}, {"fit_delta_stderr", fit.delta_stderr},
      {"fit_c2", fit.c2},        {"fit_c2_stderr", fit.c2_stderr},
      {"fit_mean_residual_norm", fit.mean_residual_norm},
      {"fit_var_residual_norm", fit.var_residual_norm}};
  for (const auto& [key, value] : values) table.set_meta(key, format_real(value));
}

}  // namespace

ResultTable run_meso_fluctuations(const ExperimentConfig& config) {
  const auto& sys = config.system;
  const auto& cav = sys.cavity;
  const double g = sys.g, gamma_q = sys.gamma;
  if (!(gamma_q > 0.0)) throw ConfigError("meso experiment needs qubit gamma > 0");

  EnsembleTemplate base{cav, g, gamma_q};
  std::vector<EnsembleStats> cells;
  std::vector<DisorderSpec> specs;
  std::vector<double> delta_eff;
  std::size_t index = 0;
  for (std::size_t n : config.n_range) {
    if (n == 0) throw ConfigError("n_range entries must be positive");
    for (double delta : config.delta_range) {
      if (!(delta > 0.0)) throw ConfigError("delta_range entries must be positive");
      DisorderSpec spec = config.disorder;
      spec.spread_delta = delta;
      spec.master_seed = derive_seed(config.master_seed, index++);
      auto stats = ensemble_average(base, spec, n, config.n_realizations, config.threads);
      stats.mean_s21 += config.meso.c1;
      stats.var_s21 += config.meso.c2;
      cells.push_back(stats);
      specs.push_back(spec);
      delta_eff.push_back(config.meso.use_effective_delta ? effective_delta(spec, gamma_q) : delta);
    }
  }

  ResultTable table(kMesoColumns);
  stamp_metadata(table, config);
  table.set_meta("kappa", format_real(cav.kappa));
  table.set_meta("g", format_real(g));
  table.set_meta("gamma", format_real(gamma_q));
  table.set_meta("weighting", config.meso.weighting == FitWeighting::Unweighted ? "unweighted" : "inverse-variance");
  const double threshold = 1.0 / (2.0 * std::numbers::pi * gamma_q);
  table.set_meta("thermodynamic_threshold", format_real(threshold));

  std::complex<double> c1{0.0, 0.0};
  double c2 = 0.0;
  try {
    MesoFitOptions options{cav.kappa, g, config.meso.weighting, delta_eff};
    const auto fit = fit_meso_scaling(cells, options);
    store_fit(table, fit);
    c1 = fit.c1;
    c2 = fit.c2;
  } catch (const InvalidArgument& e) {
    table.set_meta("fit_notice", std::string("scaling fit skipped: ") + e.what());
  }
  const auto corrected = subtract_background(cells, c1, c2);

  std::vector<double> collapse_x, collapse_y;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& s = cells[k];
    const double n = static_cast<double>(s.n_qubits);
    const double delta = s.spread_delta;
    const auto eq3 = mean_s21_analytic(g, cav.kappa, cav.gamma_in, cav.gamma_out, n, delta);
    const auto eq3_fb = mean_s21_finite_band(g, cav.kappa, cav.gamma_in, cav.gamma_out, gamma_q, n, specs[k]);
    const double eq4 = var_s21_analytic(g, cav.kappa, cav.gamma_in, cav.gamma_out, gamma_q, n, delta);
    const double inverse = 1.0 / std::abs(corrected[k].mean_s21);
    collapse_x.push_back(n / delta_eff[k]);
    collapse_y.push_back(inverse);
    table.add_row({static_cast<I>(s.n_qubits), delta, delta_eff[k], n / delta, static_cast<I>(s.n_realizations),
                   s.mean_s21.real(), s.mean_s21.imag(), std::abs(s.mean_s21), s.var_s21, s.std_error_mean,
                   s.std_error_var, std::abs(eq3), eq3_fb.real(), eq3_fb.imag(), eq4,
                   static_cast<I>(n / delta > threshold ? 1 : 0), std::abs(corrected[k].mean_s21),
                   corrected[k].var_s21, inverse});
  }
  if (collapse_x.size() >= 2) {
    const auto line = fit_line(collapse_x, collapse_y);
    table.set_meta("collapse_slope", format_real(line.slope));
    table.set_meta("collapse_intercept", format_real(line.intercept));
    table.set_meta("collapse_r_squared", format_real(line.r_squared));
  }
  return table;
}

MesoFitReport refit_meso_table(const ResultTable& table) {
  std::vector<EnsembleStats> cells;
  std::vector<double> delta_eff;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    EnsembleStats s;
    s.n_qubits = static_cast<std::size_t>(table.integer(r, "n_qubits"));
    s.spread_delta = table.real(r, "delta");
    s.n_realizations = static_cast<std::size_t>(table.integer(r, "n_realizations"));
    s.mean_s21 = {table.real(r, "mean_re"), table.real(r, "mean_im")};
    s.var_s21 = table.real(r, "var");
    s.std_error_mean = table.real(r, "se_mean");
    s.std_error_var = table.real(r, "se_var");
    cells.push_back(s);
    delta_eff.push_back(table.real(r, "delta_eff"));
  }
  MesoFitOptions options;
  options.kappa = meta_real(table, "kappa");
  options.g = meta_real(table, "g");
  options.weighting = table.meta("weighting").value_or("unweighted") == "inverse-variance"
                          ? FitWeighting::InverseVariance
                          : FitWeighting::Unweighted;
  options.effective_delta = delta_eff;
  return fit_meso_scaling(cells, options);
}

// ---------------------------------------------------------------------------

std::vector<double> sweep_offsets(const CenterSweepOptions& options) {
  if (options.steps == 0) throw ConfigError("center_sweep.steps must be positive");
  if (options.steps == 1) return {options.offset_min};
  if (!(options.offset_max > options.offset_min)) throw ConfigError("center_sweep needs offset_max > offset_min");
  std::vector<double> out(options.steps);
  const double step = (options.offset_max - options.offset_min) / static_cast<double>(options.steps - 1);
  for (std::size_t i = 0; i < options.steps; ++i) out[i] = options.offset_min + step * static_cast<double>(i);
  out.back() = options.offset_max;
  return out;
}

ResultTable run_center_sweep(const ExperimentConfig& config) {
  const auto& opt = config.center_sweep;
  if (opt.n_qubits == 0) throw ConfigError("center_sweep.n_qubits must be positive");
  const auto grid = make_grid(config.grid);
  const auto offsets = sweep_offsets(opt);

  DisorderSpec spec = config.disorder;
  spec.spread_delta = opt.spread;
  spec.master_seed = config.master_seed;
  const auto realization = draw_realization(spec, opt.n_qubits, 0);

  ResultTable table(with_key({"center_offset", ColumnType::Real}));
  stamp_metadata(table, config);
  table.set_meta("band_center", format_real(spec.mean));
  table.set_meta("spread", format_real(opt.spread));
  table.set_meta("epsilons", join(realization.epsilons));
  for (double offset : offsets) {
    auto eps = realization.epsilons;
    for (auto& e : eps) e += offset;
    const auto spectrum = transmission_spectrum(system_with(config.system, eps), grid, config.threads);
    append_spectrum(table, offset, spectrum);
  }
  return table;
}

std::vector<PeakTrack> track_interior_peaks(const ResultTable& sweep, double band_center, double band_width,
                                            double margin, double tolerance, std::size_t min_length) {
  const auto col_offset = sweep.column_index("center_offset");
  const auto col_freq = sweep.column_index("frequency");
  const auto col_re = sweep.column_index("s21_re");
  const auto col_im = sweep.column_index("s21_im");

  // Rows come in contiguous blocks, one per offset.
  std::vector<std::pair<double, std::vector<double>>> peak_sets;
  const auto& rows = sweep.rows();
  std::size_t begin = 0;
  while (begin < rows.size()) {
    const double offset = std::get<double>(rows[begin][col_offset]);
    std::size_t end = begin;
    std::vector<double> freqs;
    std::vector<Complex> s21;
    while (end < rows.size() && std::get<double>(rows[end][col_offset]) == offset) {
      freqs.push_back(std::get<double>(rows[end][col_freq]));
      s21.emplace_back(std::get<double>(rows[end][col_re]), std::get<double>(rows[end][col_im]));
      ++end;
    }
    ComplexSpectrum spectrum{ProbeGrid(freqs), s21, std::nullopt};
    const double lo = band_center + offset - 0.5 * band_width + margin;
    const double hi = band_center + offset + 0.5 * band_width - margin;
    std::vector<double> found;
    if (hi > lo) {
      for (const auto& p : find_peaks(spectrum, lo, hi)) found.push_back(p.frequency);
    }
    peak_sets.emplace_back(offset, std::move(found));
    begin = end;
  }

  std::vector<PeakTrack> tracks;
  std::vector<std::size_t> active;
  for (const auto& [offset, peaks] : peak_sets) {
    std::vector<bool> taken(peaks.size(), false);
    std::vector<std::size_t> still_active;
    for (std::size_t t : active) {
      auto& track = tracks[t];
      const double predicted = track.frequencies.back() + (offset - track.offsets.back());
      std::size_t best = peaks.size();
      double best_distance = tolerance;
      for (std::size_t i = 0; i < peaks.size(); ++i) {
        const double d = std::abs(peaks[i] - predicted);
        if (!taken[i] && d <= best_distance) {
          best = i;
          best_distance = d;
        }
      }
      if (best == peaks.size()) continue;
      taken[best] = true;
      track.offsets.push_back(offset);
      track.frequencies.push_back(peaks[best]);
      still_active.push_back(t);
    }
    for (std::size_t i = 0; i < peaks.size(); ++i) {
      if (taken[i]) continue;
      tracks.push_back({{offset}, {peaks[i]}, {}});
      still_active.push_back(tracks.size() - 1);
    }
    active = std::move(still_active);
  }

  std::vector<PeakTrack> kept;
  for (auto& track : tracks) {
    if (track.offsets.size() < std::max<std::size_t>(min_length, 2)) continue;
    track.fit = fit_line(track.offsets, track.frequencies);
    kept.push_back(std::move(track));
  }
  return kept;
}

// ---------------------------------------------------------------------------

namespace {

DeviceModel synthetic_device(const ExperimentConfig& config) {
  const std::size_t n = config.calibration.n_qubits;
  DeviceModel model;
  model.nu_c = config.system.cavity.nu_c;
  model.flux_map.inductance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  model.flux_map.frozen_offsets = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(i);
    model.transmons.push_back({18000.0 + 1500.0 * s, 10000.0 - 800.0 * s, 200.0});
    model.readouts.push_back({7000.0 + 150.0 * s, 0.67, 0.55});
    const auto ii = static_cast<Eigen::Index>(i);
    model.flux_map.frozen_offsets(ii) = 0.15 + 0.1 * s;
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      model.flux_map.inductance(ii, jj) = i == j ? 0.6 : 0.08 / (1.0 + std::abs(s - static_cast<double>(j)));
    }
  }
  return model;
}

DeviceModel perturbed(const DeviceModel& truth, double relative, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  auto nudge = [&](double& v) { v *= 1.0 + relative * (2.0 * unit_interval(engine()) - 1.0); };
  DeviceModel start = truth;
  for (auto& t : start.transmons) {
    nudge(t.ej1);
    nudge(t.ej2);
  }
  for (Eigen::Index i = 0; i < start.flux_map.inductance.size(); ++i) nudge(start.flux_map.inductance.data()[i]);
  for (Eigen::Index i = 0; i < start.flux_map.frozen_offsets.size(); ++i) nudge(start.flux_map.frozen_offsets(i));
  return start;
}

}  // namespace

ResultTable run_calibration_roundtrip(const ExperimentConfig& config) {
  const auto& cal = config.calibration;
  if (cal.n_qubits == 0) throw ConfigError("calibration.n_qubits must be positive");
  if (cal.points_per_sweep < 2) throw ConfigError("calibration.points_per_sweep must be at least 2");
  if (!(cal.max_voltage > 0.0)) throw ConfigError("calibration.max_voltage must be positive");

  const DeviceModel truth = synthetic_device(config);
  const std::size_t n = truth.n_qubits();
  const std::size_t coils = truth.n_coils();

  struct Setting {
    std::size_t coil;
    double voltage;
  };
  std::vector<Setting> settings;
  std::vector<Observation> observations;
  std::mt19937_64 engine(derive_seed(config.master_seed, 0));
  std::normal_distribution<double> noise(0.0, cal.noise_sigma);
  for (std::size_t c = 0; c < coils; ++c) {
    for (std::size_t p = 0; p < cal.points_per_sweep; ++p) {
      const double v = -cal.max_voltage +
                       2.0 * cal.max_voltage * static_cast<double>(p) / static_cast<double>(cal.points_per_sweep - 1);
      Eigen::VectorXd volts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(coils));
      volts(static_cast<Eigen::Index>(c)) = v;
      for (std::size_t q = 0; q < n; ++q) {
        const double clean = predict_dressed_frequency(truth, volts, q);
        const double measured = cal.noise_sigma > 0.0 ? clean + noise(engine) : clean;
        observations.push_back({volts, q, measured});
        settings.push_back({c, v});
      }
    }
  }

  const DeviceModel start = perturbed(truth, cal.initial_perturbation, derive_seed(config.master_seed, 1));
  DeviceFitOptions options;
  options.threads = config.threads;
  const auto fit = fit_device_parameters(observations, start, options);

  ResultTable table({{"coil", ColumnType::Integer},
                     {"voltage", ColumnType::Real},
                     {"qubit", ColumnType::Integer},
                     {"measured", ColumnType::Real},
                     {"predicted", ColumnType::Real},
                     {"residual", ColumnType::Real}});
  stamp_metadata(table, config);
  table.set_meta("converged", fit.converged ? "true" : "false");
  table.set_meta("iterations", std::to_string(fit.iterations));
  table.set_meta("n_used", std::to_string(fit.n_used));
  table.set_meta("n_dropped", std::to_string(fit.n_dropped));
  table.set_meta("residual_mean", format_real(fit.residuals.mean));
  table.set_meta("residual_std", format_real(fit.residuals.std));
  if (!fit.diagnostic.empty()) table.set_meta("diagnostic", fit.diagnostic);
  for (std::size_t q = 0; q < n; ++q) {
    const auto id = std::to_string(q);
    table.set_meta("true_ej1_" + id, format_real(truth.transmons[q].ej1));
    table.set_meta("true_ej2_" + id, format_real(truth.transmons[q].ej2));
    table.set_meta("fit_ej1_" + id, format_real(fit.model.transmons[q].ej1));
    table.set_meta("fit_ej2_" + id, format_real(fit.model.transmons[q].ej2));
  }
  std::string hist;
  for (const auto& bin : fit.residuals.histogram) {
    if (!hist.empty()) hist += ',';
    hist += format_real(bin.center) + ":" + std::to_string(bin.count);
  }
  table.set_meta("residual_histogram", hist);

  std::vector<double> predictions(observations.size());
  parallel_for(observations.size(), config.threads, [&](std::size_t i) {
    predictions[i] = predict_dressed_frequency(fit.model, observations[i].voltages, observations[i].qubit);
  });
  for (std::size_t i = 0; i < observations.size(); ++i) {
    table.add_row({static_cast<I>(settings[i].coil), settings[i].voltage, static_cast<I>(observations[i].qubit),
                   observations[i].dressed_frequency, predictions[i],
                   observations[i].dressed_frequency - predictions[i]});
  }
  return table;
}

}  // namespace tcm
