// tcm-sim: command-line runner for the simulated experiments.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "tcm/config.hpp"
#include "tcm/errors.hpp"
#include "tcm/experiments.hpp"
#include "tcm/result_table.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalError = 3, kIoError = 4 };

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::size_t> threads;
  std::string format;
};

tcm::ExperimentConfig prepare(tcm::ExperimentKind kind, const GlobalOptions& g) {
  tcm::ExperimentConfig config;
  if (g.config_path.empty()) {
    config = tcm::default_config(kind);
  } else {
    config = tcm::load_config(g.config_path);
    if (config.experiment != kind) {
      throw tcm::ConfigError(g.config_path + ": experiment is '" + tcm::experiment_name(config.experiment) +
                             "' but the subcommand is '" + tcm::experiment_name(kind) + "'");
    }
  }
  if (g.seed) config.master_seed = *g.seed;
  tcm::resolve_defaults(config);
  if (!g.out_dir.empty()) config.output_path = g.out_dir;
  if (g.threads) config.threads = *g.threads;
  if (g.format == "json") config.format = tcm::TableFormat::Json;
  if (g.format == "csv") config.format = tcm::TableFormat::Csv;
  return config;
}

fs::path output_file(const tcm::ExperimentConfig& config, const std::string& stem) {
  const char* ext = config.format == tcm::TableFormat::Json ? ".json" : ".csv";
  return fs::path(config.output_path) / (stem + ext);
}

void write_canonical_config(const tcm::ExperimentConfig& config) {
  const fs::path dir(config.output_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path path = dir / "config.yaml";
  std::ofstream out(path, std::ios::binary);
  out << tcm::canonical_config(config);
  if (!out) throw tcm::IoError(path.string() + ": cannot write configuration copy");
}

void save(const tcm::ResultTable& table, const tcm::ExperimentConfig& config, const std::string& stem) {
  const auto path = output_file(config, stem);
  tcm::save_table(table, path, config.format);
  std::cout << "wrote " << path.string() << " (" << table.rows().size() << " rows)\n";
}

void print_meta(const tcm::ResultTable& table, const std::string& prefix) {
  for (const auto& [key, value] : table.metadata()) {
    if (key.rfind(prefix, 0) == 0 || key == "fit_notice") std::cout << "  " << key << " = " << value << "\n";
  }
}

void run(tcm::ExperimentKind kind, const GlobalOptions& g) {
  const auto config = prepare(kind, g);
  write_canonical_config(config);
  switch (kind) {
    case tcm::ExperimentKind::RabiScaling: {
      const auto table = tcm::run_rabi_scaling(config);
      save(table, config, "rabi_scaling");
      print_meta(table, "fit_");
      break;
    }
    case tcm::ExperimentKind::RealizationSpectra: {
      const auto tables = tcm::run_realization_spectra(config);
      for (std::size_t i = 0; i < tables.size(); ++i) {
        save(tables[i], config, "spectra_delta" + *tables[i].meta("spread"));
      }
      break;
    }
    case tcm::ExperimentKind::MesoFluctuations: {
      const auto table = tcm::run_meso_fluctuations(config);
      save(table, config, "meso");
      print_meta(table, "fit_");
      print_meta(table, "collapse_");
      break;
    }
    case tcm::ExperimentKind::CenterSweep: {
      save(tcm::run_center_sweep(config), config, "center_sweep");
      break;
    }
    case tcm::ExperimentKind::CalibrationRoundTrip: {
      const auto table = tcm::run_calibration_roundtrip(config);
      save(table, config, "calibration");
      print_meta(table, "residual_");
      print_meta(table, "converged");
      break;
    }
  }
}

void refit(const std::string& path) {
  const auto table = tcm::load_table(path);
  const auto experiment = table.meta("experiment");
  if (!experiment) throw tcm::ConfigError(path + ": table has no 'experiment' metadata");
  const auto kind = tcm::parse_experiment(*experiment);
  if (kind == tcm::ExperimentKind::RabiScaling) {
    const auto fit = tcm::refit_rabi_table(table);
    std::cout << "fit_exponent = " << tcm::format_real(fit.exponent) << "\n"
              << "fit_exponent_stderr = " << tcm::format_real(fit.exponent_stderr) << "\n"
              << "fit_amplitude = " << tcm::format_real(fit.amplitude) << "\n"
              << "fit_amplitude_stderr = " << tcm::format_real(fit.amplitude_stderr) << "\n";
  } else if (kind == tcm::ExperimentKind::MesoFluctuations) {
    const auto fit = tcm::refit_meso_table(table);
    std::cout << "fit_a = " << tcm::format_real(fit.a) << "\n"
              << "fit_gamma = " << tcm::format_real(fit.gamma_exp) << "\n"
              << "fit_c1_re = " << tcm::format_real(fit.c1.real()) << "\n"
              << "fit_c1_im = " << tcm::format_real(fit.c1.imag()) << "\n"
              << "fit_b = " << tcm::format_real(fit.b) << "\n"
              << "fit_beta = " << tcm::format_real(fit.beta_exp) << "\n"
              << "fit_delta = " << tcm::format_real(fit.delta_exp) << "\n"
              << "fit_c2 = " << tcm::format_real(fit.c2) << "\n";
  } else {
    throw tcm::ConfigError(path + ": the fit subcommand handles rabi-scaling and meso tables, not '" + *experiment +
                           "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tavis-Cummings disorder simulator"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  app.add_option("--config", g.config_path, "YAML experiment configuration")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", g.out_dir, "output directory (overrides the config)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads, 0 = all cores");
  app.add_option("--format", g.format, "table format")->check(CLI::IsMember({"csv", "json"}));

  const std::vector<std::pair<std::string, tcm::ExperimentKind>> experiments = {
      {"rabi-scaling", tcm::ExperimentKind::RabiScaling},
      {"spectra", tcm::ExperimentKind::RealizationSpectra},
      {"meso", tcm::ExperimentKind::MesoFluctuations},
      {"center-sweep", tcm::ExperimentKind::CenterSweep},
      {"calibrate", tcm::ExperimentKind::CalibrationRoundTrip}};
  const std::map<std::string, std::string> help = {
      {"rabi-scaling", "collective Rabi splitting against qubit number"},
      {"spectra", "transmission spectra of individual disorder realizations"},
      {"meso", "disorder-averaged transmission and its mesoscopic fluctuations"},
      {"center-sweep", "spectra while the disordered band is shifted rigidly"},
      {"calibrate", "synthetic flux-calibration round trip"}};
  for (const auto& [name, kind] : experiments) app.add_subcommand(name, help.at(name));

  std::string table_path;
  auto* fit_cmd = app.add_subcommand("fit", "repeat the fit stored with a result table");
  fit_cmd->add_option("table", table_path, "rabi-scaling or meso result table")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (*seed_opt) g.seed = seed;
  if (*threads_opt) g.threads = threads;

  try {
    if (*fit_cmd) {
      refit(table_path);
    } else {
      for (const auto& [name, kind] : experiments) {
        if (app.got_subcommand(name)) run(kind, g);
      }
    }
  } catch (const tcm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const tcm::InvalidArgument& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
    return kConfigError;
  } catch (const tcm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const tcm::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}
