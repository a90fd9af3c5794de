#include "tcm/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "tcm/errors.hpp"

namespace tcm {

namespace {

const std::vector<std::pair<ExperimentKind, std::string>> kExperimentNames = {
    {ExperimentKind::RabiScaling, "rabi-scaling"},
    {ExperimentKind::RealizationSpectra, "spectra"},
    {ExperimentKind::MesoFluctuations, "meso"},
    {ExperimentKind::CenterSweep, "center-sweep"},
    {ExperimentKind::CalibrationRoundTrip, "calibrate"},
};

// Walks a YAML document, reporting violations as "source:line: message".
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    std::ostringstream out;
    out << source_;
    if (node.IsDefined() && node.Mark().line >= 0) out << ":" << node.Mark().line + 1;
    out << ": " << message;
    throw ConfigError(out.str());
  }

  void require_map(const YAML::Node& node, const std::string& path) const {
    if (!node.IsMap()) fail(node, "'" + path + "' must be a mapping");
  }

  void check_keys(const YAML::Node& node, const std::string& path, const std::vector<std::string>& allowed) const {
    require_map(node, path);
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(kv.first, "unknown key '" + key + "' in " + (path.empty() ? std::string("top level") : "'" + path + "'") +
                           " (nearest valid key: '" + nearest_key(key, allowed) + "')");
      }
    }
  }

  double quantity(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, "'" + path + "' must be a number (MHz) or a string like '5.755 GHz'");
    const std::string text = node.Scalar();
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      fail(node, "'" + path + "' expects a number, got '" + text + "'");
    }
    std::string unit = text.substr(used);
    unit.erase(std::remove_if(unit.begin(), unit.end(), [](unsigned char c) { return std::isspace(c); }), unit.end());
    std::transform(unit.begin(), unit.end(), unit.begin(), [](unsigned char c) { return std::tolower(c); });
    if (unit == "ghz") {
      value *= kMHzPerGHz;
    } else if (unit == "khz") {
      value /= 1000.0;
    } else if (!unit.empty() && unit != "mhz") {
      fail(node, "'" + path + "' has unknown unit '" + text.substr(used) + "' (use MHz or GHz)");
    }
    if (!std::isfinite(value)) fail(node, "'" + path + "' must be finite");
    return value;
  }

  double number(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, "'" + path + "' must be a number");
    try {
      std::size_t used = 0;
      const double v = std::stod(node.Scalar(), &used);
      if (used != node.Scalar().size()) throw std::invalid_argument("trailing");
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
      return v;
    } catch (const std::exception&) {
      fail(node, "'" + path + "' expects a number, got '" + node.Scalar() + "'");
    }
  }

  std::uint64_t unsigned_integer(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, "'" + path + "' must be a non-negative integer");
    const std::string& s = node.Scalar();
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
      fail(node, "'" + path + "' expects a non-negative integer, got '" + s + "'");
    }
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      fail(node, "'" + path + "' is out of range");
    }
  }

  bool boolean(const YAML::Node& node, const std::string& path) const {
    bool value = false;
    if (!node.IsScalar() || !YAML::convert<bool>::decode(node, value)) fail(node, "'" + path + "' must be true or false");
    return value;
  }

  std::string text(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, "'" + path + "' must be a string");
    return node.Scalar();
  }

  std::vector<std::size_t> index_range(const YAML::Node& node, const std::string& path) const {
    std::vector<std::size_t> out;
    if (node.IsSequence()) {
      for (const auto& item : node) out.push_back(static_cast<std::size_t>(unsigned_integer(item, path)));
    } else if (node.IsMap()) {
      check_keys(node, path, {"first", "last"});
      if (!node["first"] || !node["last"]) fail(node, "'" + path + "' range needs both 'first' and 'last'");
      const auto first = unsigned_integer(node["first"], path + ".first");
      const auto last = unsigned_integer(node["last"], path + ".last");
      if (last < first) fail(node, "'" + path + "' has last < first");
      for (auto n = first; n <= last; ++n) out.push_back(static_cast<std::size_t>(n));
    } else {
      fail(node, "'" + path + "' must be a list of integers or {first, last}");
    }
    if (out.empty()) fail(node, "'" + path + "' must not be empty");
    return out;
  }

  std::vector<double> quantity_list(const YAML::Node& node, const std::string& path) const {
    if (!node.IsSequence()) fail(node, "'" + path + "' must be a list");
    std::vector<double> out;
    for (const auto& item : node) out.push_back(quantity(item, path));
    if (out.empty()) fail(node, "'" + path + "' must not be empty");
    return out;
  }

 private:
  std::string source_;
};

std::string fmt(double v) { return format_real(v); }

}  // namespace

std::string experiment_name(ExperimentKind kind) {
  for (const auto& [k, name] : kExperimentNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentKind parse_experiment(const std::string& name) {
  for (const auto& [k, n] : kExperimentNames) {
    if (n == name) return k;
  }
  std::vector<std::string> names;
  for (const auto& kv : kExperimentNames) names.push_back(kv.second);
  throw ConfigError("unknown experiment '" + name + "' (nearest: '" + nearest_key(name, names) + "')");
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_distance = std::string::npos;
  for (const auto& c : candidates) {
    std::vector<std::size_t> prev(c.size() + 1), cur(c.size() + 1);
    for (std::size_t j = 0; j <= c.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= key.size(); ++i) {
      cur[0] = i;
      for (std::size_t j = 1; j <= c.size(); ++j) {
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (key[i - 1] == c[j - 1] ? 0u : 1u)});
      }
      std::swap(prev, cur);
    }
    if (prev[c.size()] < best_distance) {
      best_distance = prev[c.size()];
      best = c;
    }
  }
  return best;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig config;
  config.experiment = kind;
  resolve_defaults(config);
  return config;
}

void resolve_defaults(ExperimentConfig& c) {
  const double nu_c = c.system.cavity.nu_c;
  const double g = c.system.g;
  if (std::isnan(c.disorder.mean)) c.disorder.mean = nu_c;
  c.disorder.master_seed = c.master_seed;

  if (c.delta_range.empty()) c.delta_range = {20, 30, 50, 60, 70, 80, 120};
  if (c.n_range.empty()) {
    const std::size_t last = c.experiment == ExperimentKind::RabiScaling ? 23 : 17;
    for (std::size_t n = 3; n <= last; ++n) c.n_range.push_back(n);
  }
  if (c.n_realizations == 0) {
    c.n_realizations = c.experiment == ExperimentKind::RealizationSpectra ? 3 : 1000;
  }
  if (c.grid.points == 0) {
    double half = 400.0;
    double centre = nu_c;
    if (c.experiment == ExperimentKind::RealizationSpectra) {
      const double max_delta = *std::max_element(c.delta_range.begin(), c.delta_range.end());
      centre = c.disorder.mean;
      half = std::max(max_delta, 4.0 * g * std::sqrt(static_cast<double>(c.spectra.n_qubits)));
    } else if (c.experiment == ExperimentKind::CenterSweep) {
      const auto& s = c.center_sweep;
      half = std::max(std::abs(s.offset_min), std::abs(s.offset_max)) + 0.5 * s.spread +
             2.0 * g * std::sqrt(static_cast<double>(s.n_qubits)) + 50.0;
    }
    c.grid = {centre - half, centre + half, 4001};
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsDefined() || root.IsNull()) throw ConfigError(source + ": empty configuration");
  rd.check_keys(root, "",
                {"experiment", "master_seed", "output_path", "format", "threads", "system", "disorder", "grid",
                 "n_realizations", "n_range", "delta_range", "rabi", "spectra", "meso", "center_sweep",
                 "calibration"});
  if (!root["experiment"]) rd.fail(root, "missing required key 'experiment'");

  ExperimentConfig c;
  try {
    c.experiment = parse_experiment(rd.text(root["experiment"], "experiment"));
  } catch (const ConfigError& e) {
    rd.fail(root["experiment"], e.what());
  }
  c.disorder.mean = std::nan("");

  if (auto n = root["master_seed"]) c.master_seed = rd.unsigned_integer(n, "master_seed");
  if (auto n = root["output_path"]) c.output_path = rd.text(n, "output_path");
  if (auto n = root["threads"]) c.threads = static_cast<std::size_t>(rd.unsigned_integer(n, "threads"));
  if (auto n = root["format"]) {
    const auto f = rd.text(n, "format");
    if (f == "csv") c.format = TableFormat::Csv;
    else if (f == "json") c.format = TableFormat::Json;
    else rd.fail(n, "'format' must be csv or json");
  }

  if (auto sys = root["system"]) {
    rd.check_keys(sys, "system", {"cavity", "qubits", "n_total", "park_offset", "remove_parked"});
    if (auto cav = sys["cavity"]) {
      rd.check_keys(cav, "system.cavity", {"nu_c", "kappa", "gamma_in", "gamma_out"});
      if (auto v = cav["nu_c"]) c.system.cavity.nu_c = rd.quantity(v, "system.cavity.nu_c");
      if (auto v = cav["kappa"]) c.system.cavity.kappa = rd.quantity(v, "system.cavity.kappa");
      if (auto v = cav["gamma_in"]) c.system.cavity.gamma_in = rd.quantity(v, "system.cavity.gamma_in");
      if (auto v = cav["gamma_out"]) c.system.cavity.gamma_out = rd.quantity(v, "system.cavity.gamma_out");
    }
    if (auto q = sys["qubits"]) {
      rd.check_keys(q, "system.qubits", {"g", "gamma"});
      if (auto v = q["g"]) c.system.g = rd.quantity(v, "system.qubits.g");
      if (auto v = q["gamma"]) c.system.gamma = rd.quantity(v, "system.qubits.gamma");
    }
    if (auto v = sys["n_total"]) c.system.n_total = static_cast<std::size_t>(rd.unsigned_integer(v, "system.n_total"));
    if (auto v = sys["park_offset"]) c.system.park_offset = rd.quantity(v, "system.park_offset");
    if (auto v = sys["remove_parked"]) c.system.remove_parked = rd.boolean(v, "system.remove_parked");
  }

  if (auto d = root["disorder"]) {
    rd.check_keys(d, "disorder", {"mean", "spread", "shape", "jitter_sigma"});
    if (auto v = d["mean"]) c.disorder.mean = rd.quantity(v, "disorder.mean");
    if (auto v = d["spread"]) c.disorder.spread_delta = rd.quantity(v, "disorder.spread");
    if (auto v = d["jitter_sigma"]) c.disorder.jitter_sigma = rd.quantity(v, "disorder.jitter_sigma");
    if (auto v = d["shape"]) {
      const auto s = rd.text(v, "disorder.shape");
      if (s == "flat") c.disorder.shape = DisorderShape::Flat;
      else if (s == "flat+gaussian") c.disorder.shape = DisorderShape::FlatPlusGaussianJitter;
      else rd.fail(v, "'disorder.shape' must be 'flat' or 'flat+gaussian'");
    }
  }

  if (auto gr = root["grid"]) {
    rd.check_keys(gr, "grid", {"start", "stop", "points"});
    if (!gr["start"] || !gr["stop"] || !gr["points"]) rd.fail(gr, "'grid' needs start, stop and points");
    c.grid.start = rd.quantity(gr["start"], "grid.start");
    c.grid.stop = rd.quantity(gr["stop"], "grid.stop");
    c.grid.points = static_cast<std::size_t>(rd.unsigned_integer(gr["points"], "grid.points"));
    if (c.grid.points < 2 || !(c.grid.stop > c.grid.start)) rd.fail(gr, "'grid' needs stop > start and points >= 2");
  }

  if (auto v = root["n_realizations"]) c.n_realizations = static_cast<std::size_t>(rd.unsigned_integer(v, "n_realizations"));
  if (auto v = root["n_range"]) c.n_range = rd.index_range(v, "n_range");
  if (auto v = root["delta_range"]) c.delta_range = rd.quantity_list(v, "delta_range");

  if (auto r = root["rabi"]) {
    rd.check_keys(r, "rabi", {"jitter_sigma"});
    if (auto v = r["jitter_sigma"]) c.rabi.jitter_sigma = rd.quantity(v, "rabi.jitter_sigma");
  }
  if (auto s = root["spectra"]) {
    rd.check_keys(s, "spectra", {"n_qubits", "noise_sigma"});
    if (auto v = s["n_qubits"]) c.spectra.n_qubits = static_cast<std::size_t>(rd.unsigned_integer(v, "spectra.n_qubits"));
    if (auto v = s["noise_sigma"]) c.spectra.noise_sigma = rd.number(v, "spectra.noise_sigma");
  }
  if (auto m = root["meso"]) {
    rd.check_keys(m, "meso", {"c1_re", "c1_im", "c2", "use_effective_delta", "weighting"});
    double re = 0.0, im = 0.0;
    if (auto v = m["c1_re"]) re = rd.number(v, "meso.c1_re");
    if (auto v = m["c1_im"]) im = rd.number(v, "meso.c1_im");
    c.meso.c1 = {re, im};
    if (auto v = m["c2"]) c.meso.c2 = rd.number(v, "meso.c2");
    if (auto v = m["use_effective_delta"]) c.meso.use_effective_delta = rd.boolean(v, "meso.use_effective_delta");
    if (auto v = m["weighting"]) {
      const auto w = rd.text(v, "meso.weighting");
      if (w == "unweighted") c.meso.weighting = FitWeighting::Unweighted;
      else if (w == "inverse-variance") c.meso.weighting = FitWeighting::InverseVariance;
      else rd.fail(v, "'meso.weighting' must be 'unweighted' or 'inverse-variance'");
    }
  }
  if (auto s = root["center_sweep"]) {
    rd.check_keys(s, "center_sweep", {"n_qubits", "spread", "offset_min", "offset_max", "steps"});
    auto& cs = c.center_sweep;
    if (auto v = s["n_qubits"]) cs.n_qubits = static_cast<std::size_t>(rd.unsigned_integer(v, "center_sweep.n_qubits"));
    if (auto v = s["spread"]) cs.spread = rd.quantity(v, "center_sweep.spread");
    if (auto v = s["offset_min"]) cs.offset_min = rd.quantity(v, "center_sweep.offset_min");
    if (auto v = s["offset_max"]) cs.offset_max = rd.quantity(v, "center_sweep.offset_max");
    if (auto v = s["steps"]) cs.steps = static_cast<std::size_t>(rd.unsigned_integer(v, "center_sweep.steps"));
  }
  if (auto s = root["calibration"]) {
    rd.check_keys(s, "calibration",
                  {"n_qubits", "points_per_sweep", "max_voltage", "noise_sigma", "initial_perturbation"});
    auto& cal = c.calibration;
    if (auto v = s["n_qubits"]) cal.n_qubits = static_cast<std::size_t>(rd.unsigned_integer(v, "calibration.n_qubits"));
    if (auto v = s["points_per_sweep"]) {
      cal.points_per_sweep = static_cast<std::size_t>(rd.unsigned_integer(v, "calibration.points_per_sweep"));
    }
    if (auto v = s["max_voltage"]) cal.max_voltage = rd.number(v, "calibration.max_voltage");
    if (auto v = s["noise_sigma"]) cal.noise_sigma = rd.quantity(v, "calibration.noise_sigma");
    if (auto v = s["initial_perturbation"]) cal.initial_perturbation = rd.number(v, "calibration.initial_perturbation");
  }

  resolve_defaults(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open configuration");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "experiment: " << experiment_name(c.experiment) << "\n";
  out << "master_seed: " << c.master_seed << "\n";
  out << "system:\n";
  out << "  cavity: {nu_c: " << fmt(c.system.cavity.nu_c) << ", kappa: " << fmt(c.system.cavity.kappa)
      << ", gamma_in: " << fmt(c.system.cavity.gamma_in) << ", gamma_out: " << fmt(c.system.cavity.gamma_out) << "}\n";
  out << "  qubits: {g: " << fmt(c.system.g) << ", gamma: " << fmt(c.system.gamma) << "}\n";
  out << "  n_total: " << c.system.n_total << "\n";
  out << "  park_offset: " << fmt(c.system.park_offset) << "\n";
  out << "  remove_parked: " << (c.system.remove_parked ? "true" : "false") << "\n";
  out << "disorder: {mean: " << fmt(c.disorder.mean) << ", spread: " << fmt(c.disorder.spread_delta)
      << ", shape: " << (c.disorder.shape == DisorderShape::Flat ? "flat" : "flat+gaussian")
      << ", jitter_sigma: " << fmt(c.disorder.jitter_sigma) << "}\n";
  out << "grid: {start: " << fmt(c.grid.start) << ", stop: " << fmt(c.grid.stop) << ", points: " << c.grid.points
      << "}\n";
  out << "n_realizations: " << c.n_realizations << "\n";
  out << "n_range: [";
  for (std::size_t i = 0; i < c.n_range.size(); ++i) out << (i ? ", " : "") << c.n_range[i];
  out << "]\n";
  out << "delta_range: [";
  for (std::size_t i = 0; i < c.delta_range.size(); ++i) out << (i ? ", " : "") << fmt(c.delta_range[i]);
  out << "]\n";
  out << "rabi: {jitter_sigma: " << fmt(c.rabi.jitter_sigma) << "}\n";
  out << "spectra: {n_qubits: " << c.spectra.n_qubits << ", noise_sigma: " << fmt(c.spectra.noise_sigma) << "}\n";
  out << "meso: {c1_re: " << fmt(c.meso.c1.real()) << ", c1_im: " << fmt(c.meso.c1.imag()) << ", c2: " << fmt(c.meso.c2)
      << ", use_effective_delta: " << (c.meso.use_effective_delta ? "true" : "false") << ", weighting: "
      << (c.meso.weighting == FitWeighting::Unweighted ? "unweighted" : "inverse-variance") << "}\n";
  const auto& cs = c.center_sweep;
  out << "center_sweep: {n_qubits: " << cs.n_qubits << ", spread: " << fmt(cs.spread)
      << ", offset_min: " << fmt(cs.offset_min) << ", offset_max: " << fmt(cs.offset_max) << ", steps: " << cs.steps
      << "}\n";
  const auto& cal = c.calibration;
  out << "calibration: {n_qubits: " << cal.n_qubits << ", points_per_sweep: " << cal.points_per_sweep
      << ", max_voltage: " << fmt(cal.max_voltage) << ", noise_sigma: " << fmt(cal.noise_sigma)
      << ", initial_perturbation: " << fmt(cal.initial_perturbation) << "}\n";
  return out.str();
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tcm
