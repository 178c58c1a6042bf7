#include "frcnet/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace frcnet {

void RunConfig::validate() const {
  system.validate();
  curriculum.validate();
  training.validate();
  network.validate();
  frc.validate();
  if (!(forecast_omega > 0.0))
    throw ValidationError("config: forecast.omega must be > 0");
  if (!(forecast_horizon > 0.0))
    throw ValidationError("config: forecast.horizon must be > 0");
  if (!forecast_ic.allFinite()) throw ValidationError("config: forecast ic not finite");
  if (!(newton_tol > 0.0)) throw ValidationError("config: newton_tol must be > 0");
  if (max_newton_iters < 1)
    throw ValidationError("config: max_newton_iters must be >= 1");
}

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_widths(const std::vector<int>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(w[i]);
  }
  return s;
}

std::vector<int> parse_widths(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ValidationError("config: bad numeric value '" + v + "' for " + key);
  }
}

long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ValidationError("config: bad integer value '" + v + "' for " + key);
  }
}

struct Entry {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define NUM_ENTRY(key, field)                                        \
  Entry{key, [](const RunConfig& c) { return fmt(c.field); },        \
        [](RunConfig& c, const std::string& v) { c.field = parse_double(key, v); }}
#define INT_ENTRY(key, field)                                             \
  Entry{key, [](const RunConfig& c) { return std::to_string(c.field); }, \
        [](RunConfig& c, const std::string& v) { c.field = static_cast<int>(parse_int(key, v)); }}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      NUM_ENTRY("system.xi", system.xi),
      NUM_ENTRY("system.omega_n", system.omega_n),
      NUM_ENTRY("system.length_scale", system.length_scale),
      Entry{"excitation",
            [](const RunConfig& c) {
              return std::string(c.excitation == ForcingKind::harmonic_base ? "base"
                                                                            : "force");
            },
            [](RunConfig& c, const std::string& v) {
              if (v == "base")
                c.excitation = ForcingKind::harmonic_base;
              else if (v == "force")
                c.excitation = ForcingKind::harmonic_force;
              else
                throw ValidationError("config: excitation must be 'force' or 'base'");
            }},
      NUM_ENTRY("curriculum.band_lo", curriculum.band_lo),
      NUM_ENTRY("curriculum.band_hi", curriculum.band_hi),
      INT_ENTRY("curriculum.n_trajectories", curriculum.n_trajectories),
      NUM_ENTRY("curriculum.ic_lo", curriculum.ic_lo),
      NUM_ENTRY("curriculum.ic_hi", curriculum.ic_hi),
      NUM_ENTRY("curriculum.drive_amplitude", curriculum.drive_amplitude),
      NUM_ENTRY("curriculum.horizon", curriculum.horizon),
      NUM_ENTRY("curriculum.sample_fraction", curriculum.sample_fraction),
      NUM_ENTRY("curriculum.dt", curriculum.dt),
      INT_ENTRY("training.epochs", training.epochs),
      INT_ENTRY("training.batch_size", training.batch_size),
      NUM_ENTRY("training.lr_initial", training.lr_initial),
      NUM_ENTRY("training.plateau_factor", training.plateau_factor),
      INT_ENTRY("training.plateau_patience", training.plateau_patience),
      NUM_ENTRY("training.plateau_threshold", training.plateau_threshold),
      NUM_ENTRY("training.norm_margin", training.norm_margin),
      NUM_ENTRY("training.weight_decay", training.weight_decay),
      NUM_ENTRY("training.lr_min", training.lr_min),
      Entry{"training.rms_batch_norm",
            [](const RunConfig& c) { return std::string(c.training.rms_batch_norm ? "1" : "0"); },
            [](RunConfig& c, const std::string& v) {
              c.training.rms_batch_norm = parse_int("training.rms_batch_norm", v) != 0;
            }},
      INT_ENTRY("training.checkpoint_every", training.checkpoint_every),
      Entry{"network.variant",
            [](const RunConfig& c) { return to_string(c.network.variant); },
            [](RunConfig& c, const std::string& v) {
              const NetworkSpec fresh = NetworkSpec::defaults(variant_from_string(v));
              c.network.variant = fresh.variant;
              c.network.branch_widths = fresh.branch_widths;
              c.network.trunk_widths = fresh.trunk_widths;
              c.network.branch_activation_every = fresh.branch_activation_every;
              c.network.trunk_activation_every = fresh.trunk_activation_every;
            }},
      INT_ENTRY("network.latent_dim", network.latent_dim),
      Entry{"network.branch_widths",
            [](const RunConfig& c) { return fmt_widths(c.network.branch_widths); },
            [](RunConfig& c, const std::string& v) { c.network.branch_widths = parse_widths(v); }},
      Entry{"network.trunk_widths",
            [](const RunConfig& c) { return fmt_widths(c.network.trunk_widths); },
            [](RunConfig& c, const std::string& v) { c.network.trunk_widths = parse_widths(v); }},
      INT_ENTRY("network.branch_activation_every", network.branch_activation_every),
      INT_ENTRY("network.trunk_activation_every", network.trunk_activation_every),
      INT_ENTRY("network.phase_activation_every", network.phase_activation_every),
      NUM_ENTRY("frc.f_lo", frc.f_lo),
      NUM_ENTRY("frc.f_hi", frc.f_hi),
      INT_ENTRY("frc.n_points", frc.n_points),
      NUM_ENTRY("frc.drive_amplitude", frc.drive_amplitude),
      NUM_ENTRY("frc.ic_q", frc.ic(0)),
      NUM_ENTRY("frc.ic_qdot", frc.ic(1)),
      NUM_ENTRY("frc.horizon", frc.horizon),
      NUM_ENTRY("frc.tail_fraction", frc.tail_fraction),
      NUM_ENTRY("frc.dt", frc.dt),
      NUM_ENTRY("forecast.omega", forecast_omega),
      NUM_ENTRY("forecast.horizon", forecast_horizon),
      NUM_ENTRY("forecast.ic_q", forecast_ic(0)),
      NUM_ENTRY("forecast.ic_qdot", forecast_ic(1)),
      NUM_ENTRY("forecast.newton_tol", newton_tol),
      INT_ENTRY("forecast.max_newton_iters", max_newton_iters),
      Entry{"sweep.kind",
            [](const RunConfig& c) { return to_string(c.sweep_kind); },
            [](RunConfig& c, const std::string& v) { c.sweep_kind = sweep_kind_from_string(v); }},
      Entry{"seed",
            [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& v) {
              try {
                c.seed = std::stoull(v);
              } catch (...) {
                throw ValidationError("config: bad seed '" + v + "'");
              }
            }},
  };
  return table;
}

#undef NUM_ENTRY
#undef INT_ENTRY

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& e : entries()) {
    if (key == e.key) {
      e.set(cfg, value);
      return;
    }
  }
  throw ValidationError("config: unknown key '" + key + "'");
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config: missing '=' at " + path + ":" + std::to_string(lineno));
    auto trim = [](std::string s) {
      const auto lo = s.find_first_not_of(" \t");
      const auto hi = s.find_last_not_of(" \t\r");
      return lo == std::string::npos ? std::string() : s.substr(lo, hi - lo + 1);
    };
    apply_config_line(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& e : entries()) {
    out += e.key;
    out += " = ";
    out += e.get(cfg);
    out += '\n';
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string s = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.system = SystemParams{0.2, 1.0, 1.0};
  if (name == "ls1" || name == "ls1-bru2") {
    return c;
  }
  if (name == "ls1-bru1") {
    c.curriculum.band_lo = 0.1;
    c.curriculum.band_hi = 0.8;
    return c;
  }
  if (name == "ls1-bru3") {
    c.curriculum.band_lo = 1.5;
    c.curriculum.band_hi = 2.2;
    return c;
  }
  if (name == "ls1a" || name == "ls1b") {
    const bool a = name == "ls1a";
    const double wn = a ? 11.30 : 7.99;
    c.system = SystemParams{0.2, wn, 1.0 / (wn * wn)};
    c.curriculum.dt = a ? 0.0088 : 0.0125;
    c.curriculum.band_lo = a ? 10.50 : 7.50;  // resonant band of the tabulated set
    c.curriculum.band_hi = a ? 11.20 : 8.20;
    c.curriculum.horizon = 3.0 / wn;
    c.curriculum.ic_lo = 0.001 * c.system.length_scale;
    c.curriculum.ic_hi = 1.0 * c.system.length_scale;
    c.frc.f_lo = 0.1 * wn;
    c.frc.f_hi = 10.0 * wn;
    c.frc.dt = c.curriculum.dt;
    c.frc.horizon = 100.0 / wn;
    c.frc.ic = State(0.2 * c.system.length_scale, 0.0);
    c.forecast_omega = a ? 10.53 : 7.45;
    c.forecast_horizon = 100.0 / wn;
    c.forecast_ic = c.frc.ic;
    return c;
  }
  if (name == "ls1-base") {
    c.excitation = ForcingKind::harmonic_base;
    c.training.epochs = 1000;
    c.frc.f_lo = 0.1;
    c.frc.f_hi = 3.0;
    c.frc.n_points = 250;
    return c;
  }
  throw ValidationError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"ls1", "ls1-bru1", "ls1-bru2", "ls1-bru3", "ls1a", "ls1b", "ls1-base"};
}

void write_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = m.format_version;
  j["command"] = m.command;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["phase_seconds"] = {{"dataset", m.seconds.dataset},
                        {"training", m.seconds.training},
                        {"forecasting", m.seconds.forecasting},
                        {"frc", m.seconds.frc}};
  nlohmann::json pct;
  const double total = m.seconds.total();
  const double denom = total > 0.0 ? total : 1.0;
  pct["dataset"] = 100.0 * m.seconds.dataset / denom;
  pct["training"] = 100.0 * m.seconds.training / denom;
  pct["forecasting"] = 100.0 * m.seconds.forecasting / denom;
  pct["frc"] = 100.0 * m.seconds.frc / denom;
  j["phase_percent"] = pct;
  j["artifacts"] = m.artifacts;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
  out << j.dump(2) << "\n";
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("read_manifest: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& ex) {
    throw ValidationError(std::string("read_manifest: invalid json: ") + ex.what());
  }
  for (const char* key :
       {"format_version", "command", "config_hash", "seed", "phase_seconds",
        "phase_percent", "artifacts"})
    if (!j.contains(key))
      throw ValidationError(std::string("read_manifest: missing key '") + key + "'");

  RunManifest m;
  m.format_version = j["format_version"].get<int>();
  if (m.format_version != 1)
    throw ValidationError("read_manifest: unsupported format version");
  m.command = j["command"].get<std::string>();
  m.config_hash = j["config_hash"].get<std::string>();
  m.seed = j["seed"].get<std::uint64_t>();
  const auto& ps = j["phase_seconds"];
  for (const char* key : {"dataset", "training", "forecasting", "frc"})
    if (!ps.contains(key))
      throw ValidationError(std::string("read_manifest: missing phase '") + key + "'");
  m.seconds.dataset = ps["dataset"].get<double>();
  m.seconds.training = ps["training"].get<double>();
  m.seconds.forecasting = ps["forecasting"].get<double>();
  m.seconds.frc = ps["frc"].get<double>();
  const auto& pp = j["phase_percent"];
  double sum = 0.0;
  for (const char* key : {"dataset", "training", "forecasting", "frc"})
    sum += pp.at(key).get<double>();
  if (m.seconds.total() > 0.0 && std::abs(sum - 100.0) > 0.1)
    throw ValidationError("read_manifest: phase percentages do not sum to 100");
  m.artifacts = j["artifacts"].get<std::vector<std::string>>();
  return m;
}

}  // namespace frcnet
