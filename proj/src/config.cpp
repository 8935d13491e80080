#include "openqosc/config.hpp"

#include "openqosc/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace openqosc {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("invalid number for " + key + ": '" + text + "'");
  return value;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  unsigned long long value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("invalid integer for " + key + ": '" + text + "'");
  return static_cast<std::size_t>(value);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError(key + " must be a non-empty comma-separated list");
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (j) out += ", ";
    out += format_double(values[j]);
  }
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "name",           "output.dir",          "system.omega0",          "system.omegas",
      "system.alpha_re", "system.alpha_im",    "spectral.family",        "spectral.s",
      "spectral.eta",   "spectral.omega_c",    "spectral.center",        "spectral.width",
      "spectral.strength", "spectral.table_omega", "spectral.table_density", "grid.n_modes",
      "grid.omega_min", "grid.omega_max",      "grid.scheme",            "propagation.t_max",
      "propagation.dt", "propagation.mode",    "propagation.record_stride", "sweep.axis",
      "sweep.values",   "sweep.parallelism"};
  return keys;
}

class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {
    for (const auto& [key, value] : kv)
      if (!known_keys().count(key) && key.rfind("result.", 0) != 0) throw ConfigError("unknown configuration key: " + key);
  }
  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string text(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }
  double number(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_double(key, it->second);
  }
  std::size_t count(const std::string& key, std::size_t fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_count(key, it->second);
  }

 private:
  const KeyValues& kv_;
};

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(number) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration file " + path.string());
  return parse_key_values(in, path.string());
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
  return out;
}

void apply_assignment(KeyValues& kv, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("empty key in '" + assignment + "'");
  kv[key] = trim(assignment.substr(eq + 1));
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void RunConfig::validate() const {
  system.validate();
  openqosc::validate(spectral);
  grid.validate();
  propagation.validate();
}

DiscretizedBath RunConfig::bath() const {
  DiscretizedBath bath = discretize(spectral, grid);
  if (system.size() > 1) bath = bath.replicated(system.size());
  return bath;
}

RunConfig run_config_from(const KeyValues& kv) {
  const Reader r(kv);
  RunConfig cfg;
  cfg.name = r.text("name", "run");
  cfg.output_dir = r.text("output.dir", "out");

  if (r.has("system.omegas")) {
    if (r.has("system.omega0")) throw ConfigError("system.omega0 and system.omegas are mutually exclusive");
    const auto list = parse_list("system.omegas", r.text("system.omegas", ""));
    cfg.system.omegas = Eigen::Map<const Eigen::VectorXd>(list.data(), static_cast<Index>(list.size()));
  } else {
    cfg.system = SystemSpec::single(r.number("system.omega0", 1.0));
  }
  cfg.alpha = Complex(r.number("system.alpha_re", 1.0), r.number("system.alpha_im", 0.0));

  const std::string family = r.text("spectral.family", "ohmic");
  if (family == "ohmic") {
    OhmicFamily o;
    o.s = r.number("spectral.s", o.s);
    o.eta = r.number("spectral.eta", o.eta);
    o.omega_c = r.number("spectral.omega_c", o.omega_c);
    cfg.spectral = o;
  } else if (family == "lorentzian") {
    Lorentzian l;
    l.center = r.number("spectral.center", l.center);
    l.width = r.number("spectral.width", l.width);
    l.strength = r.number("spectral.strength", l.strength);
    cfg.spectral = l;
  } else if (family == "tabulated") {
    Tabulated t;
    t.omega = parse_list("spectral.table_omega", r.text("spectral.table_omega", ""));
    t.density = parse_list("spectral.table_density", r.text("spectral.table_density", ""));
    cfg.spectral = t;
  } else {
    throw ConfigError("spectral.family must be ohmic, lorentzian or tabulated");
  }
  openqosc::validate(cfg.spectral);

  cfg.grid.n_modes = r.count("grid.n_modes", cfg.grid.n_modes);
  cfg.grid.omega_min = r.number("grid.omega_min", 0.0);
  cfg.grid.omega_max = r.number("grid.omega_max", 10.0 * frequency_scale(cfg.spectral));
  const std::string scheme = r.text("grid.scheme", "midpoint");
  if (scheme == "midpoint")
    cfg.grid.scheme = GridScheme::LinearMidpoint;
  else if (scheme == "gauss-legendre")
    cfg.grid.scheme = GridScheme::GaussLegendre;
  else
    throw ConfigError("grid.scheme must be midpoint or gauss-legendre");
  cfg.grid.validate();

  cfg.propagation.t_max = r.number("propagation.t_max", 50.0);
  const std::string mode = r.text("propagation.mode", "full");
  if (mode == "full")
    cfg.propagation.mode = CouplingMode::FullCoupling;
  else if (mode == "rwa")
    cfg.propagation.mode = CouplingMode::RWA;
  else
    throw ConfigError("propagation.mode must be full or rwa");
  cfg.propagation.record_stride = r.count("propagation.record_stride", 1);
  const std::string dt = r.text("propagation.dt", "auto");
  if (dt == "auto") {
    cfg.auto_dt = true;
    const double guess = default_dt(cfg.system, cfg.bath());
    if (!(cfg.propagation.t_max > 0.0)) throw ConfigError("propagation.t_max must be > 0");
    const double steps = std::ceil(cfg.propagation.t_max / guess - 1e-9);
    cfg.propagation.dt = cfg.propagation.t_max / steps;
  } else {
    cfg.propagation.dt = parse_double("propagation.dt", dt);
  }
  cfg.validate();
  return cfg;
}

KeyValues to_key_values(const RunConfig& cfg) {
  KeyValues kv;
  kv["name"] = cfg.name;
  kv["output.dir"] = cfg.output_dir.string();
  if (cfg.system.size() == 1) {
    kv["system.omega0"] = format_double(cfg.system.omega0());
  } else {
    kv["system.omegas"] = join(std::vector<double>(cfg.system.omegas.data(),
                                                   cfg.system.omegas.data() + cfg.system.size()));
  }
  kv["system.alpha_re"] = format_double(cfg.alpha.real());
  kv["system.alpha_im"] = format_double(cfg.alpha.imag());
  std::visit(
      [&](const auto& spec) {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, OhmicFamily>) {
          kv["spectral.family"] = "ohmic";
          kv["spectral.s"] = format_double(spec.s);
          kv["spectral.eta"] = format_double(spec.eta);
          kv["spectral.omega_c"] = format_double(spec.omega_c);
        } else if constexpr (std::is_same_v<T, Lorentzian>) {
          kv["spectral.family"] = "lorentzian";
          kv["spectral.center"] = format_double(spec.center);
          kv["spectral.width"] = format_double(spec.width);
          kv["spectral.strength"] = format_double(spec.strength);
        } else {
          kv["spectral.family"] = "tabulated";
          kv["spectral.table_omega"] = join(spec.omega);
          kv["spectral.table_density"] = join(spec.density);
        }
      },
      cfg.spectral);
  kv["grid.n_modes"] = std::to_string(cfg.grid.n_modes);
  kv["grid.omega_min"] = format_double(cfg.grid.omega_min);
  kv["grid.omega_max"] = format_double(cfg.grid.omega_max);
  kv["grid.scheme"] = cfg.grid.scheme == GridScheme::LinearMidpoint ? "midpoint" : "gauss-legendre";
  kv["propagation.t_max"] = format_double(cfg.propagation.t_max);
  kv["propagation.dt"] = format_double(cfg.propagation.dt);
  kv["propagation.mode"] = cfg.propagation.mode == CouplingMode::FullCoupling ? "full" : "rwa";
  kv["propagation.record_stride"] = std::to_string(cfg.propagation.record_stride);
  return kv;
}

std::string SweepConfig::axis_key() const {
  if (axis == "eta" || axis == "s" || axis == "omega_c") return "spectral." + axis;
  if (axis == "omega0") return "system.omega0";
  if (axis == "dt") return "propagation.dt";
  if (axis == "n_modes") return "grid.n_modes";
  throw ConfigError("sweep.axis must be one of eta, s, omega_c, omega0, dt, n_modes");
}

RunConfig SweepConfig::point(std::size_t index) const {
  KeyValues kv = base_values;
  kv[axis_key()] = values.at(index);
  return run_config_from(kv);
}

SweepConfig sweep_config_from(const KeyValues& kv) {
  SweepConfig sweep;
  sweep.base_values = kv;
  sweep.base = run_config_from(kv);
  sweep.axis = Reader(kv).text("sweep.axis", "");
  if (sweep.axis.empty()) throw ConfigError("sweep.axis is required");
  const std::string key = sweep.axis_key();
  if ((sweep.axis == "eta" || sweep.axis == "s" || sweep.axis == "omega_c") &&
      !std::holds_alternative<OhmicFamily>(sweep.base.spectral))
    throw ConfigError("sweep axis " + sweep.axis + " requires spectral.family = ohmic");
  if (sweep.axis == "omega0" && sweep.base.system.size() != 1)
    throw ConfigError("sweep axis omega0 requires a single system oscillator");
  sweep.values = split_list(Reader(kv).text("sweep.values", ""));
  if (sweep.values.empty()) throw ConfigError("sweep.values must be a non-empty list");
  for (const auto& v : sweep.values) {
    if (sweep.axis == "n_modes")
      parse_count(key, v);
    else
      parse_double(key, v);
  }
  sweep.parallelism = Reader(kv).count("sweep.parallelism", 1);
  if (sweep.parallelism == 0) throw ConfigError("sweep.parallelism must be positive");
  for (std::size_t j = 0; j < sweep.values.size(); ++j) sweep.point(j);
  return sweep;
}

}  // namespace openqosc
