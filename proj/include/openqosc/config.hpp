#pragma once

#include "openqosc/bch_coeffs.hpp"
#include "openqosc/propagator.hpp"
#include "openqosc/spectral.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace openqosc {

/// Flat `key = value` configuration, keys sorted.
using KeyValues = std::map<std::string, std::string>;

/// One `key = value` per line; `#` starts a comment; blank lines ignored.
KeyValues parse_key_values(std::istream& in, const std::string& source = "<input>");
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

/// Applies `key=value`.
void apply_assignment(KeyValues& kv, const std::string& assignment);

/// Shortest round-trip decimal representation.
std::string format_double(double x);

struct RunConfig {
  SystemSpec system = SystemSpec::single(1.0);
  SpectralDensity spectral = OhmicFamily{};
  GridConfig grid;
  PropagationConfig propagation;
  /// True when propagation.dt = auto.
  bool auto_dt = false;
  Complex alpha = 1.0;
  std::string name = "run";
  std::filesystem::path output_dir = "out";

  void validate() const;
  DiscretizedBath bath() const;
};

/// Builds a run configuration; unknown keys and malformed values throw ConfigError.
RunConfig run_config_from(const KeyValues& kv);

/// Complete key set reproducing `cfg`.
KeyValues to_key_values(const RunConfig& cfg);

struct SweepConfig {
  RunConfig base;
  KeyValues base_values;
  std::string axis;
  std::vector<std::string> values;
  std::size_t parallelism = 1;

  /// Key overridden by the axis (for example `spectral.eta`).
  std::string axis_key() const;
  /// Run configuration for values[index].
  RunConfig point(std::size_t index) const;
};

/// Axis names: eta, s, omega_c, omega0, dt, n_modes.
SweepConfig sweep_config_from(const KeyValues& kv);

}  // namespace openqosc
