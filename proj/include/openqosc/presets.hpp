#pragma once

#include "openqosc/config.hpp"

#include <string>
#include <vector>

namespace openqosc {

/// Names of the shipped figure presets (fig1-lorentzian, fig2a, ...).
std::vector<std::string> preset_names();

/// Configuration text of a preset, as shipped in configs/<name>.cfg.
/// Throws ConfigError for an unknown name.
const std::string& preset_text(const std::string& name);

KeyValues preset_values(const std::string& name);

}  // namespace openqosc
