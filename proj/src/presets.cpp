#include "openqosc/presets.hpp"

#include "openqosc/errors.hpp"

#include <map>
#include <sstream>

namespace openqosc {

namespace detail {
const std::map<std::string, std::string>& preset_table();
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : detail::preset_table()) names.push_back(name);
  return names;
}

const std::string& preset_text(const std::string& name) {
  const auto& table = detail::preset_table();
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown preset: " + name);
  return it->second;
}

KeyValues preset_values(const std::string& name) {
  std::istringstream in(preset_text(name));
  return parse_key_values(in, "preset " + name);
}

}  // namespace openqosc
