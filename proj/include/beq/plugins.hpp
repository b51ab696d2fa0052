#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "beq/preference.hpp"

namespace beq {

/// Named factory for custom generators, selectable from a config file with
/// `family = plugin` and `name = <name>`. Parameters are plain reals.
struct GeneratorPlugin {
  std::string name;
  std::string description;
  /// Parameter names with their defaults.
  std::vector<std::pair<std::string, double>> params;
  std::function<CustomGenerator(const std::map<std::string, double>&)> make;
};

/// Adds or replaces a plugin.
void register_generator(GeneratorPlugin plugin);

/// Throws Config for an unknown name.
const GeneratorPlugin& find_generator(const std::string& name);

std::vector<std::string> generator_names();

/// Builds the preference from a plugin, filling missing parameters with
/// their defaults. Unknown parameter names are rejected.
BetweennessPreference make_plugin_preference(const std::string& name, const std::map<std::string, double>& params);

}  // namespace beq
