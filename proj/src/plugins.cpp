#include "beq/plugins.hpp"

#include <cmath>
#include <mutex>

#include "beq/error.hpp"

namespace beq {

namespace {

// F(x) = log x + c (1 - 1/x). Relative risk aversion (x + 2c) / (x + c)
// lies in [1, 2], so G <= 1.
GeneratorPlugin log_hyperbolic() {
  GeneratorPlugin p;
  p.name = "log_hyperbolic";
  p.description = "F(x) = log(x) + c (1 - 1/x), c >= 0";
  p.params = {{"c", 0.5}};
  p.make = [](const std::map<std::string, double>& params) {
    const double c = params.at("c");
    if (!(c >= 0.0) || !std::isfinite(c)) throw Error(ErrorKind::Config, "log_hyperbolic needs c >= 0");
    CustomGenerator g;
    g.name = "log_hyperbolic(c=" + std::to_string(c) + ")";
    g.F = [c](double x) { return std::log(x) + c * (1.0 - 1.0 / x); };
    g.dF = [c](double x) { return 1.0 / x + c / (x * x); };
    g.d2F = [c](double x) { return -1.0 / (x * x) - 2.0 * c / (x * x * x); };
    g.growth_exponent = 1.0;
    g.rra_lower_bound = 1.0;
    return g;
  };
  return p;
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, GeneratorPlugin> plugins;

  Registry() {
    GeneratorPlugin p = log_hyperbolic();
    plugins.emplace(p.name, std::move(p));
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_generator(GeneratorPlugin plugin) {
  if (plugin.name.empty() || !plugin.make) throw Error(ErrorKind::Config, "plugin needs a name and a factory");
  Registry& r = registry();
  std::lock_guard lock(r.mutex);
  r.plugins.insert_or_assign(plugin.name, std::move(plugin));
}

const GeneratorPlugin& find_generator(const std::string& name) {
  Registry& r = registry();
  std::lock_guard lock(r.mutex);
  auto it = r.plugins.find(name);
  if (it == r.plugins.end()) throw Error(ErrorKind::Config, "unknown generator plugin '" + name + "'");
  return it->second;
}

std::vector<std::string> generator_names() {
  Registry& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> out;
  for (const auto& [name, p] : r.plugins) out.push_back(name);
  return out;
}

BetweennessPreference make_plugin_preference(const std::string& name, const std::map<std::string, double>& params) {
  const GeneratorPlugin& plugin = find_generator(name);
  std::map<std::string, double> full;
  for (const auto& [key, def] : plugin.params) full[key] = def;
  for (const auto& [key, value] : params) {
    if (!full.contains(key)) throw Error(ErrorKind::Config, "plugin '" + name + "' has no parameter '" + key + "'");
    full[key] = value;
  }
  return BetweennessPreference::custom(plugin.make(full));
}

}  // namespace beq
