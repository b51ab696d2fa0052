#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "beq/constraint.hpp"
#include "beq/equilibrium.hpp"
#include "beq/gtable.hpp"
#include "beq/montecarlo.hpp"
#include "beq/preference.hpp"

namespace beq {

// ---------------------------------------------------------------------------
// INI layer

/// A config value: a real, a bare or quoted word, or a bracketed list.
/// Parentheses are accepted as list delimiters too, so tuples read the same.
struct IniValue {
  std::variant<double, std::string, std::vector<IniValue>> data;
  int line = 0;
  int column = 0;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_list() const { return std::holds_alternative<std::vector<IniValue>>(data); }
};

struct IniEntry {
  IniValue value;
  int line = 0;
  bool used = false;
};

/// Sections in file order; keys unique within a section.
struct IniDocument {
  std::string source;
  std::map<std::string, std::map<std::string, IniEntry>> sections;
  std::map<std::string, int> section_lines;
};

/// Syntax errors carry "source:line:column".
IniDocument parse_ini(const std::string& text, const std::string& source = "<string>");

// ---------------------------------------------------------------------------
// Typed configuration

struct SolverSettings {
  Problem problem = Problem::Constrained;
  int n_steps = kDefaultSteps;
  double y_max = kDefaultYMax;
  int table_nodes = kDefaultTableNodes;
  int quad_order = kDefaultQuadOrder;
};

struct VerifySettings {
  std::vector<double> t_values;  // empty: five equally spaced points on [0, T]
  std::vector<double> x_values{0.5, 1.0, 2.0};
  SimConfig sim;
  std::vector<double> eps_ladder{0.1, 0.05, 0.02, 0.01};
  std::vector<Vec> alternatives;  // empty: derived from the candidate
  double candidate_scale = 1.0;
  std::string solution;  // solution CSV to verify instead of solving
  double t = 0.0;
  double x = 1.0;
};

struct OutputSettings {
  std::string directory = ".";
  bool emit_plots = false;
};

struct RunConfig {
  std::string source;
  std::filesystem::path base_dir;
  std::optional<BetweennessPreference> preference;
  std::optional<MarketModel> market;
  std::optional<ConvexSet> constraint;
  SolverSettings solver;
  VerifySettings verify;
  OutputSettings output;
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_string(const std::string& text, const std::string& source = "<string>",
                              const std::filesystem::path& base_dir = ".");

}  // namespace beq
