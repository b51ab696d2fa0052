#include <string>

#include "doctest.h"

#include "beq/config.hpp"

using namespace beq;

namespace {

const char* kMinimal = R"(
[preference]
family = weighted
rho = 0.25
gamma = -0.5

[market]
T = 1
mu = [0.08]
sigma = [[0.2]]
)";

std::string config_error(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

bool contains(const std::string& s, const std::string& what) { return s.find(what) != std::string::npos; }

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const RunConfig cfg = parse_config_string(kMinimal);
  REQUIRE(cfg.preference.has_value());
  REQUIRE(cfg.market.has_value());
  CHECK_FALSE(cfg.constraint.has_value());
  CHECK(cfg.solver.n_steps == 2048);
  CHECK(cfg.solver.quad_order == 96);
  CHECK(cfg.solver.problem == Problem::Constrained);
  CHECK(cfg.verify.sim.n_paths == 100000);
  CHECK(cfg.market->d() == 1);
  CHECK(cfg.market->r(0.0) == 0.0);
}

TEST_CASE("R below r names market.R") {
  const std::string msg = config_error(std::string(kMinimal) + "r = 0.05\nR = 0.02\n");
  CHECK(contains(msg, "market.R"));
}

TEST_CASE("weighted gamma outside (-1, 0] is rejected with the bound") {
  std::string text = kMinimal;
  text.replace(text.find("gamma = -0.5"), 12, "gamma = 0.5");
  const std::string msg = config_error(text);
  CHECK(contains(msg, "preference."));
  CHECK(contains(msg, "-1 < gamma <= 0"));
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_ini("[a]\nx = [1, 2\n", "cfg.ini");
    FAIL("expected a syntax error");
  } catch (const Error& e) {
    CHECK(contains(e.what(), "cfg.ini:2:"));
  }
  CHECK_THROWS_AS(parse_ini("[a\nx = 1\n"), Error);
  CHECK_THROWS_AS(parse_ini("x = 1\n"), Error);
  CHECK_THROWS_AS(parse_ini("[a]\nx = 1\nx = 2\n"), Error);
}

TEST_CASE("ini values") {
  const IniDocument doc = parse_ini("[s]\na = 1.5e-2\nb = word\nc = [(1, 2), (3, 4)]\nd = \"quoted text\" # note\n");
  const auto& s = doc.sections.at("s");
  CHECK(std::get<double>(s.at("a").value.data) == 0.015);
  CHECK(std::get<std::string>(s.at("b").value.data) == "word");
  CHECK(s.at("c").value.is_list());
  CHECK(std::get<std::vector<IniValue>>(s.at("c").value.data).size() == 2);
  CHECK(std::get<std::string>(s.at("d").value.data) == "quoted text");
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK(contains(config_error(std::string(kMinimal) + "mu_typo = 1\n"), "market.mu_typo"));
  CHECK(contains(config_error(std::string(kMinimal) + "[extras]\nx = 1\n"), "extras"));
}

TEST_CASE("mixed CRRA and plugin families") {
  const RunConfig mixed = parse_config_string(R"(
[preference]
family = mixed_crra
gammas = [-1, 0.5]
weights = [0.5, 0.5]
[market]
T = 2
mu = [0.07]
sigma = [[0.2]]
r = 0.01
R = 0.04
[solver]
problem = borrowing
)");
  CHECK(mixed.solver.problem == Problem::Borrowing);
  CHECK(mixed.market->R(1.0) == 0.04);
  const RunConfig plugin = parse_config_string(R"(
[preference]
family = plugin
name = log_hyperbolic
c = 0.3
[market]
T = 1
mu = [0.07]
sigma = [[0.2]]
)");
  CHECK(plugin.preference->F(2.0) > 0.0);
  CHECK(contains(config_error(R"(
[preference]
family = plugin
name = nope
)"),
                 "nope"));
}

TEST_CASE("piecewise market and intersection constraint") {
  const RunConfig cfg = parse_config_string(R"(
[preference]
family = weighted
rho = 0.25
gamma = -0.5
[market]
T = 1
mu.nodes = [0, 1]
mu = [[0.09, 0.05], [0.07, 0.06]]
sigma = [[0.2, 0.0], [0.05, 0.15]]
[constraint]
type = intersection
members = [long_only, budget]
witness = [0.25, 0.25]
[constraint.long_only]
type = orthant
[constraint.budget]
type = halfspace
normal = [1, 1]
offset = 1
[verify]
alternatives = [(0.1, 0.2), (0.5, 0.5)]
eps_ladder = [0.1, 0.05]
seed = 9
scheme = euler
)");
  CHECK(cfg.market->d() == 2);
  CHECK(cfg.market->mu(0.5)[0] == doctest::Approx(0.08));
  CHECK(cfg.constraint->is_intersection());
  CHECK(cfg.verify.alternatives.size() == 2);
  CHECK(cfg.verify.sim.seed == 9);
  CHECK(cfg.verify.sim.scheme == Scheme::EulerLog);
}

TEST_CASE("semantic errors name their key") {
  std::string base = kMinimal;
  CHECK(contains(config_error(base + "[verify]\nn_paths = -4\n"), "verify.n_paths"));
  CHECK(contains(config_error(base + "[verify]\nseed = 1e17\n"), "verify.seed"));
  CHECK(contains(config_error(base + "[verify]\neps_ladder = [0.01, 0.1]\n"), "verify.eps_ladder"));
  CHECK(contains(config_error(base + "[solver]\nproblem = other\n"), "solver.problem"));
  CHECK(contains(config_error(base + "[constraint]\ntype = ball\ncenter = [0]\nradius = -1\n"), "constraint"));
  std::string bad_sigma = kMinimal;
  bad_sigma.replace(bad_sigma.find("[[0.2]]"), 7, "[[0.2, 0.1]]");
  CHECK(contains(config_error(bad_sigma), "market.sigma"));
}

TEST_CASE("missing files are IO errors") {
  try {
    parse_config("/nonexistent/config.ini");
    FAIL("expected an IO error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
