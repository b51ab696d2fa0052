#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "beq/cli.hpp"
#include "beq/io.hpp"

using namespace beq;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "beq_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig weighted_config(const fs::path& out) {
  RunConfig cfg = parse_config_string(R"(
[preference]
family = weighted
rho = 0.25
gamma = -0.5
[market]
T = 1
mu = [0.08]
sigma = [[0.2]]
[verify]
n_paths = 20000
eps_ladder = [0.1, 0.05]
alternatives = [(1.0), (2.4)]
)");
  cfg.output.directory = out.string();
  return cfg;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(Command cmd, const RunConfig& cfg) {
  std::ostringstream out, err;
  const int code = run_command(cmd, cfg, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("solve writes the solution CSV") {
  const fs::path dir = scratch_dir("solve");
  RunConfig cfg = weighted_config(dir);
  cfg.output.emit_plots = true;
  const Run r = run(Command::SolveConstrained, cfg);
  CHECK(r.code == kExitOk);
  CHECK(r.err.empty());
  CHECK(fs::exists(dir / "plot_constrained.py"));
  const auto sol = read_solution_csv(dir / "solution_constrained.csv", *cfg.market);
  CHECK(std::abs(sol.A_vals.front() - 0.1024) < 1e-10);
}

TEST_CASE("verify hjb passes on solver output and fails on a scaled strategy") {
  const fs::path dir = scratch_dir("hjb");
  RunConfig cfg = weighted_config(dir);
  CHECK(run(Command::VerifyHjb, cfg).code == kExitOk);
  CHECK(fs::exists(dir / "hjb.csv"));
  cfg.verify.candidate_scale = 1.5;
  CHECK(run(Command::VerifyHjb, cfg).code == kExitVerificationFail);
}

TEST_CASE("verify hjb reads a stored solution") {
  const fs::path dir = scratch_dir("stored");
  RunConfig cfg = weighted_config(dir);
  REQUIRE(run(Command::SolveConstrained, cfg).code == kExitOk);
  cfg.verify.solution = (dir / "solution_constrained.csv").string();
  CHECK(run(Command::VerifyHjb, cfg).code == kExitOk);
  cfg.solver.problem = Problem::Borrowing;
  const Run r = run(Command::VerifyHjb, cfg);
  CHECK(r.code == kExitError);
  CHECK(r.err.find("verify.solution") != std::string::npos);
}

TEST_CASE("verify perturb") {
  const fs::path dir = scratch_dir("perturb");
  const Run r = run(Command::VerifyPerturb, weighted_config(dir));
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("verdict=Pass") != std::string::npos);
  CHECK(fs::exists(dir / "perturbation.csv"));
}

TEST_CASE("wellposedness exit codes") {
  const fs::path dir = scratch_dir("wp");
  CHECK(run(Command::Wellposedness, weighted_config(dir)).code == kExitOk);
  RunConfig cfg = parse_config_string(R"(
[preference]
family = plugin
name = log_hyperbolic
[market]
T = 1
mu = [0.4]
sigma = [[0.2]]
[solver]
y_max = 1
table_nodes = 65
)");
  cfg.output.directory = dir.string();
  const Run r = run(Command::Wellposedness, cfg);
  CHECK(r.code == kExitNotProven);
  CHECK(r.out.find("verdict=NotProven") != std::string::npos);
}

TEST_CASE("library errors become one machine-readable line") {
  const fs::path dir = scratch_dir("error");
  RunConfig cfg = weighted_config(dir);
  cfg.solver.y_max = 0.05;
  cfg.solver.table_nodes = 32;
  const Run r = run(Command::SolveConstrained, cfg);
  CHECK(r.code == kExitError);
  CHECK(r.err.rfind("error: kind=TableRange message=", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  RunConfig empty;
  empty.output.directory = dir.string();
  const Run e = run(Command::SolveBorrowing, empty);
  CHECK(e.code == kExitError);
  CHECK(e.err.rfind("error: kind=Config", 0) == 0);
}
