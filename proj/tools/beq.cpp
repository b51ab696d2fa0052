#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "beq/cli.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Options& opt) {
  app->add_option("--config", opt.config, "INI configuration file")->required()->check(CLI::ExistingFile);
  app->add_option("--out", opt.out, "Output directory (overrides output.directory)");
  app->add_option("--seed", opt.seed, "Monte Carlo seed (overrides verify.seed)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium portfolio strategies for CRRA betweenness preferences"};
  app.require_subcommand(1);
  Options opt;
  std::optional<beq::Command> cmd;

  CLI::App* solve = app.add_subcommand("solve", "Solve the equilibrium ODE");
  solve->require_subcommand(1);
  CLI::App* constrained = solve->add_subcommand("constrained", "Convex portfolio constraints, zero rate");
  CLI::App* borrowing = solve->add_subcommand("borrowing", "Saving rate r, borrowing rate R");
  CLI::App* wellposed = app.add_subcommand("wellposedness", "Check the no-blow-up conditions");
  CLI::App* verify = app.add_subcommand("verify", "Check a candidate strategy");
  verify->require_subcommand(1);
  CLI::App* hjb = verify->add_subcommand("hjb", "Extended HJB residuals on a (t, x) grid");
  CLI::App* perturb = verify->add_subcommand("perturb", "Monte Carlo perturbation slopes");

  for (CLI::App* sub : {constrained, borrowing, wellposed, hjb, perturb}) add_common(sub, opt);
  constrained->callback([&] { cmd = beq::Command::SolveConstrained; });
  borrowing->callback([&] { cmd = beq::Command::SolveBorrowing; });
  wellposed->callback([&] { cmd = beq::Command::Wellposedness; });
  hjb->callback([&] { cmd = beq::Command::VerifyHjb; });
  perturb->callback([&] { cmd = beq::Command::VerifyPerturb; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? beq::kExitOk : beq::kExitError;
  }

  beq::RunConfig cfg;
  try {
    cfg = beq::parse_config(opt.config);
  } catch (const beq::Error& e) {
    std::cerr << "error: kind=" << beq::to_string(e.kind()) << " message=" << e.what() << '\n';
    return beq::kExitError;
  }
  if (opt.out) cfg.output.directory = *opt.out;
  if (opt.seed) cfg.verify.sim.seed = *opt.seed;
  return beq::run_command(*cmd, cfg, std::cout, std::cerr);
}
