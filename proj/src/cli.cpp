#include "beq/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>

#include "beq/io.hpp"
#include "beq/verify.hpp"

namespace beq {

namespace {

namespace fs = std::filesystem;

template <typename T>
const T& require(const std::optional<T>& v, const char* section) {
  if (!v) throw Error(ErrorKind::Config, std::string("this command needs a [") + section + "] section");
  return *v;
}

struct Context {
  const BetweennessPreference& pref;
  const MarketModel& model;
  ConvexSet set;
  QuadratureRule quad;
  GTable table;
};

Context make_context(const RunConfig& cfg) {
  const BetweennessPreference& pref = require(cfg.preference, "preference");
  const MarketModel& model = require(cfg.market, "market");
  ConvexSet set = cfg.constraint ? *cfg.constraint : ConvexSet::full_space(model.d());
  QuadratureRule quad = gauss_hermite_normal(cfg.solver.quad_order);
  GTable table = build_G_table(pref, cfg.solver.y_max, cfg.solver.table_nodes, quad);
  return {pref, model, std::move(set), std::move(quad), std::move(table)};
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir = cfg.output.directory;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

EquilibriumSolution solve(const Context& ctx, const RunConfig& cfg, Problem problem) {
  if (problem == Problem::Constrained) return solve_constrained(ctx.table, ctx.model, ctx.set, cfg.solver.n_steps);
  return solve_borrowing(ctx.table, ctx.model, cfg.solver.n_steps);
}

// The solution under test: a stored CSV or a fresh solve, optionally with
// every u scaled (A and B are then recomputed from the scaled strategy).
EquilibriumSolution candidate(const Context& ctx, const RunConfig& cfg) {
  EquilibriumSolution sol;
  if (!cfg.verify.solution.empty()) {
    fs::path p = cfg.verify.solution;
    if (p.is_relative()) p = cfg.base_dir / p;
    sol = read_solution_csv(p, ctx.model);
    if (sol.problem != cfg.solver.problem) {
      throw Error(ErrorKind::Config, "key `verify.solution`: file holds a " + std::string(to_string(sol.problem)) +
                                         " solution but solver.problem is " +
                                         std::string(to_string(cfg.solver.problem)));
    }
  } else {
    sol = solve(ctx, cfg, cfg.solver.problem);
  }
  if (cfg.verify.candidate_scale != 1.0) {
    std::vector<Vec> u;
    for (const Vec& v : sol.u_vals) u.push_back(v * cfg.verify.candidate_scale);
    sol = candidate_from_strategy(ctx.model, sol.problem, sol.t_grid, std::move(u));
  }
  return sol;
}

std::vector<double> t_values(const RunConfig& cfg, const MarketModel& model) {
  if (!cfg.verify.t_values.empty()) return cfg.verify.t_values;
  std::vector<double> t;
  for (int i = 0; i <= 4; ++i) t.push_back(model.T() * i / 4.0);
  t.back() = model.T();
  return t;
}

// Default alternatives: u(t) scaled by 0, 0.5, 1.25 and 1.5, projected into
// the constraint set for the constrained problem, plus nothing else.
std::vector<Vec> alternatives(const Context& ctx, const EquilibriumSolution& sol, const RunConfig& cfg) {
  if (!cfg.verify.alternatives.empty()) return cfg.verify.alternatives;
  const Vec u = sol.state_at(cfg.verify.t).u;
  std::vector<Vec> out;
  for (double s : {0.0, 0.5, 1.25, 1.5}) {
    Vec a = u * s;
    if (sol.problem == Problem::Constrained) a = project_native(ctx.set, a);
    out.push_back(std::move(a));
  }
  return out;
}

void print_solution_summary(std::ostream& out, const EquilibriumSolution& sol, const fs::path& csv) {
  const double max_fp = *std::max_element(sol.fp_residual.begin(), sol.fp_residual.end());
  out << "problem=" << to_string(sol.problem) << " A(0)=" << format_real(sol.A_vals.front())
      << " steps=" << sol.diagnostics.steps << " max_local_error=" << format_real(sol.diagnostics.max_local_error)
      << " max_fp_residual=" << format_real(max_fp) << " regime_switches=" << sol.diagnostics.regime_switches
      << " csv=" << csv.string() << '\n';
  for (const std::string& note : sol.diagnostics.notes) out << "note: " << note << '\n';
}

constexpr std::string_view kPassScope =
    "a pass means no tested deviation improves on the candidate; it does not establish uniqueness";

}  // namespace

int run_command_or_throw(Command cmd, const RunConfig& cfg, std::ostream& out) {
  const Context ctx = make_context(cfg);
  const fs::path dir = output_dir(cfg);
  switch (cmd) {
    case Command::SolveConstrained:
    case Command::SolveBorrowing: {
      const Problem problem = cmd == Command::SolveConstrained ? Problem::Constrained : Problem::Borrowing;
      const EquilibriumSolution sol = solve(ctx, cfg, problem);
      const std::string name = std::string("solution_") + std::string(to_string(problem)) + ".csv";
      write_solution_csv(dir / name, sol);
      if (cfg.output.emit_plots) write_plot_script(dir / ("plot_" + std::string(to_string(problem)) + ".py"), name);
      print_solution_summary(out, sol, dir / name);
      return kExitOk;
    }
    case Command::Wellposedness: {
      const WellposednessReport rep = check_wellposedness(cfg.solver.problem, ctx.pref, ctx.table, ctx.model, ctx.set);
      write_wellposedness_csv(dir / "wellposedness.csv", rep);
      for (const auto& [name, value] : rep.condition_values) out << name << '=' << format_real(value) << '\n';
      for (const std::string& note : rep.notes) out << "note: " << note << '\n';
      const bool proven = rep.verdict == Verdict::Proven;
      out << "verdict=" << (proven ? "Proven" : "NotProven") << '\n';
      return proven ? kExitOk : kExitNotProven;
    }
    case Command::VerifyHjb: {
      const EquilibriumSolution sol = candidate(ctx, cfg);
      const HJBReport rep = hjb_report(ctx.pref, ctx.table, sol, ctx.model, ctx.set, t_values(cfg, ctx.model),
                                       cfg.verify.x_values, kHjbTolerance, ctx.quad);
      write_hjb_csv(dir / "hjb.csv", rep);
      double worst = 0.0;
      for (const HjbPoint& p : rep.points) worst = std::max({worst, std::abs(p.residual_at_candidate), std::abs(p.max_residual)});
      out << "points=" << rep.points.size() << " worst=" << format_real(worst)
          << " verdict=" << (rep.passed() ? "Pass" : "Fail") << '\n';
      if (rep.passed()) out << "note: " << kPassScope << '\n';
      return rep.passed() ? kExitOk : kExitVerificationFail;
    }
    case Command::VerifyPerturb: {
      const EquilibriumSolution sol = candidate(ctx, cfg);
      const PerturbationReport rep =
          perturbation_test(ctx.pref, ctx.table, sol, ctx.model, ctx.set, cfg.verify.t, cfg.verify.x,
                            alternatives(ctx, sol, cfg), cfg.verify.eps_ladder, cfg.verify.sim, ctx.quad);
      write_perturbation_csv(dir / "perturbation.csv", rep);
      out << "J_analytic=" << format_real(rep.J_analytic) << " J_mc=" << format_real(rep.J_mc.estimate)
          << " ci=" << format_real(rep.J_mc.ci_halfwidth) << '\n';
      for (std::size_t i = 0; i < rep.extrapolated.size(); ++i) {
        out << "alternative " << i << " extrapolated_slope=" << format_real(rep.extrapolated[i])
            << " ci=" << format_real(rep.extrapolated_ci[i]) << '\n';
      }
      for (const std::string& note : rep.notes) out << "note: " << note << '\n';
      out << "verdict=" << to_string(rep.verdict) << '\n';
      if (rep.verdict == CheckVerdict::Pass) out << "note: " << kPassScope << '\n';
      return rep.verdict == CheckVerdict::Fail ? kExitVerificationFail : kExitOk;
    }
  }
  return kExitError;
}

int run_command(Command cmd, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto one_line = [](std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
  };
  try {
    return run_command_or_throw(cmd, cfg, out);
  } catch (const Error& e) {
    err << "error: kind=" << to_string(e.kind()) << " message=" << one_line(e.what()) << '\n';
  } catch (const std::exception& e) {
    err << "error: kind=Internal message=" << one_line(e.what()) << '\n';
  }
  return kExitError;
}

}  // namespace beq
