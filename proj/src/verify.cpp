#include "beq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "beq/rng.hpp"

namespace beq {

namespace {

constexpr int kSanitySamples = 200;
constexpr double kSanitySlack = 1e-7;
constexpr double kSlopeFloor = 1e-10;

struct Generator {
  double f_t;
  double m1;
  double m2;
};

double residual_at(const Generator& g, const MarketModel& model, Problem problem, double t, const Vec& u) {
  const double a2 = (model.sigma(t).transpose() * u).squaredNorm();
  return g.f_t + wealth_drift(model, problem, t, u) * g.m1 + 0.5 * a2 * g.m2;
}

Generator generator_at(const BetweennessPreference& pref, const GTable& table, const EquilibriumSolution& sol,
                       double t, double x, const QuadratureRule& quad) {
  const FDerivatives fd = f_and_derivatives(pref, sol, t, x, analytic_J(table, sol, t, x), quad);
  return {fd.f_t, fd.m1, fd.m2};
}

Vec analytic_maximiser(const Generator& g, const MarketModel& model, const ConvexSet& set, Problem problem,
                       double t) {
  const double g_eff = -g.m1 / g.m2;
  if (problem == Problem::Borrowing) return borrowing_branch(model, t, g_eff).u;
  return project_sigma_image_full(set, model.sigma(t), kappa(model, t) * g_eff).u;
}

}  // namespace

const QuadratureRule& default_quadrature() {
  static const QuadratureRule rule = gauss_hermite_normal(kDefaultQuadOrder);
  return rule;
}

double analytic_J(const GTable& table, const EquilibriumSolution& sol, double t, double x) {
  if (!(x > 0.0)) throw Error(ErrorKind::Config, "wealth x must be positive");
  const EquilibriumSolution::State st = sol.state_at(t);
  return x * std::exp(st.B) * table.H(st.A);
}

FDerivatives f_and_derivatives(const BetweennessPreference& pref, const EquilibriumSolution& sol, double t, double x,
                               double z, const QuadratureRule& quad) {
  if (!(x > 0.0) || !(z > 0.0)) throw Error(ErrorKind::Config, "f needs x > 0 and z > 0");
  const EquilibriumSolution::State st = sol.state_at(t);
  const double sa = std::sqrt(st.A);
  const double log_scale = std::log(x / z) + st.B;
  double f = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const double y = std::exp(log_scale + sa * quad.nodes[i]);
    const GeneratorValues v = pref.eval(y);
    if (!std::isfinite(v.f) || !std::isfinite(v.df) || !std::isfinite(v.d2f)) {
      std::ostringstream os;
      os << "non-finite generator value at quadrature node " << quad.nodes[i] << " (argument " << y << ")";
      throw Error(ErrorKind::NumericalDomain, os.str());
    }
    const double w = quad.weights[i];
    f += w * v.f;
    m1 += w * v.df * y;
    m2 += w * v.d2f * y * y;
  }
  FDerivatives out;
  out.f = f;
  out.m1 = m1;
  out.m2 = m2;
  out.f_x = m1 / x;
  out.f_xx = m2 / (x * x);
  out.f_z = -m1 / z;
  out.f_t = m1 * st.dB + 0.5 * st.dA * (m1 + m2);
  if (!(out.f_z < 0.0) || !(out.f_xx < 0.0)) {
    std::ostringstream os;
    os << "expected f_z < 0 and f_xx < 0, got f_z=" << out.f_z << " f_xx=" << out.f_xx << " at t=" << t;
    throw Error(ErrorKind::InternalConsistency, os.str());
  }
  return out;
}

double hjb_residual(const BetweennessPreference& pref, const GTable& table, const EquilibriumSolution& sol,
                    const MarketModel& model, double t, double x, const Vec& u, const QuadratureRule& quad) {
  return residual_at(generator_at(pref, table, sol, t, x, quad), model, sol.problem, t, u);
}

HjbMaximum max_hjb_residual(const BetweennessPreference& pref, const GTable& table, const EquilibriumSolution& sol,
                            const MarketModel& model, const ConvexSet& set, double t, double x,
                            const QuadratureRule& quad) {
  const Generator g = generator_at(pref, table, sol, t, x, quad);
  HjbMaximum best;
  best.u = analytic_maximiser(g, model, set, sol.problem, t);
  best.value = residual_at(g, model, sol.problem, t, best.u);

  const CounterNormal rng(0x6a09e667f3bcc909ULL, static_cast<std::uint64_t>(std::llround(t * 1e9)) ^
                                                     (static_cast<std::uint64_t>(std::llround(x * 1e6)) << 32));
  const int d = static_cast<int>(best.u.size());
  const double scale = 0.5 * (1.0 + best.u.norm());
  for (int k = 0; k < kSanitySamples; ++k) {
    Vec u(d);
    for (int j = 0; j < d; ++j) u(j) = best.u(j) + scale * rng(static_cast<std::uint64_t>(k) * d + j);
    if (sol.problem == Problem::Constrained) u = project_native(set, u);
    const double r = residual_at(g, model, sol.problem, t, u);
    if (r > best.value + kSanitySlack) {
      std::ostringstream os;
      os << "random feasible control beats the analytic maximiser at t=" << t << " x=" << x << ": " << r << " > "
         << best.value;
      throw Error(ErrorKind::InternalConsistency, os.str());
    }
  }
  return best;
}

std::string_view to_string(CheckVerdict v) {
  switch (v) {
    case CheckVerdict::Pass: return "Pass";
    case CheckVerdict::Inconclusive: return "Inconclusive";
    case CheckVerdict::Fail: return "Fail";
  }
  return "Fail";
}

bool HJBReport::passed() const {
  return std::all_of(points.begin(), points.end(), [](const HjbPoint& p) { return p.verdict == CheckVerdict::Pass; });
}

HJBReport hjb_report(const BetweennessPreference& pref, const GTable& table, const EquilibriumSolution& sol,
                     const MarketModel& model, const ConvexSet& set, const std::vector<double>& t_values,
                     const std::vector<double>& x_values, double tolerance, const QuadratureRule& quad) {
  HJBReport rep;
  rep.tolerance = tolerance;
  for (double t : t_values) {
    const Vec u_hat = sol.state_at(t).u;
    // An infeasible candidate is not an equilibrium whatever its residuals.
    const bool feasible = sol.problem != Problem::Constrained || contains(set, u_hat, 1e-8);
    for (double x : x_values) {
      HjbPoint p;
      p.t = t;
      p.x = x;
      p.residual_at_candidate = hjb_residual(pref, table, sol, model, t, x, u_hat, quad);
      HjbMaximum m = max_hjb_residual(pref, table, sol, model, set, t, x, quad);
      p.max_residual = m.value;
      p.argmax_u = std::move(m.u);
      // At an equilibrium the supremum over the set is attained at u_hat and
      // equals zero, so a negative supremum fails as well.
      const bool ok =
          feasible && std::abs(p.residual_at_candidate) <= tolerance && std::abs(p.max_residual) <= tolerance;
      p.verdict = ok ? CheckVerdict::Pass : CheckVerdict::Fail;
      rep.points.push_back(std::move(p));
    }
  }
  return rep;
}

PerturbationReport perturbation_test(const BetweennessPreference& pref, const GTable& table,
                                     const EquilibriumSolution& sol, const MarketModel& model, const ConvexSet& set,
                                     double t, double x, const std::vector<Vec>& alternatives,
                                     const std::vector<double>& eps_ladder, const SimConfig& cfg,
                                     const QuadratureRule& quad) {
  if (alternatives.empty() || eps_ladder.empty()) {
    throw Error(ErrorKind::Config, "perturbation test needs at least one alternative and one eps");
  }
  for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
    if (!(eps_ladder[i] > 0.0) || (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1]))) {
      throw Error(ErrorKind::Config, "verify.eps_ladder must be positive and strictly decreasing");
    }
  }
  if (cfg.n_paths < 1000) throw Error(ErrorKind::Config, "verify.n_paths must be at least 1000");
  for (std::size_t i = 0; i < alternatives.size(); ++i) {
    if (alternatives[i].size() != model.d()) throw Error(ErrorKind::Config, "alternative dimension differs from d");
    if (sol.problem == Problem::Constrained && !contains(set, alternatives[i], 1e-8)) {
      throw Error(ErrorKind::Config, "alternative " + std::to_string(i) + " lies outside the constraint set");
    }
  }

  PerturbationReport rep;
  rep.t = t;
  rep.x = x;
  rep.alternatives = alternatives;
  rep.epsilons = eps_ladder;
  rep.J_analytic = analytic_J(table, sol, t, x);
  const FDerivatives fd = f_and_derivatives(pref, sol, t, x, rep.J_analytic, quad);
  const Generator g{fd.f_t, fd.m1, fd.m2};

  const std::vector<double> base =
      simulate_terminal_wealth(model, strategy_from_solution(sol), t, x, cfg, sol.problem);
  rep.J_mc = implicit_J_mc(pref, base, rep.J_analytic);
  if (std::abs(rep.J_mc.estimate - rep.J_analytic) > 3.0 * rep.J_mc.ci_halfwidth) {
    std::ostringstream os;
    os << "J_mc=" << rep.J_mc.estimate << " differs from J_analytic=" << rep.J_analytic << " by more than 3 CI";
    rep.notes.push_back(os.str());
  }

  bool any_fail = false;
  bool any_inconclusive = false;
  for (std::size_t i = 0; i < alternatives.size(); ++i) {
    const double predicted = residual_at(g, model, sol.problem, t, alternatives[i]) / (-fd.f_z);
    std::vector<PerturbationEntry> row;
    for (double eps : eps_ladder) {
      const std::vector<double> alt =
          simulate_terminal_wealth(model, perturbed_strategy(sol, t, eps, alternatives[i]), t, x, cfg, sol.problem);
      const McEstimate diff = paired_J_difference(pref, base, alt, rep.J_analytic);
      PerturbationEntry e{static_cast<int>(i), eps, diff.estimate / eps, diff.ci_halfwidth / eps, predicted,
                          CheckVerdict::Pass};
      if (e.slope > 3.0 * e.ci + kSlopeFloor) {
        e.verdict = CheckVerdict::Fail;
      } else if (std::abs(e.slope) <= e.ci && predicted < 0.0) {
        e.verdict = CheckVerdict::Inconclusive;
      }
      if (std::abs(e.slope - predicted) > 3.0 * e.ci + kSlopeFloor) {
        std::ostringstream os;
        os << "alternative " << i << " eps=" << eps << ": slope " << e.slope << " vs predicted " << predicted
           << " exceeds 3 CI";
        rep.notes.push_back(os.str());
      }
      row.push_back(e);
    }
    // Least-squares line through (eps, slope), evaluated at eps = 0. The
    // intercept is sum w_i slope_i; sum |w_i| ci_i bounds its half-width
    // whatever the correlation between the paired estimates.
    double extrapolated = row.front().slope;
    double extrapolated_ci = row.front().ci;
    if (row.size() > 1) {
      const double n = static_cast<double>(row.size());
      double mean_eps = 0.0;
      for (const auto& e : row) mean_eps += e.eps / n;
      double sxx = 0.0;
      for (const auto& e : row) sxx += (e.eps - mean_eps) * (e.eps - mean_eps);
      extrapolated = 0.0;
      extrapolated_ci = 0.0;
      for (const auto& e : row) {
        const double w = 1.0 / n - mean_eps * (e.eps - mean_eps) / sxx;
        extrapolated += w * e.slope;
        extrapolated_ci += std::abs(w) * e.ci;
      }
    }
    rep.extrapolated.push_back(extrapolated);
    rep.extrapolated_ci.push_back(extrapolated_ci);
    if (extrapolated > 3.0 * extrapolated_ci + kSlopeFloor) {
      any_fail = true;
      rep.notes.push_back("alternative " + std::to_string(i) + ": extrapolated slope " +
                          std::to_string(extrapolated) + " is positive beyond 3 CI");
    }
    for (const auto& e : row) {
      any_fail = any_fail || e.verdict == CheckVerdict::Fail;
      any_inconclusive = any_inconclusive || e.verdict == CheckVerdict::Inconclusive;
      rep.entries.push_back(e);
    }
  }
  rep.verdict = any_fail ? CheckVerdict::Fail : (any_inconclusive ? CheckVerdict::Inconclusive : CheckVerdict::Pass);
  return rep;
}

}  // namespace beq
