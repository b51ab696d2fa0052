#include "beq/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace beq {

namespace {

struct NodeEval {
  double rhs;
  Vec u;
  Vec a;
  Regime regime;
  double drift;
  bool nonpositive_threshold;
  std::vector<int> piece;  // identifies the smooth piece of the right-hand side
};

double clamp_time(const MarketModel& model, double t) { return std::clamp(t, 0.0, model.T()); }

void check_table_range(const GTable& table, double y) {
  if (!(y <= table.y_max())) {
    std::ostringstream os;
    os << "A reached " << y << " beyond the table range y_max=" << table.y_max()
       << "; rebuild the G table with a larger y_max";
    throw TableRangeError(os.str(), y);
  }
}

NodeEval constrained_eval(const GTable& table, const MarketModel& model, const ConvexSet& set, double t, double y) {
  check_table_range(table, y);
  const double g = table.G(y);
  const Vec target = kappa(model, t) * g;
  SigmaProjection p = project_sigma_image_full(set, model.sigma(t), target);
  const bool active = (p.image - target).norm() > 1e-12 * (1.0 + target.norm());
  const double drift = p.u.dot(model.mu(t));
  const double rhs = p.image.squaredNorm();
  std::vector<int> piece = active_pieces(set, p.u);
  return {rhs,   std::move(p.u), std::move(p.image), active ? Regime::Constrained : Regime::Unconstrained,
          drift, false,          std::move(piece)};
}

NodeEval borrowing_eval(const GTable& table, const MarketModel& model, double t, double y) {
  BorrowingRhs b = borrowing_rhs(table, model, t, y);
  Vec a = model.sigma(t).transpose() * b.u;
  const double drift = wealth_drift(model, Problem::Borrowing, t, b.u);
  return {b.value, std::move(b.u), std::move(a), b.regime, drift, b.nonpositive_threshold, {static_cast<int>(b.regime)}};
}

// Classical RK4 on the time-reversed equation Y'(tau) = rhs(T - tau, Y),
// Y(0) = 0, with A(t) = Y(T - t). Each step also takes two half steps for a
// Richardson estimate of the local error; the half-step midpoint feeds the
// Simpson rule for B.
constexpr int kMaxSplits = 8;

template <typename Eval>
EquilibriumSolution integrate_backward(const MarketModel& model, Problem problem, int n_steps, Eval&& eval) {
  if (n_steps < 1) throw Error(ErrorKind::Config, "n_steps must be positive");
  const double T = model.T();
  const double h = T / n_steps;
  auto at = [&](double tau, double y) { return eval(clamp_time(model, T - tau), y); };
  auto rk4 = [&](double tau, double y, double step, double k1) {
    const double k2 = at(tau + 0.5 * step, y + 0.5 * step * k1).rhs;
    const double k3 = at(tau + 0.5 * step, y + 0.5 * step * k2).rhs;
    const double k4 = at(tau + step, y + step * k3).rhs;
    return y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  // A change of active constraints or borrowing regime inside a step is a
  // kink of the right-hand side. The switch is located by bisection on the
  // step length and the step is split there, as for coefficient breakpoints.
  auto smooth_advance = [&](double tau, double y, double end) {
    for (int splits = 0; tau < end; ++splits) {
      const NodeEval start = at(tau, y);
      const double step = end - tau;
      const double y_end = rk4(tau, y, step, start.rhs);
      if (splits >= kMaxSplits || at(end, y_end).piece == start.piece) return y_end;
      double lo = 0.0;
      double hi = step;
      double y_hi = y_end;
      while (hi - lo > 1e-13 * step) {
        const double s = 0.5 * (lo + hi);
        const double y_s = rk4(tau, y, s, start.rhs);
        if (at(tau + s, y_s).piece == start.piece) {
          lo = s;
        } else {
          hi = s;
          y_hi = y_s;
        }
      }
      y = y_hi;
      tau += hi;
    }
    return y;
  };
  // Coefficient breakpoints in reversed time.
  std::vector<double> kinks;
  for (double b : model.breakpoints()) {
    if (b > 0.0 && b < T) kinks.push_back(T - b);
  }
  std::sort(kinks.begin(), kinks.end());
  auto advance = [&](double tau, double y, double step) {
    double from = tau;
    for (double k : kinks) {
      if (k > from && k < tau + step) {
        y = smooth_advance(from, y, k);
        from = k;
      }
    }
    return smooth_advance(from, y, tau + step);
  };

  EquilibriumSolution sol;
  sol.problem = problem;
  const std::size_t n = static_cast<std::size_t>(n_steps) + 1;
  sol.t_grid.resize(n);
  sol.A_vals.resize(n);
  sol.B_vals.resize(n);
  sol.a_vals.resize(n);
  sol.u_vals.resize(n);
  sol.regime.resize(n);
  sol.fp_residual.assign(n, 0.0);
  sol.drift_vals.resize(n);
  for (std::size_t k = 0; k < n; ++k) sol.t_grid[k] = T * static_cast<double>(k) / n_steps;
  sol.t_grid.back() = T;

  auto store = [&](std::size_t k, double y, double drift_integral, NodeEval&& e) {
    sol.A_vals[k] = y;
    sol.B_vals[k] = drift_integral - 0.5 * y;
    sol.drift_vals[k] = e.drift;
    sol.regime[k] = e.regime;
    sol.u_vals[k] = std::move(e.u);
    sol.a_vals[k] = std::move(e.a);
    if (e.nonpositive_threshold) ++sol.diagnostics.nonpositive_threshold_nodes;
  };

  double y = 0.0;
  double drift_integral = 0.0;
  NodeEval last = eval(T, 0.0);
  double last_drift = last.drift;
  store(n - 1, 0.0, 0.0, std::move(last));
  double max_err = 0.0;
  for (int j = 0; j < n_steps; ++j) {
    const double tau = T - sol.t_grid[n - 1 - j];
    const double y_full = advance(tau, y, h);
    const double y_half = advance(tau, y, 0.5 * h);
    const double y_two = advance(tau + 0.5 * h, y_half, 0.5 * h);
    const double err = std::abs(y_two - y_full) / 15.0;
    max_err = std::max(max_err, err);
    if (err > 1e-8 * (1.0 + std::abs(y_full))) {
      std::ostringstream os;
      os << "estimated local error " << err << " at t=" << T - tau << " exceeds tolerance; increase n_steps";
      throw Error(ErrorKind::StepControl, os.str());
    }
    const std::size_t k = n - 2 - static_cast<std::size_t>(j);
    const NodeEval mid = eval(clamp_time(model, T - tau - 0.5 * h), y_half);
    NodeEval next = eval(sol.t_grid[k], y_full);
    drift_integral += h / 6.0 * (last_drift + 4.0 * mid.drift + next.drift);
    last_drift = next.drift;
    y = y_full;
    store(k, y, drift_integral, std::move(next));
  }
  sol.A_vals.back() = 0.0;
  sol.diagnostics.steps = n_steps;
  sol.diagnostics.max_local_error = max_err;
  for (std::size_t k = 1; k < n; ++k) {
    if (sol.regime[k] != sol.regime[k - 1]) ++sol.diagnostics.regime_switches;
  }
  if (sol.diagnostics.regime_switches > n_steps / 4) {
    sol.diagnostics.chattering = true;
    sol.diagnostics.notes.push_back("regime chattering: " + std::to_string(sol.diagnostics.regime_switches) +
                                    " switches");
  }
  if (sol.diagnostics.nonpositive_threshold_nodes > 0) {
    sol.diagnostics.notes.push_back(std::to_string(sol.diagnostics.nonpositive_threshold_nodes) +
                                    " nodes with nonpositive 1^T (sigma^T)^-1 kappa_i");
  }
  return sol;
}

double simpson(double a, double b, double fa, double fm, double fb) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

}  // namespace

std::string_view to_string(Problem p) { return p == Problem::Constrained ? "constrained" : "borrowing"; }

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Borrow: return "Borrow";
    case Regime::Boundary: return "Boundary";
    case Regime::Save: return "Save";
    case Regime::Constrained: return "Constrained";
    case Regime::Unconstrained: return "Unconstrained";
  }
  return "Unknown";
}

Regime regime_from_string(std::string_view s) {
  for (Regime r : {Regime::Borrow, Regime::Boundary, Regime::Save, Regime::Constrained, Regime::Unconstrained}) {
    if (to_string(r) == s) return r;
  }
  throw Error(ErrorKind::Config, "unknown regime label '" + std::string(s) + "'");
}

EquilibriumSolution::State EquilibriumSolution::state_at(double t) const {
  if (t_grid.size() < 2 || t < t_grid.front() || t > t_grid.back()) {
    std::ostringstream os;
    os << "t=" << t << " outside the solution grid";
    throw Error(ErrorKind::Extrapolation, os.str());
  }
  std::size_t k = static_cast<std::size_t>(std::upper_bound(t_grid.begin(), t_grid.end(), t) - t_grid.begin());
  k = std::clamp<std::size_t>(k, 1, t_grid.size() - 1) - 1;
  const double t0 = t_grid[k];
  const double t1 = t_grid[k + 1];
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double dA0 = -a_vals[k].squaredNorm();
  const double dA1 = -a_vals[k + 1].squaredNorm();
  const double dB0 = -drift_vals[k] - 0.5 * dA0;
  const double dB1 = -drift_vals[k + 1] - 0.5 * dA1;
  const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  const double h10 = s * (1.0 - s) * (1.0 - s);
  const double h01 = s * s * (3.0 - 2.0 * s);
  const double h11 = s * s * (s - 1.0);
  State st;
  st.A = std::max(0.0, h00 * A_vals[k] + h10 * h * dA0 + h01 * A_vals[k + 1] + h11 * h * dA1);
  st.B = h00 * B_vals[k] + h10 * h * dB0 + h01 * B_vals[k + 1] + h11 * h * dB1;
  st.u = (1.0 - s) * u_vals[k] + s * u_vals[k + 1];
  st.a = (1.0 - s) * a_vals[k] + s * a_vals[k + 1];
  const double drift = (1.0 - s) * drift_vals[k] + s * drift_vals[k + 1];
  st.dA = -st.a.squaredNorm();
  st.dB = -drift - 0.5 * st.dA;
  return st;
}

double wealth_drift(const MarketModel& model, Problem problem, double t, const Vec& u) {
  const double risky = u.dot(model.mu(t));
  if (problem == Problem::Constrained) return risky;
  const double exposure = u.sum();
  return std::max(1.0 - exposure, 0.0) * model.r(t) - std::max(exposure - 1.0, 0.0) * model.R(t) + risky;
}

EquilibriumSolution solve_constrained(const GTable& table, const MarketModel& model, const ConvexSet& set,
                                      int n_steps) {
  if (!model.zero_rate()) {
    throw Error(ErrorKind::Config, "the constrained problem requires market.r = 0; use the borrowing solver for rates");
  }
  if (set.dim() != model.d()) throw Error(ErrorKind::Config, "constraint dimension differs from market.d");
  EquilibriumSolution sol =
      integrate_backward(model, Problem::Constrained, n_steps,
                         [&](double t, double y) { return constrained_eval(table, model, set, t, y); });
  sol.fp_residual = fixed_point_residuals(sol, table, model, set);
  return sol;
}

EquilibriumSolution solve_unconstrained_closed_form(const GTable& table, const MarketModel& model, int n_steps) {
  if (n_steps < 1) throw Error(ErrorKind::Config, "n_steps must be positive");
  if (!model.zero_rate()) throw Error(ErrorKind::Config, "the constrained problem requires market.r = 0");
  const double T = model.T();
  const std::size_t n = static_cast<std::size_t>(n_steps) + 1;
  auto k2 = [&](double t) { return kappa(model, clamp_time(model, t)).squaredNorm(); };

  std::vector<double> t_grid(n);
  for (std::size_t k = 0; k < n; ++k) t_grid[k] = T * static_cast<double>(k) / n_steps;
  t_grid.back() = T;
  // I(t) = int_t^T |kappa|^2 at nodes and interval midpoints.
  std::vector<double> I(n, 0.0), I_mid(n - 1, 0.0);
  for (std::size_t k = n - 1; k-- > 0;) {
    const double a = t_grid[k];
    const double b = t_grid[k + 1];
    const double m = 0.5 * (a + b);
    I[k] = I[k + 1] + simpson(a, b, k2(a), k2(m), k2(b));
    I_mid[k] = I[k + 1] + simpson(m, b, k2(m), k2(0.5 * (m + b)), k2(b));
  }
  const double margin = table.Gcal_vals().back() - I.front();
  if (!(margin >= 1e-9)) {
    std::ostringstream os;
    os << "Gcal(y_max)=" << table.Gcal_vals().back() << " does not exceed int_0^T |kappa|^2=" << I.front();
    throw Error(ErrorKind::Wellposedness, os.str());
  }

  auto node = [&](double t, double A) {
    NodeEval e;
    const Vec kap = kappa(model, t);
    e.a = kap * table.G(A);
    e.u = solve_sigma_transpose(model.sigma(t), e.a, t);
    e.drift = e.u.dot(model.mu(t));
    e.rhs = e.a.squaredNorm();
    e.regime = Regime::Unconstrained;
    e.nonpositive_threshold = false;
    return e;
  };

  EquilibriumSolution sol;
  sol.problem = Problem::Constrained;
  sol.t_grid = t_grid;
  sol.A_vals.resize(n);
  sol.B_vals.resize(n);
  sol.a_vals.resize(n);
  sol.u_vals.resize(n);
  sol.regime.assign(n, Regime::Unconstrained);
  sol.fp_residual.assign(n, 0.0);
  sol.drift_vals.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double A = k + 1 == n ? 0.0 : table.Gcal_inverse(I[k]);
    NodeEval e = node(t_grid[k], A);
    sol.A_vals[k] = A;
    sol.a_vals[k] = std::move(e.a);
    sol.u_vals[k] = std::move(e.u);
    sol.drift_vals[k] = e.drift;
  }
  double drift_integral = 0.0;
  sol.B_vals.back() = 0.0;
  for (std::size_t k = n - 1; k-- > 0;) {
    const double m = 0.5 * (t_grid[k] + t_grid[k + 1]);
    const double drift_mid = node(m, table.Gcal_inverse(I_mid[k])).drift;
    drift_integral += simpson(t_grid[k], t_grid[k + 1], sol.drift_vals[k], drift_mid, sol.drift_vals[k + 1]);
    sol.B_vals[k] = drift_integral - 0.5 * sol.A_vals[k];
  }
  sol.diagnostics.steps = n_steps;
  sol.fp_residual = fixed_point_residuals(sol, table, model, ConvexSet::full_space(model.d()));
  return sol;
}

BorrowingRhs borrowing_branch(const MarketModel& model, double t, double g) {
  const Mat sigma = model.sigma(t);
  const auto [k1, k2] = kappa12(model, t);
  const Vec ones = Vec::Ones(model.d());
  Vec u1 = solve_sigma_transpose(sigma, k1 * g, t);
  Vec u2 = solve_sigma_transpose(sigma, k2 * g, t);
  BorrowingRhs out;
  out.nonpositive_threshold = !(u1.sum() > 0.0) || !(u2.sum() > 0.0);
  // Ties within rounding go to the earlier branch; both give the same u there.
  constexpr double tie = 64.0 * std::numeric_limits<double>::epsilon();
  if (u2.sum() >= 1.0 - tie) {
    out.regime = Regime::Borrow;
    out.u = std::move(u2);
  } else if (u1.sum() <= 1.0 + tie) {
    out.regime = Regime::Save;
    out.u = std::move(u1);
  } else {
    // Maximiser of the mean-variance criterion on the hyperplane 1.u = 1.
    const Mat cov = sigma * sigma.transpose();
    const Eigen::LDLT<Mat> ldlt(cov);
    const Vec mu = model.mu(t);
    const Vec cinv_one = ldlt.solve(ones);
    const Vec cinv_mu = ldlt.solve(mu);
    const double one_c_one = ones.dot(cinv_one);
    const double c = ones.dot(cinv_mu) / one_c_one;
    out.regime = Regime::Boundary;
    out.u = g * (cinv_mu - c * cinv_one) + cinv_one / one_c_one;
  }
  out.value = (sigma.transpose() * out.u).squaredNorm();
  return out;
}

BorrowingRhs borrowing_rhs(const GTable& table, const MarketModel& model, double t, double y) {
  check_table_range(table, y);
  return borrowing_branch(model, t, table.G(y));
}

EquilibriumSolution solve_borrowing(const GTable& table, const MarketModel& model, int n_steps) {
  for (double t : model.breakpoints()) {
    if (model.R(t) < model.r(t)) throw Error(ErrorKind::Config, "borrowing rate below saving rate");
  }
  EquilibriumSolution sol = integrate_backward(model, Problem::Borrowing, n_steps,
                                               [&](double t, double y) { return borrowing_eval(table, model, t, y); });
  sol.fp_residual = fixed_point_residuals(sol, table, model, ConvexSet::full_space(model.d()));
  return sol;
}

EquilibriumSolution candidate_from_strategy(const MarketModel& model, Problem problem, std::vector<double> t_grid,
                                            std::vector<Vec> u_vals) {
  const std::size_t n = t_grid.size();
  if (n < 2 || u_vals.size() != n) throw Error(ErrorKind::Config, "candidate needs at least two matching nodes");
  EquilibriumSolution sol;
  sol.problem = problem;
  sol.t_grid = std::move(t_grid);
  sol.u_vals = std::move(u_vals);
  sol.a_vals.resize(n);
  sol.drift_vals.resize(n);
  sol.regime.resize(n);
  sol.A_vals.assign(n, 0.0);
  sol.B_vals.assign(n, 0.0);
  sol.fp_residual.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = sol.t_grid[k];
    sol.a_vals[k] = model.sigma(t).transpose() * sol.u_vals[k];
    sol.drift_vals[k] = wealth_drift(model, problem, t, sol.u_vals[k]);
    if (problem == Problem::Borrowing) {
      const double e = sol.u_vals[k].sum();
      sol.regime[k] = e > 1.0 ? Regime::Borrow : (e < 1.0 ? Regime::Save : Regime::Boundary);
    } else {
      sol.regime[k] = Regime::Unconstrained;
    }
  }
  double drift_integral = 0.0;
  for (std::size_t k = n - 1; k-- > 0;) {
    const double h = sol.t_grid[k + 1] - sol.t_grid[k];
    sol.A_vals[k] = sol.A_vals[k + 1] + 0.5 * h * (sol.a_vals[k].squaredNorm() + sol.a_vals[k + 1].squaredNorm());
    drift_integral += 0.5 * h * (sol.drift_vals[k] + sol.drift_vals[k + 1]);
    sol.B_vals[k] = drift_integral - 0.5 * sol.A_vals[k];
  }
  return sol;
}

std::vector<double> fixed_point_residuals(const EquilibriumSolution& sol, const GTable& table,
                                          const MarketModel& model, const ConvexSet& set) {
  std::vector<double> out(sol.t_grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = sol.t_grid[k];
    if (sol.problem == Problem::Constrained) {
      const Vec target = kappa(model, t) * table.G(sol.A_vals[k]);
      out[k] = (sol.a_vals[k] - project_sigma_image(set, model.sigma(t), target)).norm();
    } else {
      const BorrowingRhs b = borrowing_rhs(table, model, t, sol.A_vals[k]);
      out[k] = (model.sigma(t).transpose() * (sol.u_vals[k] - b.u)).norm();
    }
  }
  return out;
}

double WellposednessReport::value(const std::string& name) const {
  for (const auto& [key, v] : condition_values) {
    if (key == name) return v;
  }
  throw Error(ErrorKind::Config, "no condition value named '" + name + "'");
}

namespace {

constexpr double kMargin = 1e-9;

}  // namespace

WellposednessReport check_wellposedness(Problem problem, const BetweennessPreference& pref, const GTable& table,
                                        const MarketModel& model, const ConvexSet& set) {
  WellposednessReport rep;
  rep.problem = problem;
  const EllipticityCertificate cert = certify_ellipticity(model);
  const double inf = std::numeric_limits<double>::infinity();
  const double y_max = table.y_max();
  const double T = model.T();
  const auto ub = pref.g_upper_bound();
  const auto lb = pref.g_lower_bound();
  const bool constant_g = ub && lb && *ub == *lb;
  auto add = [&](std::string name, double v) { rep.condition_values.emplace_back(std::move(name), v); };
  auto prove = [&](const std::string& why) {
    rep.verdict = Verdict::Proven;
    rep.notes.push_back(why);
  };

  add("y_max", y_max);
  add("sup_G_table", table.G_max());
  add("sup_G_bound", ub ? *ub : inf);
  add("c1", cert.c1);
  add("c2", cert.c2);
  add("c3", cert.c3);

  if (cert.c3 == 0.0) prove("kappa vanishes on the certificate grid; A is identically 0");

  if (problem == Problem::Borrowing) {
    if (ub) {
      prove("G is bounded by " + std::to_string(*ub) + "; the borrowing right-hand side is bounded");
    } else {
      rep.notes.push_back("no analytic upper bound on G; boundedness cannot be established on [0, inf)");
    }
    return rep;
  }

  if (constant_g) {
    add("G_constant", *ub);
    prove("G is constant; A is an explicit finite integral");
  }

  // Remark on the unconstrained case: Gcal(inf) > int_0^T |kappa|^2.
  if (set.is_full_space()) {
    double ik = 0.0;
    const int m = static_cast<int>(cert.t_grid.size()) - 1;
    for (int i = 0; i < m; ++i) {
      const double a = cert.t_grid[i];
      const double b = cert.t_grid[i + 1];
      ik += simpson(a, b, kappa(model, a).squaredNorm(), kappa(model, 0.5 * (a + b)).squaredNorm(),
                    kappa(model, b).squaredNorm());
    }
    const double gc = table.Gcal_vals().back();
    add("Gcal_y_max", gc);
    add("int_kappa2", ik);
    if (gc - ik >= kMargin) prove("Gcal(y_max) exceeds int_0^T |kappa|^2");
  }

  // Constant coefficients: P(inf) > T with P(x) = int_0^x dy / |P(kappa G)|^2.
  if (model.is_constant()) {
    const Mat sigma = model.sigma(0.0);
    const Vec kap = kappa(model, 0.0);
    bool zero_image = false;
    const double p = integrate_over_G(table, y_max, [&](double g) {
      const double n2 = project_sigma_image(set, sigma, kap * g).squaredNorm();
      if (n2 == 0.0) zero_image = true;
      return n2 == 0.0 ? 0.0 : 1.0 / n2;
    });
    const double pv = zero_image ? inf : p;
    add("P_y_max", pv);
    if (pv - T >= kMargin) prove("P(y_max) exceeds T");
  }

  // No-blow-up bound with beta the minimum-norm point of U.
  const Vec beta = project_native(set, Vec::Zero(set.dim()));
  const double beta2 = beta.squaredNorm();
  add("beta_norm2", beta2);
  double q = inf;
  if (cert.c3 > 0.0) {
    if (beta2 > 0.0) {
      q = compute_Q(table, cert.c2, cert.c3, beta2, y_max);
    } else {
      q = integrate_over_G(table, y_max, [&](double g) { return 1.0 / (6.0 * cert.c3 * g * g); });
    }
  }
  add("Q_y_max", q);
  if (ub) add("Q_inverse_T_bound", T * (6.0 * cert.c3 * (*ub) * (*ub) + 4.0 * cert.c2 * beta2));
  if (q - T >= kMargin) prove("Q(y_max) exceeds T, so Q^-1(T) < y_max");
  if (rep.verdict == Verdict::NotProven && ub) {
    rep.notes.push_back("G is bounded, so Q^-1(T) is finite analytically; raise y_max above Q_inverse_T_bound to "
                        "certify it on the table");
  }
  return rep;
}

}  // namespace beq
