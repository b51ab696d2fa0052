#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "beq/constraint.hpp"
#include "beq/gtable.hpp"
#include "beq/market.hpp"
#include "beq/preference.hpp"

namespace beq {

enum class Problem { Constrained, Borrowing };

enum class Regime { Borrow, Boundary, Save, Constrained, Unconstrained };

std::string_view to_string(Problem p);
std::string_view to_string(Regime r);
Regime regime_from_string(std::string_view s);

struct SolverDiagnostics {
  int steps = 0;
  double max_local_error = 0.0;
  int regime_switches = 0;
  bool chattering = false;
  /// Nodes where 1^T (sigma^T)^-1 kappa_i <= 0, i.e. the threshold form of
  /// the borrowing strategy is not defined there.
  int nonpositive_threshold_nodes = 0;
  std::vector<std::string> notes;
};

/// Time-grid representation of a state-independent strategy together with
/// A(t) = int_t^T |sigma^T u|^2 ds and B(t) = int_t^T drift(u) ds - A(t)/2.
struct EquilibriumSolution {
  Problem problem = Problem::Constrained;
  std::vector<double> t_grid;
  std::vector<double> A_vals;
  std::vector<double> B_vals;
  std::vector<Vec> a_vals;  // sigma^T(t) u(t)
  std::vector<Vec> u_vals;
  std::vector<Regime> regime;
  std::vector<double> fp_residual;
  /// Wealth drift rate under u at each node (u^T mu, plus cash terms when
  /// borrowing).
  std::vector<double> drift_vals;
  SolverDiagnostics diagnostics;

  int d() const { return u_vals.empty() ? 0 : static_cast<int>(u_vals.front().size()); }
  double T() const { return t_grid.back(); }

  struct State {
    double A;
    double B;
    double dA;  // A'(t) = -|a(t)|^2
    double dB;  // B'(t) = -drift(t) + |a(t)|^2 / 2
    Vec u;
    Vec a;
  };
  /// A and B by cubic Hermite with their exact slopes; u and a linearly.
  State state_at(double t) const;
};

inline constexpr int kDefaultSteps = 2048;

/// Backward RK4 for A' = -|P_t(kappa G(A))|^2, A(T) = 0 (requires r = 0).
EquilibriumSolution solve_constrained(const GTable& table, const MarketModel& model, const ConvexSet& set,
                                      int n_steps = kDefaultSteps);

/// A(t) = Gcal^-1(int_t^T |kappa|^2) for the unconstrained problem.
EquilibriumSolution solve_unconstrained_closed_form(const GTable& table, const MarketModel& model,
                                                    int n_steps = kDefaultSteps);

struct BorrowingRhs {
  double value;  // |sigma^T u|^2
  Regime regime;
  Vec u;
  bool nonpositive_threshold = false;
};

/// Piecewise right-hand side of the borrowing-cost ODE at state y.
BorrowingRhs borrowing_rhs(const GTable& table, const MarketModel& model, double t, double y);

/// Same branch selection with an explicit risk tolerance g in place of G(y).
BorrowingRhs borrowing_branch(const MarketModel& model, double t, double g);

EquilibriumSolution solve_borrowing(const GTable& table, const MarketModel& model, int n_steps = kDefaultSteps);

/// Wealth drift rate per unit wealth for weights u.
double wealth_drift(const MarketModel& model, Problem problem, double t, const Vec& u);

/// Builds a candidate solution from arbitrary node strategies, integrating
/// A and B by the trapezoid rule on the given grid.
EquilibriumSolution candidate_from_strategy(const MarketModel& model, Problem problem, std::vector<double> t_grid,
                                            std::vector<Vec> u_vals);

/// |a_k - P_{t_k}(kappa G(A_k))| per node for the constrained problem, or
/// the distance to the three-branch strategy for the borrowing problem.
std::vector<double> fixed_point_residuals(const EquilibriumSolution& sol, const GTable& table,
                                          const MarketModel& model, const ConvexSet& set);

enum class Verdict { Proven, NotProven };

struct WellposednessReport {
  Problem problem = Problem::Constrained;
  std::vector<std::pair<std::string, double>> condition_values;
  Verdict verdict = Verdict::NotProven;
  std::vector<std::string> notes;

  double value(const std::string& name) const;
};

WellposednessReport check_wellposedness(Problem problem, const BetweennessPreference& pref, const GTable& table,
                                        const MarketModel& model, const ConvexSet& set);

}  // namespace beq
