#pragma once

#include <string>
#include <vector>

#include "beq/equilibrium.hpp"
#include "beq/montecarlo.hpp"
#include "beq/quadrature.hpp"

namespace beq {

/// Shared default Gauss-Hermite rule of order kDefaultQuadOrder.
const QuadratureRule& default_quadrature();

/// J(t, x) = x exp(B(t)) H(A(t)) for a state-independent solution.
double analytic_J(const GTable& table, const EquilibriumSolution& sol, double t, double x);

/// f(t, x, z) = E[F(X(T) / z) | X(t) = x] and its partial derivatives,
/// with X(T) = x exp(B(t) + sqrt(A(t)) xi).
struct FDerivatives {
  double f;
  double f_t;
  double f_x;
  double f_xx;
  double f_z;
  double m1;  // E[F'(Y) Y]
  double m2;  // E[F''(Y) Y^2]
};

/// f_t uses the Gaussian integration-by-parts form
/// f_t = m1 B' + A' (m1 + m2) / 2, which is regular at A = 0.
FDerivatives f_and_derivatives(const BetweennessPreference& pref, const EquilibriumSolution& sol, double t, double x,
                               double z, const QuadratureRule& quad = default_quadrature());

/// Generator A^u f(t, x, J(t, x)) for a constant control u; the problem is
/// taken from the solution.
double hjb_residual(const BetweennessPreference& pref, const GTable& table, const EquilibriumSolution& sol,
                    const MarketModel& model, double t, double x, const Vec& u,
                    const QuadratureRule& quad = default_quadrature());

struct HjbMaximum {
  double value;
  Vec u;
};

/// Closed-form maximiser of the (concave) residual over the feasible set,
/// cross-checked against 200 random feasible controls.
HjbMaximum max_hjb_residual(const BetweennessPreference& pref, const GTable& table, const EquilibriumSolution& sol,
                            const MarketModel& model, const ConvexSet& set, double t, double x,
                            const QuadratureRule& quad = default_quadrature());

enum class CheckVerdict { Pass, Inconclusive, Fail };
std::string_view to_string(CheckVerdict v);

inline constexpr double kHjbTolerance = 2e-6;

struct HjbPoint {
  double t;
  double x;
  double residual_at_candidate;
  double max_residual;
  Vec argmax_u;
  CheckVerdict verdict;
};

struct HJBReport {
  std::vector<HjbPoint> points;
  double tolerance = kHjbTolerance;
  bool passed() const;
};

HJBReport hjb_report(const BetweennessPreference& pref, const GTable& table, const EquilibriumSolution& sol,
                     const MarketModel& model, const ConvexSet& set, const std::vector<double>& t_values,
                     const std::vector<double>& x_values, double tolerance = kHjbTolerance,
                     const QuadratureRule& quad = default_quadrature());

struct PerturbationEntry {
  int a_index;
  double eps;
  double slope;
  double ci;  // 95% half-width
  double predicted_slope;
  CheckVerdict verdict;
};

struct PerturbationReport {
  double t = 0.0;
  double x = 1.0;
  std::vector<Vec> alternatives;
  std::vector<double> epsilons;
  std::vector<PerturbationEntry> entries;
  /// Per alternative: linear fit of slope against eps evaluated at eps = 0.
  std::vector<double> extrapolated;
  std::vector<double> extrapolated_ci;
  double J_analytic = 0.0;
  McEstimate J_mc{0.0, 0.0};
  CheckVerdict verdict = CheckVerdict::Pass;
  std::vector<std::string> notes;
};

/// Slopes (J(u_{t,eps,a}) - J(u_hat)) / eps with common random numbers for
/// every alternative and eps.
PerturbationReport perturbation_test(const BetweennessPreference& pref, const GTable& table,
                                     const EquilibriumSolution& sol, const MarketModel& model, const ConvexSet& set,
                                     double t, double x, const std::vector<Vec>& alternatives,
                                     const std::vector<double>& eps_ladder, const SimConfig& cfg,
                                     const QuadratureRule& quad = default_quadrature());

}  // namespace beq
