#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "beq/equilibrium.hpp"
#include "beq/preference.hpp"

namespace beq {

enum class Scheme { ExactLognormal, EulerLog };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

struct SimConfig {
  int n_paths = 100000;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::ExactLognormal;
  /// Euler steps on [t, T]. The exact scheme uses the same uniform cells
  /// for its Brownian increments, so both schemes share random numbers.
  int n_time_steps = 64;
};

/// Deterministic (state-independent) portfolio weights.
struct Strategy {
  /// Right-continuous in time.
  std::function<Vec(double)> u;
  /// Times where u may jump. Segments are cut there.
  std::vector<double> jumps;
  /// Times where u is continuous but not smooth; moment integrals are split
  /// there.
  std::vector<double> knots;
};

/// Holds a reference to `sol`, which must outlive the strategy.
Strategy strategy_from_solution(const EquilibriumSolution& sol);

/// u_{t,eps,a}: the constant a on [t, t + eps), the solution's u elsewhere.
Strategy perturbed_strategy(const EquilibriumSolution& sol, double t, double eps, Vec a);

/// One piece of [t, T] between consecutive cell boundaries or knots where
/// the log-wealth increment is mean + coef . dW.
struct SimSegment {
  int cell;
  double lambda_lo;  // position of the segment inside its cell, in [0, 1]
  double lambda_hi;
  double mean;
  Vec coef;
};

/// Path-independent part of a simulation.
struct SimPlan {
  double x = 1.0;
  int d = 1;
  int n_cells = 1;
  double cell_width = 0.0;
  std::vector<SimSegment> segments;
};

SimPlan make_sim_plan(const MarketModel& model, const Strategy& strategy, Problem problem, double t, double x,
                      const SimConfig& cfg);

/// Reference kernel: one path after another.
std::vector<double> simulate_paths_serial(const SimPlan& plan, int n_paths, std::uint64_t seed);
/// OpenMP kernel, bit-identical to the serial one. threads <= 0 uses the
/// OpenMP default.
std::vector<double> simulate_paths_parallel(const SimPlan& plan, int n_paths, std::uint64_t seed, int threads = 0);

/// Samples of X(T) given X(t) = x. Dispatches on BEQ_THREADS.
std::vector<double> simulate_terminal_wealth(const MarketModel& model, const Strategy& strategy, double t, double x,
                                             const SimConfig& cfg, Problem problem);

/// Worker count from BEQ_THREADS: 0 means the serial kernel, unset means
/// the OpenMP default (returned as -1).
int configured_threads();

/// Order-independent sum: fixed binary splitting down to blocks of 8.
double pairwise_sum(std::span<const double> v);

/// Sample mean of F(X_i / z). The parallel variant fills a buffer with
/// OpenMP and reduces it pairwise, so both agree bitwise.
double mean_F_serial(const BetweennessPreference& pref, std::span<const double> samples, double z);
double mean_F_parallel(const BetweennessPreference& pref, std::span<const double> samples, double z, int threads = 0);

struct McEstimate {
  double estimate;
  double ci_halfwidth;  // 95%
};

/// Root z* of (1/N) sum F(X_i / z) = 0 with a delta-method interval.
McEstimate implicit_J_mc(const BetweennessPreference& pref, std::span<const double> samples, double bracket_hint);

/// J_mc(alt) - J_mc(base) from paired samples, with the 95% half-width of
/// the paired delta-method influence function.
McEstimate paired_J_difference(const BetweennessPreference& pref, std::span<const double> base,
                               std::span<const double> alt, double bracket_hint);

}  // namespace beq
