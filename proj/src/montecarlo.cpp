#include "beq/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <string>

#include <omp.h>

#include "beq/rng.hpp"
#include "beq/roots.hpp"

namespace beq {

namespace {

constexpr int kMaxSplitsPerCell = 64;

// Three-point Gauss-Legendre on [0, 1]; interior nodes only, so a jump at
// either end of the piece is never sampled.
constexpr double kGlNode[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
constexpr double kGlWeight[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

struct Moments {
  double mean = 0.0;   // int drift - |a|^2 / 2
  double var = 0.0;    // int |a|^2
  Vec dir;             // int a
};

Moments integrate_segment(const MarketModel& model, const Strategy& strategy, Problem problem, double s0, double s1,
                          const std::vector<double>& knots) {
  Moments m;
  m.dir = Vec::Zero(model.d());
  auto lo = std::upper_bound(knots.begin(), knots.end(), s0);
  double p0 = s0;
  auto piece = [&](double a, double b) {
    for (int q = 0; q < 3; ++q) {
      const double s = a + kGlNode[q] * (b - a);
      const double w = kGlWeight[q] * (b - a);
      const Vec u = strategy.u(s);
      const Vec av = model.sigma(s).transpose() * u;
      const double a2 = av.squaredNorm();
      m.mean += w * (wealth_drift(model, problem, s, u) - 0.5 * a2);
      m.var += w * a2;
      m.dir += w * av;
    }
  };
  for (; lo != knots.end() && *lo < s1; ++lo) {
    piece(p0, *lo);
    p0 = *lo;
  }
  piece(p0, s1);
  return m;
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

double simulate_one(const SimPlan& plan, std::uint64_t seed, std::uint64_t path, std::vector<double>& dw,
                    std::vector<double>& w_prev, std::vector<double>& w_next) {
  const CounterNormal rng(seed, path);
  const int d = plan.d;
  const double h = plan.cell_width;
  const double sqrt_h = std::sqrt(h);
  const std::uint64_t bridge_base = static_cast<std::uint64_t>(plan.n_cells) * d;
  double log_growth = 0.0;
  int cell = -1;
  int split = 0;
  double lambda_prev = 0.0;
  for (const SimSegment& seg : plan.segments) {
    if (seg.cell != cell) {
      cell = seg.cell;
      split = 0;
      lambda_prev = 0.0;
      for (int j = 0; j < d; ++j) {
        dw[j] = sqrt_h * rng(static_cast<std::uint64_t>(cell) * d + j);
        w_prev[j] = 0.0;
      }
    }
    if (seg.lambda_hi >= 1.0) {
      for (int j = 0; j < d; ++j) w_next[j] = dw[j];
    } else {
      // Brownian bridge from (lambda_prev, w_prev) to (1, dw).
      const double frac = (seg.lambda_hi - lambda_prev) / (1.0 - lambda_prev);
      const double sd = std::sqrt(h * (seg.lambda_hi - lambda_prev) * (1.0 - seg.lambda_hi) / (1.0 - lambda_prev));
      const std::uint64_t base = bridge_base + (static_cast<std::uint64_t>(cell) * kMaxSplitsPerCell + split) * d;
      for (int j = 0; j < d; ++j) {
        w_next[j] = w_prev[j] + frac * (dw[j] - w_prev[j]) + sd * rng(base + j);
      }
      ++split;
    }
    double noise = 0.0;
    for (int j = 0; j < d; ++j) noise += seg.coef[j] * (w_next[j] - w_prev[j]);
    log_growth += seg.mean + noise;
    std::swap(w_prev, w_next);
    lambda_prev = seg.lambda_hi;
  }
  return plan.x * std::exp(log_growth);
}

double sample_sd(std::span<const double> v, double mean) {
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(v.size() - 1));
}

double mean_F(const BetweennessPreference& pref, std::span<const double> samples, double z) {
  const int threads = configured_threads();
  return threads == 0 ? mean_F_serial(pref, samples, z) : mean_F_parallel(pref, samples, z, threads);
}

// D = mean F'(X/z) X / z^2, i.e. minus the z-derivative of mean_F.
double slope_in_z(const BetweennessPreference& pref, std::span<const double> samples, double z) {
  std::vector<double> v(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double y = samples[i] / z;
    v[i] = pref.dF(y) * y / z;
  }
  return pairwise_sum(v) / static_cast<double>(v.size());
}

std::vector<double> influence(const BetweennessPreference& pref, std::span<const double> samples, double z) {
  const double D = slope_in_z(pref, samples, z);
  if (!(std::abs(D) > 0.0)) throw Error(ErrorKind::NumericalDomain, "vanishing slope of the sample objective");
  std::vector<double> psi(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) psi[i] = pref.F(samples[i] / z) / D;
  return psi;
}

void check_samples(std::span<const double> samples) {
  if (samples.size() < 1000) {
    throw Error(ErrorKind::Config, "Monte Carlo estimates need at least 1000 samples, got " +
                                       std::to_string(samples.size()));
  }
}

double solve_implicit(const BetweennessPreference& pref, std::span<const double> samples, double hint) {
  if (std::all_of(samples.begin(), samples.end(), [&](double s) { return s == samples[0]; })) return samples[0];
  if (!(hint > 0.0) || !std::isfinite(hint)) {
    std::vector<double> logs(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) logs[i] = std::log(samples[i]);
    hint = std::exp(pairwise_sum(logs) / static_cast<double>(logs.size()));
  }
  const double s0 = std::log(hint);
  auto g = [&](double s) { return mean_F(pref, samples, std::exp(s)); };
  return std::exp(solve_decreasing(g, s0 - 0.25, s0 + 0.25));
}

}  // namespace

std::string_view to_string(Scheme s) { return s == Scheme::ExactLognormal ? "exact" : "euler"; }

Scheme scheme_from_string(std::string_view s) {
  if (s == "exact") return Scheme::ExactLognormal;
  if (s == "euler") return Scheme::EulerLog;
  throw Error(ErrorKind::Config, "unknown scheme '" + std::string(s) + "' (expected exact or euler)");
}

Strategy strategy_from_solution(const EquilibriumSolution& sol) {
  Strategy s;
  s.u = [&sol](double t) { return sol.state_at(std::clamp(t, sol.t_grid.front(), sol.t_grid.back())).u; };
  s.knots = sol.t_grid;
  return s;
}

Strategy perturbed_strategy(const EquilibriumSolution& sol, double t, double eps, Vec a) {
  if (!(eps > 0.0) || t + eps > sol.T()) {
    std::ostringstream os;
    os << "perturbation window [" << t << ", " << t + eps << ") must be nonempty and inside [0, T]";
    throw Error(ErrorKind::Config, os.str());
  }
  Strategy s = strategy_from_solution(sol);
  const double end = t + eps;
  s.u = [base = s.u, t, end, a = std::move(a)](double s_) -> Vec {
    if (s_ >= t && s_ < end) return a;
    return base(s_);
  };
  s.jumps = {t, end};
  return s;
}

SimPlan make_sim_plan(const MarketModel& model, const Strategy& strategy, Problem problem, double t, double x,
                      const SimConfig& cfg) {
  const double T = model.T();
  if (!(t >= 0.0 && t < T)) throw Error(ErrorKind::Config, "simulation start must lie in [0, T)");
  if (!(x > 0.0)) throw Error(ErrorKind::Config, "initial wealth must be positive");
  if (cfg.n_time_steps < 1) throw Error(ErrorKind::Config, "verify.n_time_steps must be positive");
  if (cfg.n_paths < 1) throw Error(ErrorKind::Config, "verify.n_paths must be positive");

  SimPlan plan;
  plan.x = x;
  plan.d = model.d();
  plan.n_cells = cfg.n_time_steps;
  plan.cell_width = (T - t) / cfg.n_time_steps;

  std::vector<double> knots = strategy.knots;
  for (double b : model.breakpoints()) knots.push_back(b);
  for (double j : strategy.jumps) knots.push_back(j);
  knots = sorted_unique(std::move(knots));
  const std::vector<double> jumps = sorted_unique(strategy.jumps);

  for (int k = 0; k < plan.n_cells; ++k) {
    const double c0 = t + k * plan.cell_width;
    const double c1 = k + 1 == plan.n_cells ? T : t + (k + 1) * plan.cell_width;
    std::vector<double> cuts{c0};
    for (double j : jumps) {
      if (j > c0 && j < c1) cuts.push_back(j);
    }
    cuts.push_back(c1);
    if (static_cast<int>(cuts.size()) - 2 > kMaxSplitsPerCell) {
      throw Error(ErrorKind::Config, "too many strategy jumps inside one simulation cell");
    }
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double s0 = cuts[i];
      const double s1 = cuts[i + 1];
      SimSegment seg;
      seg.cell = k;
      seg.lambda_lo = (s0 - c0) / (c1 - c0);
      seg.lambda_hi = i + 2 == cuts.size() ? 1.0 : (s1 - c0) / (c1 - c0);
      const double len = s1 - s0;
      if (cfg.scheme == Scheme::EulerLog) {
        const Vec u = strategy.u(s0);
        seg.coef = model.sigma(s0).transpose() * u;
        seg.mean = (wealth_drift(model, problem, s0, u) - 0.5 * seg.coef.squaredNorm()) * len;
      } else {
        const Moments m = integrate_segment(model, strategy, problem, s0, s1, knots);
        seg.mean = m.mean;
        const double dn = m.dir.norm();
        if (m.var > 0.0 && dn > 0.0) {
          seg.coef = m.dir * (std::sqrt(m.var / len) / dn);
        } else if (m.var > 0.0) {
          const double mid = 0.5 * (s0 + s1);
          const Vec a = model.sigma(mid).transpose() * strategy.u(mid);
          seg.coef = a * (std::sqrt(m.var / len) / a.norm());
        } else {
          seg.coef = Vec::Zero(plan.d);
        }
      }
      plan.segments.push_back(std::move(seg));
    }
  }
  return plan;
}

std::vector<double> simulate_paths_serial(const SimPlan& plan, int n_paths, std::uint64_t seed) {
  std::vector<double> out(static_cast<std::size_t>(n_paths));
  std::vector<double> dw(plan.d), w0(plan.d), w1(plan.d);
  for (int p = 0; p < n_paths; ++p) out[p] = simulate_one(plan, seed, static_cast<std::uint64_t>(p), dw, w0, w1);
  return out;
}

std::vector<double> simulate_paths_parallel(const SimPlan& plan, int n_paths, std::uint64_t seed, int threads) {
  std::vector<double> out(static_cast<std::size_t>(n_paths));
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nt)
  {
    std::vector<double> dw(plan.d), w0(plan.d), w1(plan.d);
#pragma omp for schedule(static)
    for (int p = 0; p < n_paths; ++p) out[p] = simulate_one(plan, seed, static_cast<std::uint64_t>(p), dw, w0, w1);
  }
  return out;
}

std::vector<double> simulate_terminal_wealth(const MarketModel& model, const Strategy& strategy, double t, double x,
                                             const SimConfig& cfg, Problem problem) {
  const SimPlan plan = make_sim_plan(model, strategy, problem, t, x, cfg);
  const int threads = configured_threads();
  if (threads == 0) return simulate_paths_serial(plan, cfg.n_paths, cfg.seed);
  return simulate_paths_parallel(plan, cfg.n_paths, cfg.seed, threads);
}

int configured_threads() {
  const char* env = std::getenv("BEQ_THREADS");
  if (env == nullptr || *env == '\0') return -1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 0 || v > 4096) {
    throw Error(ErrorKind::Config, std::string("BEQ_THREADS must be a nonnegative integer, got '") + env + "'");
  }
  return static_cast<int>(v);
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double mean_F_serial(const BetweennessPreference& pref, std::span<const double> samples, double z) {
  std::vector<double> v(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) v[i] = pref.F(samples[i] / z);
  return pairwise_sum(v) / static_cast<double>(v.size());
}

double mean_F_parallel(const BetweennessPreference& pref, std::span<const double> samples, double z, int threads) {
  std::vector<double> v(samples.size());
  const long n = static_cast<long>(samples.size());
  const int nt = threads > 0 ? threads : omp_get_max_threads();
  std::exception_ptr failure;
#pragma omp parallel for num_threads(nt) schedule(static)
  for (long i = 0; i < n; ++i) {
    try {
      v[i] = pref.F(samples[i] / z);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return pairwise_sum(v) / static_cast<double>(v.size());
}

McEstimate implicit_J_mc(const BetweennessPreference& pref, std::span<const double> samples, double bracket_hint) {
  check_samples(samples);
  const double z = solve_implicit(pref, samples, bracket_hint);
  const std::vector<double> psi = influence(pref, samples, z);
  const double n = static_cast<double>(psi.size());
  const double sd = sample_sd(psi, pairwise_sum(psi) / n);
  return {z, 1.96 * sd / std::sqrt(n)};
}

McEstimate paired_J_difference(const BetweennessPreference& pref, std::span<const double> base,
                               std::span<const double> alt, double bracket_hint) {
  check_samples(base);
  if (alt.size() != base.size()) throw Error(ErrorKind::Config, "paired samples differ in size");
  const double z0 = solve_implicit(pref, base, bracket_hint);
  const double z1 = solve_implicit(pref, alt, z0);
  const std::vector<double> p0 = influence(pref, base, z0);
  const std::vector<double> p1 = influence(pref, alt, z1);
  std::vector<double> psi(p0.size());
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = p1[i] - p0[i];
  const double n = static_cast<double>(psi.size());
  const double sd = sample_sd(psi, pairwise_sum(psi) / n);
  return {z1 - z0, 1.96 * sd / std::sqrt(n)};
}

}  // namespace beq
