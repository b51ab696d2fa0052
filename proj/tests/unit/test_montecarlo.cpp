#include <cmath>
#include <cstring>
#include <numeric>

#include "doctest.h"

#include "fixtures.hpp"
#include "beq/montecarlo.hpp"
#include "beq/rng.hpp"

using namespace beq;
using fx::vec;

namespace {

Strategy constant_strategy(Vec u) {
  return Strategy{[u](double) { return u; }, {}, {}};
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

std::vector<double> logs(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(std::log(x));
  return out;
}

}  // namespace

TEST_CASE("counter-based normals are stateless and standard") {
  const CounterNormal a(5, 17), b(5, 17), c(5, 18);
  CHECK(a(123) == b(123));
  CHECK(a(123) != c(123));
  std::vector<double> v;
  for (std::uint64_t i = 0; i < 200000; ++i) v.push_back(a(i));
  CHECK(std::abs(mean(v)) < 4.0 / std::sqrt(200000.0));
  CHECK(std::abs(sd(v) - 1.0) < 0.01);
}

TEST_CASE("no investment leaves wealth deterministic") {
  SimConfig cfg;
  cfg.n_paths = 2000;
  const auto m0 = fx::scalar_market(0.08, 0.2);
  for (double x : simulate_terminal_wealth(m0, constant_strategy(vec({0.0})), 0.0, 1.5, cfg, Problem::Constrained)) {
    CHECK(x == 1.5);
  }
  const auto mr = fx::scalar_market(0.08, 0.2, 1.0, 0.03, 0.05);
  for (double x : simulate_terminal_wealth(mr, constant_strategy(vec({0.0})), 0.25, 2.0, cfg, Problem::Borrowing)) {
    CHECK(std::abs(x / (2.0 * std::exp(0.03 * 0.75)) - 1.0) < 1e-14);
  }
}

TEST_CASE("log-wealth mean matches lognormal moments") {
  for (Scheme scheme : {Scheme::ExactLognormal, Scheme::EulerLog}) {
    SimConfig cfg;
    cfg.n_paths = 50000;
    cfg.scheme = scheme;
    cfg.seed = 99;
    const auto m1 = fx::scalar_market(0.08, 0.2);
    const auto lx = logs(simulate_terminal_wealth(m1, constant_strategy(vec({1.2})), 0.0, 1.0, cfg,
                                                  Problem::Constrained));
    const double expected = (1.2 * 0.08 - 0.5 * 1.44 * 0.04) * 1.0;
    CHECK(std::abs(mean(lx) - expected) < 4.0 * sd(lx) / std::sqrt(double(lx.size())));
    CHECK(std::abs(sd(lx) - 1.2 * 0.2) < 0.01 * 0.24);
  }
}

TEST_CASE("time-varying coefficients use the integrated moments") {
  const auto m = fx::piecewise_market();
  const Vec u = vec({0.6, 0.5});
  SimConfig cfg;
  cfg.n_paths = 50000;
  cfg.seed = 3;
  const auto lx = logs(simulate_terminal_wealth(m, constant_strategy(u), 0.0, 1.0, cfg, Problem::Constrained));
  // Fine midpoint rule for int (u.mu - |sigma^T u|^2 / 2) dt.
  double expected = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) / n;
    expected += (u.dot(m.mu(s)) - 0.5 * (m.sigma(s).transpose() * u).squaredNorm()) / n;
  }
  CHECK(std::abs(mean(lx) - expected) < 4.0 * sd(lx) / std::sqrt(double(lx.size())));
}

TEST_CASE("serial and parallel kernels are bit-identical") {
  const auto t = fx::table(fx::two_atom(), 4.0, 257);
  const auto m = fx::piecewise_market();
  const auto set = ConvexSet::intersection({ConvexSet::nonneg_orthant(2), fx::no_borrowing(2)}, vec({0.2, 0.2}));
  const auto sol = solve_constrained(t, m, set, 512);
  for (Scheme scheme : {Scheme::ExactLognormal, Scheme::EulerLog}) {
    SimConfig cfg;
    cfg.scheme = scheme;
    const auto plan = make_sim_plan(m, perturbed_strategy(sol, 0.1, 0.05, vec({0.5, 0.5})), Problem::Constrained,
                                    0.1, 1.0, cfg);
    const auto serial = simulate_paths_serial(plan, 5000, 17);
    for (int threads : {1, 2, 3, 8}) CHECK(bitwise_equal(serial, simulate_paths_parallel(plan, 5000, 17, threads)));
    const auto p = fx::two_atom();
    const double ms = mean_F_serial(p, serial, 1.01);
    for (int threads : {1, 2, 5}) {
      const double mp = mean_F_parallel(p, serial, 1.01, threads);
      CHECK(std::memcmp(&ms, &mp, sizeof(double)) == 0);
    }
  }
}

TEST_CASE("same seed, same samples") {
  const auto m = fx::scalar_market(0.08, 0.2);
  SimConfig cfg;
  cfg.n_paths = 3000;
  cfg.seed = 12345;
  const auto a = simulate_terminal_wealth(m, constant_strategy(vec({1.1})), 0.0, 1.0, cfg, Problem::Constrained);
  const auto b = simulate_terminal_wealth(m, constant_strategy(vec({1.1})), 0.0, 1.0, cfg, Problem::Constrained);
  CHECK(bitwise_equal(a, b));
  cfg.seed = 12346;
  const auto c = simulate_terminal_wealth(m, constant_strategy(vec({1.1})), 0.0, 1.0, cfg, Problem::Constrained);
  CHECK_FALSE(bitwise_equal(a, c));
}

TEST_CASE("implicit_J_mc examples") {
  const std::vector<double> flat(1500, 1.7);
  CHECK(implicit_J_mc(fx::weighted(), flat, 1.0).estimate == 1.7);

  std::vector<double> v;
  const CounterNormal z(1, 0);
  for (int i = 0; i < 20000; ++i) v.push_back(std::exp(0.1 + 0.3 * z(i)));
  double geo = 0.0;
  for (double x : v) geo += std::log(x) / v.size();
  CHECK(std::abs(implicit_J_mc(fx::dirac(0.0), v, 1.0).estimate - std::exp(geo)) < 1e-12);

  CHECK_THROWS_AS(implicit_J_mc(fx::weighted(), std::vector<double>(999, 1.0), 1.0), Error);
}

TEST_CASE("implicit_J_mc is positively homogeneous") {
  std::vector<double> v;
  const CounterNormal z(2, 0);
  for (int i = 0; i < 20000; ++i) v.push_back(std::exp(0.05 + 0.25 * z(i)));
  const auto p = fx::two_atom();
  const auto base = implicit_J_mc(p, v, 1.0);
  for (double lam : {0.5, 3.0}) {
    std::vector<double> s = v;
    for (double& x : s) x *= lam;
    const auto scaled = implicit_J_mc(p, s, lam);
    CHECK(std::abs(scaled.estimate - lam * base.estimate) < 1e-10 * lam);
    CHECK(std::abs(scaled.ci_halfwidth - lam * base.ci_halfwidth) < 1e-6 * lam * base.ci_halfwidth);
  }
}

TEST_CASE("perturbed strategy switches on [t, t + eps)") {
  const auto sol = solve_constrained(fx::table(fx::weighted()), fx::scalar_market(0.08, 0.2), ConvexSet::full_space(1));
  const auto s = perturbed_strategy(sol, 0.2, 0.1, vec({3.0}));
  CHECK(s.u(0.19)[0] == doctest::Approx(1.6));
  CHECK(s.u(0.2)[0] == 3.0);
  CHECK(s.u(0.1)[0] == doctest::Approx(1.6));
  CHECK(s.u(0.2999)[0] == 3.0);
  CHECK(s.u(0.31)[0] == doctest::Approx(1.6));
  CHECK_THROWS_AS(perturbed_strategy(sol, 0.95, 0.1, vec({3.0})), Error);
}

TEST_CASE("finite-eps perturbation matches its lognormal closed form") {
  // The perturbed strategy is deterministic, so X(T) is lognormal and
  // J(u_eps) = x exp(B_eps) H(A_eps) with A_eps, B_eps integrated piecewise.
  const auto p = fx::weighted();
  const auto t = fx::table(p);
  const auto m = fx::scalar_market(0.08, 0.2);
  const auto sol = solve_constrained(t, m, ConvexSet::full_space(1));
  SimConfig cfg;
  cfg.n_paths = 100000;
  cfg.seed = 5;
  const auto base = simulate_terminal_wealth(m, strategy_from_solution(sol), 0.0, 1.0, cfg, Problem::Constrained);
  for (double a : {0.5, 2.4}) {
    for (double eps : {0.1, 0.02}) {
      const auto after = sol.state_at(eps);
      const double A = after.A + eps * a * a * 0.04;
      const double B = after.B + eps * (a * 0.08 - 0.5 * a * a * 0.04);
      const double J_eps = std::exp(B) * t.H(A);
      const double J_hat = std::exp(sol.B_vals.front()) * t.H(sol.A_vals.front());
      const auto alt = simulate_terminal_wealth(m, perturbed_strategy(sol, 0.0, eps, vec({a})), 0.0, 1.0, cfg,
                                                Problem::Constrained);
      const auto diff = paired_J_difference(p, base, alt, 1.0);
      CAPTURE(a);
      CAPTURE(eps);
      CHECK(std::abs(diff.estimate - (J_eps - J_hat)) < 3.0 * diff.ci_halfwidth);
      const auto j = implicit_J_mc(p, alt, 1.0);
      CHECK(std::abs(j.estimate - J_eps) < 3.0 * j.ci_halfwidth);
    }
  }
}

TEST_CASE("pairwise_sum") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(pairwise_sum(std::span<const double>()) == 0.0);
  std::vector<double> tiny(1 << 16, 0.1);
  CHECK(std::abs(pairwise_sum(tiny) - 0.1 * (1 << 16)) < 1e-9);
}

TEST_CASE("scheme names and thread configuration") {
  CHECK(scheme_from_string("exact") == Scheme::ExactLognormal);
  CHECK(scheme_from_string("euler") == Scheme::EulerLog);
  CHECK_THROWS_AS(scheme_from_string("milstein"), Error);
  setenv("BEQ_THREADS", "0", 1);
  CHECK(configured_threads() == 0);
  setenv("BEQ_THREADS", "3", 1);
  CHECK(configured_threads() == 3);
  setenv("BEQ_THREADS", "many", 1);
  CHECK_THROWS_AS(configured_threads(), Error);
  unsetenv("BEQ_THREADS");
  CHECK(configured_threads() == -1);
}
