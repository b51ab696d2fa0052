#include <cmath>
#include <random>

#include "doctest.h"

#include "fixtures.hpp"
#include "beq/roots.hpp"

using namespace beq;

TEST_CASE("expected_F examples") {
  const auto& q = fx::quad();
  CHECK(std::abs(expected_F(fx::weighted(), 0.0, 1.0, q)) < 1e-15);
  CHECK(std::abs(expected_F(fx::dirac(0.0), 4.0, 1.0, q)) < 1e-12);
  CHECK(std::abs(expected_F(fx::weighted(), 1.0, std::exp(-0.125), q)) < 1e-8);
}

TEST_CASE("expected_F is strictly decreasing in z") {
  const auto& q = fx::quad();
  for (const auto& p : {fx::weighted(), fx::two_atom(), fx::dirac(-1.0)}) {
    for (double y : {0.0, 0.5, 2.0, 4.0}) {
      double prev = expected_F(p, y, 0.2, q);
      for (double z = 0.3; z < 5.0; z *= 1.3) {
        const double cur = expected_F(p, y, z, q);
        CHECK(cur < prev);
        prev = cur;
      }
    }
  }
}

TEST_CASE("compute_H examples") {
  const auto& q = fx::quad();
  CHECK(compute_H(fx::two_atom(), 0.0, q) == 1.0);
  CHECK(compute_H(fx::weighted(), 0.0, q) == 1.0);
  CHECK(std::abs(compute_H(fx::dirac(0.0), 2.0, q) - 1.0) < 1e-12);
  CHECK(std::abs(compute_H(fx::weighted(), 2.0, q) - std::exp(-0.25)) < 1e-10);
}

TEST_CASE("compute_G examples") {
  const auto& q = fx::quad();
  CHECK(std::abs(compute_G(fx::weighted(), 3.0, q) - 0.8) < 1e-8);
  CHECK(std::abs(compute_G(fx::dirac(0.5), 1.0, q) - 2.0) < 1e-8);
  const double g0 = compute_G(fx::two_atom(), 0.0, q);
  CHECK(g0 >= 0.5);
  CHECK(g0 <= 2.0);
  // At y = 0 the closed form reduces to 1 / sum w (1 - gamma) = 1 / 1.25.
  CHECK(std::abs(g0 - 0.8) < 1e-12);
}

TEST_CASE("compute_G_mixed_closed examples") {
  const auto& q = fx::quad();
  for (double g : {-1.0, 0.0, 0.5}) {
    CHECK(std::abs(compute_G_mixed_closed(DiscreteMeasure::dirac(g), 1.7, 0.9) - 1.0 / (1.0 - g)) < 1e-14);
  }
  CHECK(compute_G_mixed_closed(DiscreteMeasure::dirac(0.0), 0.0, 1.0) == 1.0);
  const auto m = DiscreteMeasure::make({-1.0, 0.5}, {0.5, 0.5});
  const auto p = BetweennessPreference::mixed_crra(m);
  const double H1 = compute_H(p, 1.0, q);
  CHECK(std::abs(compute_G_mixed_closed(m, 1.0, H1) - compute_G_given_H(p, 1.0, H1, q)) < 1e-8);
}

TEST_CASE("closed form and quadrature agree on random mixtures") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> gam(-2.0, 0.9);
  std::uniform_real_distribution<double> wt(0.1, 1.0);
  std::uniform_real_distribution<double> yy(0.0, 4.0);
  const auto& q = fx::quad();
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> g(3), w(3);
    for (auto& v : g) v = gam(rng);
    std::sort(g.begin(), g.end());
    for (auto& v : w) v = wt(rng);
    const double total = w[0] + w[1] + w[2];
    for (auto& v : w) v /= total;
    const auto m = DiscreteMeasure::make(g, w);
    const auto p = BetweennessPreference::mixed_crra(m);
    const double y = yy(rng);
    const double H = compute_H(p, y, q);
    const double closed = compute_G_mixed_closed(m, y, H);
    CHECK(std::abs(closed - compute_G_given_H(p, y, H, q)) < 1e-8);
    CHECK(closed >= 1.0 / (1.0 - m.min_gamma()) - 1e-8);
    CHECK(closed <= 1.0 / (1.0 - m.max_gamma()) + 1e-8);
  }
}

TEST_CASE("H solves its defining equation on a grid") {
  const auto& q = fx::quad();
  for (const auto& p : {fx::weighted(), fx::two_atom(), fx::dirac(-1.0)}) {
    for (double y = 0.0; y <= 4.0; y += 0.25) {
      CHECK(std::abs(expected_F(p, y, compute_H(p, y, q), q)) <= 1e-10);
    }
  }
}

TEST_CASE("weighted utility matches its closed forms on [0, 5]") {
  const auto& q = fx::quad();
  for (double rho : {0.0, 0.25, 0.6}) {
    for (double gamma : {-0.8, -0.5, -0.1, 0.0}) {
      if (!(gamma <= rho && rho < gamma + 1.0) || (rho == 0.0 && gamma == 0.0)) continue;
      const auto p = BetweennessPreference::weighted(rho, gamma);
      for (double y = 0.0; y <= 5.0; y += 0.5) {
        CAPTURE(rho);
        CAPTURE(gamma);
        CAPTURE(y);
        CHECK(std::abs(compute_H(p, y, q) - std::exp((1.0 - rho + 2.0 * gamma) * y / 2.0)) < 1e-8);
        CHECK(std::abs(compute_G(p, y, q) - 1.0 / (rho - 2.0 * gamma)) < 1e-8);
      }
    }
  }
}

TEST_CASE("doubling the quadrature order moves H and G by less than 1e-9") {
  const auto q1 = gauss_hermite_normal(96);
  const auto q2 = gauss_hermite_normal(192);
  for (const auto& p : {fx::weighted(), fx::two_atom(), fx::dirac(0.5), fx::dirac(-1.0)}) {
    for (double y : {0.25, 1.0, 2.0, 4.0}) {
      CHECK(std::abs(compute_H(p, y, q1) - compute_H(p, y, q2)) < 1e-9);
      CHECK(std::abs(compute_G(p, y, q1) - compute_G(p, y, q2)) < 1e-9);
    }
  }
}

TEST_CASE("factory validation") {
  CHECK_THROWS_AS(BetweennessPreference::weighted(0.5, 0.5), Error);
  CHECK_THROWS_AS(BetweennessPreference::weighted(0.0, -1.0), Error);
  CHECK_THROWS_AS(BetweennessPreference::weighted(0.6, -0.5), Error);  // rho >= gamma + 1
  CHECK_THROWS_AS(BetweennessPreference::weighted(-0.6, -0.5), Error);  // rho < gamma
  CHECK_THROWS_AS(DiscreteMeasure::make({0.5, -1.0}, {0.5, 0.5}), Error);
  CHECK_THROWS_AS(DiscreteMeasure::make({-1.0, 1.0}, {0.5, 0.5}), Error);
  CHECK_THROWS_AS(DiscreteMeasure::make({-1.0, 0.5}, {0.5, -0.5}), Error);
  CHECK_THROWS_AS(DiscreteMeasure::make({-1.0, 0.5}, {0.5, 0.3}), Error);
  CHECK_THROWS_AS(DiscreteMeasure::make({}, {}), Error);
  try {
    BetweennessPreference::weighted(0.5, 0.5);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("-1 < gamma <= 0") != std::string::npos);
  }
}

TEST_CASE("custom generators") {
  CustomGenerator log_gen{"log", [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; },
                          [](double x) { return -1.0 / (x * x); }, 1.0, 1.0};
  const auto p = BetweennessPreference::custom(log_gen);
  const auto& q = fx::quad();
  CHECK(std::abs(compute_H(p, 2.0, q) - 1.0) < 1e-10);
  CHECK(std::abs(compute_G(p, 2.0, q) - 1.0) < 1e-8);
  REQUIRE(p.g_upper_bound().has_value());
  CHECK(*p.g_upper_bound() == doctest::Approx(1.0));

  CustomGenerator shifted = log_gen;
  shifted.F = [](double x) { return std::log(x) + 0.1; };
  CHECK_THROWS_AS(BetweennessPreference::custom(shifted), Error);

  CustomGenerator convex = log_gen;
  convex.F = [](double x) { return x * x - 1.0; };
  convex.dF = [](double x) { return 2.0 * x; };
  convex.d2F = [](double) { return 2.0; };
  CHECK_THROWS_AS(BetweennessPreference::custom(convex), Error);

  CustomGenerator missing = log_gen;
  missing.d2F = nullptr;
  CHECK_THROWS_AS(BetweennessPreference::custom(missing), Error);
}

TEST_CASE("non-finite F names the offending node") {
  // Passes the sampled checks on [1e-3, 1e3] but blows up far in the tail.
  CustomGenerator g{"tail",
                    [](double x) { return x > 1e6 ? std::nan("") : std::log(x); },
                    [](double x) { return 1.0 / x; },
                    [](double x) { return -1.0 / (x * x); },
                    1.0,
                    std::nullopt};
  const auto p = BetweennessPreference::custom(g);
  try {
    expected_F(p, 9.0, 1.0, fx::quad());
    FAIL("expected a NumericalDomain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NumericalDomain);
    CHECK(std::string(e.what()).find("quadrature node") != std::string::npos);
  }
}

TEST_CASE("H refuses y beyond the quadrature's reach") {
  const auto q = gauss_hermite_normal(16);
  try {
    compute_H(fx::weighted(), 50.0, q);
    FAIL("expected a NumericalDomain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NumericalDomain);
  }
}

TEST_CASE("bracket expansion failure is a RootBracket error") {
  int calls = 0;
  auto never = [&](double) {
    ++calls;
    return 1.0;
  };
  try {
    solve_decreasing(never, 0.0, 1.0);
    FAIL("expected a RootBracket error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RootBracket);
  }
  CHECK(calls == 62);
}

TEST_CASE("built-in G bounds") {
  CHECK(*fx::weighted().g_upper_bound() == doctest::Approx(0.8));
  CHECK(*fx::weighted().g_lower_bound() == doctest::Approx(0.8));
  CHECK(*fx::two_atom().g_upper_bound() == doctest::Approx(2.0));
  CHECK(*fx::two_atom().g_lower_bound() == doctest::Approx(0.5));
}
