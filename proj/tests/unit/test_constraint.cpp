#include <cmath>
#include <random>
#include <utility>

#include "doctest.h"

#include "fixtures.hpp"

using namespace beq;
using fx::vec;

namespace {

// Grid minimiser of |x - sigma^T u| over u in the set: a 0.01 scan of
// [-3, 3]^2, then re-centred windows around the best point at 1e-3, 1e-4
// and 1e-5.
Vec brute_force(const ConvexSet& set, const Mat& sigma, const Vec& x) {
  const Mat st = sigma.transpose();
  Vec best = set.witness();
  double best_d = (x - st * best).norm();
  auto scan = [&](double cx, double cy, double half, double h) {
    const int n = static_cast<int>(std::lround(2.0 * half / h));
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        const Vec u = vec({cx - half + i * h, cy - half + j * h});
        if (!contains(set, u)) continue;
        const double d = (x - st * u).norm();
        if (d < best_d) {
          best_d = d;
          best = u;
        }
      }
    }
  };
  scan(0.0, 0.0, 3.0, 0.01);
  REQUIRE(std::abs(best[0]) < 2.98);
  REQUIRE(std::abs(best[1]) < 2.98);
  // Across a boundary the objective has a first-order slope, along it only
  // a second-order one, so a grid point's small gap to the boundary can buy
  // a large tangential shift. Finer re-centred windows bound that shift.
  for (const auto& [half, h] : {std::pair{0.1, 1e-3}, std::pair{0.01, 1e-4}, std::pair{1e-3, 1e-5}}) {
    for (int pass = 0; pass < 200; ++pass) {
      const Vec centre = best;
      scan(centre[0], centre[1], half, h);
      if (best == centre) break;
    }
  }
  return st * best;
}

std::vector<ConvexSet> families() {
  return {ConvexSet::nonneg_orthant(2),
          ConvexSet::box(vec({-0.5, 0.0}), vec({1.0, 0.8})),
          ConvexSet::ball(vec({0.2, -0.1}), 0.7),
          ConvexSet::halfspace(vec({1.0, 1.0}), 1.0),
          ConvexSet::intersection({ConvexSet::nonneg_orthant(2), ConvexSet::halfspace(vec({1.0, 1.0}), 1.0)},
                                  vec({0.25, 0.25}))};
}

Mat random_sigma(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> diag(0.15, 0.4);
  std::uniform_real_distribution<double> off(-0.08, 0.08);
  Mat s(2, 2);
  s << diag(rng), off(rng), off(rng), diag(rng);
  return s;
}

}  // namespace

TEST_CASE("contains examples") {
  CHECK(contains(ConvexSet::nonneg_orthant(2), vec({0.2, 0.0}), 0.0));
  CHECK_FALSE(contains(ConvexSet::ball(vec({0.0, 0.0}), 1.0), vec({3.0, 4.0}), 0.0));
  CHECK(contains(fx::no_borrowing(2), vec({0.4, 0.4}), 0.0));
  CHECK(contains(ConvexSet::ball(vec({0.0, 0.0}), 1.0), vec({3.0, 4.0}), 4.0));
  CHECK(contains(ConvexSet::full_space(3), vec({1e9, -1e9, 0.0})));
}

TEST_CASE("project_native examples") {
  CHECK((project_native(ConvexSet::nonneg_orthant(2), vec({-1.0, 2.0})) - vec({0.0, 2.0})).norm() < 1e-15);
  CHECK((project_native(ConvexSet::ball(vec({0.0, 0.0}), 1.0), vec({3.0, 4.0})) - vec({0.6, 0.8})).norm() < 1e-15);
  const auto boxed = ConvexSet::intersection(
      {ConvexSet::box(vec({0.0, 0.0}), vec({1.0, 1.0})), fx::no_borrowing(2)}, vec({0.1, 0.1}));
  CHECK((project_native(boxed, vec({2.0, 2.0})) - vec({0.5, 0.5})).norm() < 1e-9);
  CHECK((project_native(boxed, vec({2.0, 2.0})) - brute_force(boxed, Mat::Identity(2, 2), vec({2.0, 2.0}))).norm() <
        2e-3);
}

TEST_CASE("project_sigma_image examples") {
  const Vec x = vec({0.3, -1.7});
  CHECK(project_sigma_image(ConvexSet::full_space(2), fx::piecewise_market().sigma(0.3), x) == x);
  const Vec p = project_sigma_image(ConvexSet::nonneg_orthant(1), fx::scalar_sigma(0.2), vec({-0.3}));
  CHECK(std::abs(p[0]) < 1e-15);
  const Vec h = project_sigma_image(fx::no_borrowing(2), Mat::Identity(2, 2), vec({0.9, 0.9}));
  CHECK((h - vec({0.5, 0.5})).norm() < 1e-9);
}

TEST_CASE("witness and parameter validation") {
  CHECK_THROWS_AS(ConvexSet::box(vec({1.0, 0.0}), vec({0.0, 1.0})), Error);
  CHECK_THROWS_AS(ConvexSet::ball(vec({0.0}), 0.0), Error);
  CHECK_THROWS_AS(ConvexSet::halfspace(vec({0.0, 0.0}), 1.0), Error);
  CHECK_THROWS_AS(ConvexSet::intersection({ConvexSet::nonneg_orthant(2), fx::no_borrowing(2)}, vec({0.8, 0.8})),
                  Error);
  CHECK_THROWS_AS(ConvexSet::intersection({ConvexSet::nonneg_orthant(2), ConvexSet::nonneg_orthant(3)},
                                          vec({0.0, 0.0})),
                  Error);
  const auto s = families().back();
  CHECK(contains(s, s.witness()));
}

TEST_CASE("projection matches the brute-force grid oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pt(-1.5, 1.5);
  int family = 0;
  for (const auto& set : families()) {
    ++family;
    for (int k = 0; k < 10; ++k) {
      const Mat s = random_sigma(rng);
      // Unconstrained optimum u = v inside the search box.
      const Vec x = s.transpose() * vec({pt(rng), pt(rng)});
      const Vec z = project_sigma_image(set, s, x);
      const Vec b = brute_force(set, s, x);
      CAPTURE(family);
      CAPTURE(z.transpose());
      CAPTURE(b.transpose());
      CAPTURE(x.transpose());
      CHECK((z - b).norm() < 2e-3);
    }
  }
}

TEST_CASE("non-expansive, idempotent and optimal") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pt(-1.0, 1.0);
  std::uniform_real_distribution<double> feas(-2.0, 2.0);
  for (const auto& set : families()) {
    const Mat s = random_sigma(rng);
    for (int k = 0; k < 20; ++k) {
      const Vec x = vec({pt(rng), pt(rng)});
      const Vec y = vec({pt(rng), pt(rng)});
      const Vec px = project_sigma_image(set, s, x);
      const Vec py = project_sigma_image(set, s, y);
      CHECK((px - py).norm() <= (x - y).norm() + 1e-9);
      CHECK((project_sigma_image(set, s, px) - px).norm() <= 1e-9);
      int tested = 0;
      while (tested < 100) {
        const Vec u = vec({feas(rng), feas(rng)});
        if (!contains(set, u)) continue;
        ++tested;
        CHECK((x - px).norm() <= (x - s.transpose() * u).norm() + 1e-8);
      }
    }
  }
}

TEST_CASE("preimage is feasible and maps to the image") {
  const Mat s = fx::piecewise_market().sigma(0.7);
  for (const auto& set : families()) {
    const auto r = project_sigma_image_full(set, s, vec({0.9, 0.4}));
    CHECK(contains(set, r.u, 1e-9));
    CHECK((s.transpose() * r.u - r.image).norm() < 1e-12);
  }
}
