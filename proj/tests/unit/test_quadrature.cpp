#include <cmath>

#include "doctest.h"

#include "beq/error.hpp"
#include "beq/quadrature.hpp"

using beq::gauss_hermite_normal;

TEST_CASE("weights sum to one and nodes are symmetric") {
  for (int order : {8, 32, 96, 192}) {
    const auto q = gauss_hermite_normal(order);
    REQUIRE(q.nodes.size() == static_cast<std::size_t>(order));
    double sum = 0.0;
    for (double w : q.weights) sum += w;
    CHECK(std::abs(sum - 1.0) < 1e-12);
    for (int i = 0; i < order; ++i) {
      CHECK(std::abs(q.nodes[i] + q.nodes[order - 1 - i]) < 1e-12);
      CHECK(std::abs(q.weights[i] - q.weights[order - 1 - i]) < 1e-15);
    }
  }
}

TEST_CASE("standard normal moments") {
  const auto q = gauss_hermite_normal(96);
  CHECK(std::abs(q.expect([](double x) { return x; })) < 1e-14);
  CHECK(std::abs(q.expect([](double x) { return x * x; }) - 1.0) < 1e-12);
  CHECK(std::abs(q.expect([](double x) { return x * x * x * x; }) - 3.0) < 1e-11);
  for (double s : {0.5, 1.0, 2.0, 3.0}) {
    const double m = q.expect([s](double x) { return std::exp(s * x); });
    CHECK(std::abs(m / std::exp(0.5 * s * s) - 1.0) < 1e-11);
  }
}

TEST_CASE("tiny orders are rejected") {
  CHECK_THROWS_AS(gauss_hermite_normal(0), beq::Error);
}
