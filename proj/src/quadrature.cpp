#include "beq/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "beq/error.hpp"

namespace beq {

namespace {

// Nodes and weights for the weight exp(-x^2) by Newton iteration on the
// orthonormal Hermite recurrence. Only the nonnegative half is computed; the
// rule is mirrored.
void physicists_rule(int n, std::vector<double>& x, std::vector<double>& w) {
  constexpr double kPiM4 = 0.7511255444649425;  // pi^(-1/4)
  constexpr int kMaxIter = 100;
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    int it = 0;
    for (; it < kMaxIter; ++it) {
      double p1 = kPiM4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    if (it == kMaxIter) {
      throw Error(ErrorKind::NumericalDomain, "Gauss-Hermite Newton iteration did not converge");
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace

QuadratureRule gauss_hermite_normal(int order) {
  if (order < 2) throw Error(ErrorKind::Config, "quadrature order must be at least 2");
  std::vector<double> x, w;
  physicists_rule(order, x, w);
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  double total = 0.0;
  // Ascending order, scaled to the N(0,1) density.
  for (int i = 0; i < order; ++i) {
    const int k = order - 1 - i;
    rule.nodes[i] = std::numbers::sqrt2 * x[k];
    rule.weights[i] = w[k] / std::sqrt(std::numbers::pi);
    total += rule.weights[i];
  }
  for (double& wi : rule.weights) wi /= total;
  return rule;
}

}  // namespace beq
