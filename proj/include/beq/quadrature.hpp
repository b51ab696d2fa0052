#pragma once

#include <vector>

namespace beq {

/// Gauss-Hermite rule rescaled for the standard normal density, so that
/// sum_i weights[i] * g(nodes[i]) approximates E[g(xi)] with xi ~ N(0,1).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;

  template <typename Fn>
  double expect(Fn&& g) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * g(nodes[i]);
    return sum;
  }
};

inline constexpr int kDefaultQuadOrder = 96;

QuadratureRule gauss_hermite_normal(int order = kDefaultQuadOrder);

}  // namespace beq
