#pragma once

#include <string>

#include "beq/error.hpp"

namespace beq {

template <typename Fn>
double integrate_over_G(const GTable& table, double x, Fn&& integrand) {
  if (!(x >= 0.0)) throw Error(ErrorKind::Extrapolation, "integral upper limit must be nonnegative");
  if (x > table.y_max()) {
    throw Error(ErrorKind::Extrapolation,
                "integral upper limit " + std::to_string(x) + " beyond table y_max " + std::to_string(table.y_max()));
  }
  const auto& y = table.y_grid();
  const auto& g = table.G_vals();
  const auto& gm = table.G_mid();
  double sum = 0.0;
  std::size_t i = 0;
  for (; i + 1 < y.size() && y[i + 1] <= x; ++i) {
    sum += (y[i + 1] - y[i]) / 6.0 * (integrand(g[i]) + 4.0 * integrand(gm[i]) + integrand(g[i + 1]));
  }
  if (i + 1 < y.size() && x > y[i]) {
    const double a = y[i];
    const double m = 0.5 * (a + x);
    sum += (x - a) / 6.0 * (integrand(g[i]) + 4.0 * integrand(table.G(m)) + integrand(table.G(x)));
  }
  return sum;
}

}  // namespace beq
