#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include <boost/math/tools/toms748_solve.hpp>

#include "beq/error.hpp"

namespace beq {

/// Root of a continuous `f` with f(lo) and f(hi) of opposite sign, via
/// TOMS 748. Returns the midpoint of the final bracket.
template <typename Fn>
double solve_bracketed(Fn&& f, double lo, double hi, double f_lo, double f_hi,
                       int bits = 52, std::uintmax_t max_iter = 200) {
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw Error(ErrorKind::RootBracket, "endpoints do not bracket a root");
  }
  boost::math::tools::eps_tolerance<double> tol(bits);
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, max_iter);
  return 0.5 * (a + b);
}

/// Root of a function strictly decreasing in its argument. The bracket
/// [lo, hi] grows by doubling its width on the failing side until it
/// straddles the root.
template <typename Fn>
double solve_decreasing(Fn&& f, double lo, double hi, int max_doublings = 60) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  double width = hi - lo;
  int n = 0;
  while (f_lo < 0.0 && n < max_doublings) {
    width *= 2.0;
    hi = lo;
    f_hi = f_lo;
    lo -= width;
    f_lo = f(lo);
    ++n;
  }
  while (f_hi > 0.0 && n < max_doublings) {
    width *= 2.0;
    lo = hi;
    f_lo = f_hi;
    hi += width;
    f_hi = f(hi);
    ++n;
  }
  if (!(f_lo >= 0.0 && f_hi <= 0.0)) {
    throw Error(ErrorKind::RootBracket,
                "bracket expansion failed after " + std::to_string(max_doublings) + " doublings");
  }
  return solve_bracketed(f, lo, hi, f_lo, f_hi);
}

}  // namespace beq
