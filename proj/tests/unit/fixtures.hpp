#pragma once

#include <cmath>
#include <random>

#include "beq/constraint.hpp"
#include "beq/equilibrium.hpp"
#include "beq/gtable.hpp"
#include "beq/market.hpp"
#include "beq/preference.hpp"
#include "beq/verify.hpp"

namespace fx {

using beq::Mat;
using beq::Vec;

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Mat scalar_sigma(double s) { return Mat::Constant(1, 1, s); }

inline const beq::QuadratureRule& quad() { return beq::default_quadrature(); }

// rho = 0.25, gamma = -0.5: G is the constant 0.8.
inline beq::BetweennessPreference weighted() { return beq::BetweennessPreference::weighted(0.25, -0.5); }

inline beq::BetweennessPreference dirac(double gamma) {
  return beq::BetweennessPreference::mixed_crra(beq::DiscreteMeasure::dirac(gamma));
}

inline beq::BetweennessPreference two_atom() {
  return beq::BetweennessPreference::mixed_crra(beq::DiscreteMeasure::make({-1.0, 0.5}, {0.5, 0.5}));
}

inline beq::GTable table(const beq::BetweennessPreference& p, double y_max = 2.0, int n = 257) {
  return beq::build_G_table(p, y_max, n, quad());
}

// mu = 0.08, sigma = 0.2: kappa = 0.4.
inline beq::MarketModel scalar_market(double mu = 0.08, double sigma = 0.2, double T = 1.0, double r = 0.0,
                                      double R = 0.0) {
  return beq::MarketModel::constant(T, vec({mu}), scalar_sigma(sigma), r, R);
}

inline beq::MarketModel piecewise_market() {
  std::vector<double> times{0.0, 0.4, 1.0};
  std::vector<Vec> mu{vec({0.09, 0.05}), vec({0.06, 0.07}), vec({0.07, 0.06})};
  Mat s0(2, 2), s1(2, 2);
  s0 << 0.2, 0.0, 0.05, 0.15;
  s1 << 0.25, 0.02, 0.04, 0.18;
  std::vector<Mat> sigma{s0, s1, s0};
  return beq::MarketModel(1.0, 2, beq::TimeSeries<Vec>(times, mu), beq::TimeSeries<Mat>(times, sigma),
                          beq::TimeSeries<double>(0.0), beq::TimeSeries<double>(0.0));
}

inline beq::ConvexSet no_borrowing(int d) { return beq::ConvexSet::halfspace(Vec::Ones(d), 1.0); }

}  // namespace fx
