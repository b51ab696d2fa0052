#include "beq/preference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "beq/error.hpp"
#include "beq/roots.hpp"

namespace beq {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

GeneratorValues eval_weighted(const WeightedUtility& w, double x) {
  const double p = 1.0 - w.rho + w.gamma;  // exponent of the first term
  const double q = w.gamma;
  const double lx = std::log(x);
  const double xp = std::exp(p * lx);
  const double xq = std::exp(q * lx);
  return {xp - xq, (p * xp - q * xq) / x, (p * (p - 1.0) * xp - q * (q - 1.0) * xq) / (x * x)};
}

GeneratorValues eval_mixed(const DiscreteMeasure& m, double x) {
  const double lx = std::log(x);
  GeneratorValues v{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < m.gammas.size(); ++i) {
    const double g = m.gammas[i];
    const double w = m.weights[i];
    const double xg = std::exp(g * lx);
    v.f += w * (g == 0.0 ? lx : std::expm1(g * lx) / g);
    v.df += w * xg / x;
    v.d2f += w * (g - 1.0) * xg / (x * x);
  }
  return v;
}

// Largest exponent the quadrature may face: E[Y^c] with Y lognormal.
void check_resolution(const BetweennessPreference& pref, double y, const QuadratureRule& quad) {
  const double c = pref.growth_exponent() + 2.0;
  const double reach = c * std::sqrt(y) + 6.0;
  if (reach > quad.nodes.back()) {
    std::ostringstream os;
    os << "quadrature of order " << quad.order << " cannot resolve y=" << y
       << " for growth exponent " << pref.growth_exponent() << " (needs node reach " << reach
       << ", have " << quad.nodes.back() << ")";
    throw Error(ErrorKind::NumericalDomain, os.str());
  }
}

void check_y(double y) {
  if (!(y >= 0.0) || !std::isfinite(y)) {
    throw Error(ErrorKind::NumericalDomain, "y must be a finite nonnegative number, got " + std::to_string(y));
  }
}

}  // namespace

DiscreteMeasure DiscreteMeasure::make(std::vector<double> gammas, std::vector<double> weights) {
  if (gammas.empty() || gammas.size() != weights.size()) {
    throw Error(ErrorKind::Config, "mixing measure needs matching, nonempty atom and weight lists");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(weights[i] > 0.0)) throw Error(ErrorKind::Config, "mixing weights must be positive");
    if (!(gammas[i] < 1.0)) throw Error(ErrorKind::Config, "CRRA exponents must be < 1");
    if (i > 0 && !(gammas[i] > gammas[i - 1])) {
      throw Error(ErrorKind::Config, "CRRA exponents must be strictly increasing");
    }
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::Config, "mixing weights must sum to 1");
  }
  for (double& w : weights) w /= total;
  return DiscreteMeasure{std::move(gammas), std::move(weights)};
}

DiscreteMeasure DiscreteMeasure::dirac(double gamma) { return make({gamma}, {1.0}); }

BetweennessPreference BetweennessPreference::weighted(double rho, double gamma) {
  if (!(gamma > -1.0 && gamma <= 0.0)) {
    throw Error(ErrorKind::Config, "weighted utility requires -1 < gamma <= 0");
  }
  if (!(rho >= gamma && rho < gamma + 1.0)) {
    throw Error(ErrorKind::Config, "weighted utility requires gamma <= rho < gamma + 1");
  }
  if (rho == 0.0 && gamma == 0.0) {
    throw Error(ErrorKind::Config, "weighted utility with rho = gamma = 0 is linear (F'' = 0)");
  }
  return BetweennessPreference(WeightedUtility{rho, gamma});
}

BetweennessPreference BetweennessPreference::mixed_crra(DiscreteMeasure measure) {
  return BetweennessPreference(MixedCrra{std::move(measure)});
}

BetweennessPreference BetweennessPreference::custom(CustomGenerator generator) {
  if (!generator.F || !generator.dF || !generator.d2F) {
    throw Error(ErrorKind::Config, "custom generator '" + generator.name + "' is missing F, F' or F''");
  }
  if (!(generator.growth_exponent > 0.0)) {
    throw Error(ErrorKind::Config, "custom generator needs a positive growth exponent");
  }
  if (std::abs(generator.F(1.0)) > 1e-12) {
    throw Error(ErrorKind::Config, "custom generator '" + generator.name + "' violates F(1) = 0");
  }
  // Log-spaced samples on [1e-3, 1e3].
  constexpr int kSamples = 601;
  for (int i = 0; i < kSamples; ++i) {
    const double x = std::pow(10.0, -3.0 + 6.0 * i / (kSamples - 1));
    if (!(generator.dF(x) > 0.0) || !(generator.d2F(x) < 0.0)) {
      std::ostringstream os;
      os << "custom generator '" << generator.name << "' violates F' > 0, F'' < 0 at x=" << x;
      throw Error(ErrorKind::Config, os.str());
    }
  }
  return BetweennessPreference(std::move(generator));
}

GeneratorValues BetweennessPreference::eval(double x) const {
  return std::visit(Overloaded{
                        [x](const WeightedUtility& w) { return eval_weighted(w, x); },
                        [x](const MixedCrra& m) { return eval_mixed(m.measure, x); },
                        [x](const CustomGenerator& c) {
                          return GeneratorValues{c.F(x), c.dF(x), c.d2F(x)};
                        },
                    },
                    family_);
}

double BetweennessPreference::growth_exponent() const {
  return std::visit(Overloaded{
                        [](const WeightedUtility& w) {
                          return std::max(std::abs(1.0 - w.rho + w.gamma), std::abs(w.gamma));
                        },
                        [](const MixedCrra& m) {
                          return std::max(std::abs(m.measure.min_gamma()), std::abs(m.measure.max_gamma()));
                        },
                        [](const CustomGenerator& c) { return c.growth_exponent; },
                    },
                    family_);
}

std::optional<double> BetweennessPreference::g_upper_bound() const {
  return std::visit(Overloaded{
                        [](const WeightedUtility& w) -> std::optional<double> {
                          return 1.0 / (w.rho - 2.0 * w.gamma);
                        },
                        [](const MixedCrra& m) -> std::optional<double> {
                          return 1.0 / (1.0 - m.measure.max_gamma());
                        },
                        [](const CustomGenerator& c) -> std::optional<double> {
                          if (c.rra_lower_bound && *c.rra_lower_bound > 0.0) return 1.0 / *c.rra_lower_bound;
                          return std::nullopt;
                        },
                    },
                    family_);
}

std::optional<double> BetweennessPreference::g_lower_bound() const {
  return std::visit(Overloaded{
                        [](const WeightedUtility& w) -> std::optional<double> {
                          return 1.0 / (w.rho - 2.0 * w.gamma);
                        },
                        [](const MixedCrra& m) -> std::optional<double> {
                          return 1.0 / (1.0 - m.measure.min_gamma());
                        },
                        [](const CustomGenerator&) -> std::optional<double> { return std::nullopt; },
                    },
                    family_);
}

std::string BetweennessPreference::describe() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&os](const WeightedUtility& w) { os << "weighted(rho=" << w.rho << ", gamma=" << w.gamma << ")"; },
                 [&os](const MixedCrra& m) {
                   os << "mixed_crra(";
                   for (std::size_t i = 0; i < m.measure.gammas.size(); ++i) {
                     os << (i ? ", " : "") << m.measure.gammas[i] << ":" << m.measure.weights[i];
                   }
                   os << ")";
                 },
                 [&os](const CustomGenerator& c) { os << "custom(" << c.name << ")"; },
             },
             family_);
  return os.str();
}

double expected_F(const BetweennessPreference& pref, double y, double z, const QuadratureRule& quad) {
  check_y(y);
  if (!(z > 0.0)) throw Error(ErrorKind::NumericalDomain, "expected_F needs z > 0");
  const double s = std::sqrt(y);
  double sum = 0.0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const double v = pref.F(std::exp(s * quad.nodes[i]) / z);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite F at quadrature node " << i << " (xi=" << quad.nodes[i] << ", y=" << y << ", z=" << z << ")";
      throw Error(ErrorKind::NumericalDomain, os.str());
    }
    sum += quad.weights[i] * v;
  }
  return sum;
}

double compute_H(const BetweennessPreference& pref, double y, const QuadratureRule& quad) {
  check_y(y);
  if (y == 0.0) return 1.0;
  check_resolution(pref, y, quad);
  const double s = std::sqrt(y);
  // Solve in log z; the residual is strictly decreasing there too.
  auto h = [&](double log_z) { return expected_F(pref, y, std::exp(log_z), quad); };
  const double log_z = solve_decreasing(h, -6.0 * s, 6.0 * s);
  const double residual = h(log_z);
  if (std::abs(residual) > 1e-10) {
    std::ostringstream os;
    os << "H(" << y << ") residual " << residual << " exceeds 1e-10";
    throw Error(ErrorKind::RootBracket, os.str());
  }
  return std::exp(log_z);
}

double compute_G_given_H(const BetweennessPreference& pref, double y, double H_y, const QuadratureRule& quad) {
  check_y(y);
  const double s = std::sqrt(y);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const double e = std::exp(s * quad.nodes[i]);
    const GeneratorValues v = pref.eval(e / H_y);
    num += quad.weights[i] * e * v.df;
    den -= quad.weights[i] * e * e * v.d2f;
  }
  num *= H_y;
  if (!std::isfinite(num) || !std::isfinite(den)) {
    throw Error(ErrorKind::NumericalDomain, "non-finite moment in G at y=" + std::to_string(y));
  }
  if (std::abs(den) <= 1e-14) {
    throw Error(ErrorKind::DegenerateCurvature, "curvature moment of G vanishes at y=" + std::to_string(y));
  }
  const double g = num / den;
  if (!(g > 0.0)) throw Error(ErrorKind::NumericalDomain, "G(" + std::to_string(y) + ") is not positive");
  return g;
}

double compute_G(const BetweennessPreference& pref, double y, const QuadratureRule& quad) {
  return compute_G_given_H(pref, y, compute_H(pref, y, quad), quad);
}

double compute_G_mixed_closed(const DiscreteMeasure& measure, double y, double H_y) {
  check_y(y);
  if (!(H_y > 0.0)) throw Error(ErrorKind::NumericalDomain, "H(y) must be positive");
  const double log_h = std::log(H_y);
  // Log-sum-exp over atoms; the common factor cancels in the ratio.
  double max_e = -std::numeric_limits<double>::infinity();
  std::vector<double> e(measure.gammas.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double g = measure.gammas[i];
    e[i] = std::log(measure.weights[i]) + (1.0 - g) * log_h + 0.5 * g * g * y;
    max_e = std::max(max_e, e[i]);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double t = std::exp(e[i] - max_e);
    num += t;
    den += (1.0 - measure.gammas[i]) * t;
  }
  const double g = num / den;
  if (!std::isfinite(g)) throw Error(ErrorKind::NumericalDomain, "closed-form G overflowed");
  return g;
}

}  // namespace beq
