#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "beq/quadrature.hpp"

namespace beq {

/// Finite mixing measure over CRRA exponents.
struct DiscreteMeasure {
  std::vector<double> gammas;   // strictly increasing, all < 1
  std::vector<double> weights;  // positive, summing to 1

  /// Validates and renormalises. Throws Config on any violated invariant.
  static DiscreteMeasure make(std::vector<double> gammas, std::vector<double> weights);
  static DiscreteMeasure dirac(double gamma);

  double min_gamma() const { return gammas.front(); }
  double max_gamma() const { return gammas.back(); }
};

/// F(x) = x^(1-rho) x^gamma - x^gamma with -1 < gamma <= 0, gamma <= rho < gamma + 1.
struct WeightedUtility {
  double rho = 0.0;
  double gamma = 0.0;
};

/// F(x) = sum_i w_i U_{gamma_i}(x), U_gamma the CRRA utility (log at gamma = 0).
struct MixedCrra {
  DiscreteMeasure measure;
};

/// User-supplied generator. `growth_exponent` bounds the polynomial growth
/// of F, F', F'' and sizes the quadrature resolution check.
struct CustomGenerator {
  std::string name;
  std::function<double(double)> F;
  std::function<double(double)> dF;
  std::function<double(double)> d2F;
  double growth_exponent = 1.0;
  /// Lower bound c > 0 on -x F''(x) / F'(x), when known. Gives G <= 1/c.
  std::optional<double> rra_lower_bound;
};

struct GeneratorValues {
  double f;
  double df;
  double d2f;
};

/// The generator F of a CRRA betweenness preference: the certainty equivalent
/// J of a wealth X solves E[F(X / J)] = 0.
class BetweennessPreference {
 public:
  using Family = std::variant<WeightedUtility, MixedCrra, CustomGenerator>;

  static BetweennessPreference weighted(double rho, double gamma);
  static BetweennessPreference mixed_crra(DiscreteMeasure measure);
  /// Runs the sampled checks F(1) = 0, F' > 0, F'' < 0 on [1e-3, 1e3].
  static BetweennessPreference custom(CustomGenerator generator);

  double F(double x) const { return eval(x).f; }
  double dF(double x) const { return eval(x).df; }
  double d2F(double x) const { return eval(x).d2f; }
  GeneratorValues eval(double x) const;

  const Family& family() const { return family_; }
  /// Exponent c with |F| + |F'| x + |F''| x^2 <= L (1 + x^c + x^-c).
  double growth_exponent() const;
  /// Known global bounds on G over [0, inf), if the family provides them.
  std::optional<double> g_upper_bound() const;
  std::optional<double> g_lower_bound() const;
  std::string describe() const;

 private:
  explicit BetweennessPreference(Family family) : family_(std::move(family)) {}
  Family family_;
};

/// Quadrature value of E[F(exp(sqrt(y) xi) / z)], xi ~ N(0,1).
double expected_F(const BetweennessPreference& pref, double y, double z, const QuadratureRule& quad);

/// H(y): the z solving expected_F(pref, y, z) = 0. H(0) = 1 exactly.
double compute_H(const BetweennessPreference& pref, double y, const QuadratureRule& quad);

/// G(y) = H E[e^{sqrt(y) xi} F'(e^{sqrt(y) xi}/H)] / (-E[e^{2 sqrt(y) xi} F''(e^{sqrt(y) xi}/H)]).
double compute_G(const BetweennessPreference& pref, double y, const QuadratureRule& quad);

/// G from an already solved H(y); avoids a second root solve.
double compute_G_given_H(const BetweennessPreference& pref, double y, double H_y,
                         const QuadratureRule& quad);

/// Closed-form G for a discrete CRRA mixture given H(y).
double compute_G_mixed_closed(const DiscreteMeasure& measure, double y, double H_y);

}  // namespace beq
