#pragma once

#include <vector>

#include <boost/math/interpolators/cubic_hermite.hpp>
// pchip.hpp calls isnan unqualified; fpclassify brings boost::math::isnan into scope.
#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include "beq/preference.hpp"

namespace beq {

/// Tabulated H, G and Gcal(y) = int_0^y G^-2 on a uniform grid over
/// [0, y_max]. H and G use PCHIP interpolation; Gcal uses cubic Hermite
/// with its exact slope 1/G^2. Lookups beyond y_max throw Extrapolation.
class GTable {
 public:
  GTable(std::vector<double> y_grid, std::vector<double> H_vals, std::vector<double> G_vals,
         std::vector<double> G_mid, std::vector<double> Gcal_vals);

  double y_max() const { return y_grid_.back(); }
  std::size_t size() const { return y_grid_.size(); }

  double H(double y) const;
  double G(double y) const;
  double Gcal(double y) const;
  /// Inverse of Gcal on [0, Gcal(y_max)].
  double Gcal_inverse(double v) const;

  const std::vector<double>& y_grid() const { return y_grid_; }
  const std::vector<double>& H_vals() const { return H_vals_; }
  const std::vector<double>& G_vals() const { return G_vals_; }
  /// G at interval midpoints, one per interval.
  const std::vector<double>& G_mid() const { return G_mid_; }
  const std::vector<double>& Gcal_vals() const { return Gcal_vals_; }

  double G_min() const;
  double G_max() const;

 private:
  void check_range(double y, const char* what) const;

  std::vector<double> y_grid_;
  std::vector<double> H_vals_;
  std::vector<double> G_vals_;
  std::vector<double> G_mid_;
  std::vector<double> Gcal_vals_;
  boost::math::interpolators::pchip<std::vector<double>> H_interp_;
  boost::math::interpolators::pchip<std::vector<double>> G_interp_;
  boost::math::interpolators::cubic_hermite<std::vector<double>> Gcal_interp_;
};

inline constexpr int kDefaultTableNodes = 1025;
inline constexpr double kDefaultYMax = 4.0;

/// Serial reference build.
GTable build_G_table_serial(const BetweennessPreference& pref, double y_max, int n_nodes,
                            const QuadratureRule& quad);
/// Node evaluations fanned out with OpenMP; bit-identical to the serial build.
GTable build_G_table(const BetweennessPreference& pref, double y_max, int n_nodes,
                     const QuadratureRule& quad);

/// Q(x) = int_0^x dy / (6 c3 G(y)^2 + 4 c2 |beta|^2) by composite Simpson on
/// the table grid.
double compute_Q(const GTable& table, double c2, double c3, double beta_norm2, double x);

/// Composite Simpson of `integrand(G(y))` over [0, x] on the table grid,
/// using tabulated nodes and midpoints; the partial last interval uses
/// interpolated G.
template <typename Fn>
double integrate_over_G(const GTable& table, double x, Fn&& integrand);

}  // namespace beq

#include "beq/gtable_inl.hpp"
