#include "beq/gtable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "beq/error.hpp"
#include "beq/roots.hpp"

namespace beq {

namespace {

struct HG {
  double H;
  double G;
};

HG eval_HG(const BetweennessPreference& pref, double y, const QuadratureRule& quad) {
  const double h = compute_H(pref, y, quad);
  return {h, compute_G_given_H(pref, y, h, quad)};
}

double simpson_inv_sq(double a, double b, double ga, double gm, double gb) {
  return (b - a) / 6.0 * (1.0 / (ga * ga) + 4.0 / (gm * gm) + 1.0 / (gb * gb));
}

// Simpson of 1/G^2 over [a, b], halving until two successive refinements
// agree within 1e-9.
double refine_interval(const BetweennessPreference& pref, const QuadratureRule& quad, double a, double b,
                       double ga, double gm, double gb, double coarse, int depth) {
  const double m = 0.5 * (a + b);
  const double gl = eval_HG(pref, 0.5 * (a + m), quad).G;
  const double gr = eval_HG(pref, 0.5 * (m + b), quad).G;
  const double left = simpson_inv_sq(a, m, ga, gl, gm);
  const double right = simpson_inv_sq(m, b, gm, gr, gb);
  const double fine = left + right;
  if (std::abs(fine - coarse) < 1e-9 || depth >= 20) return fine;
  return refine_interval(pref, quad, a, m, ga, gl, gm, left, depth + 1) +
         refine_interval(pref, quad, m, b, gm, gr, gb, right, depth + 1);
}

void check_build_args(double y_max, int n_nodes) {
  if (!(y_max > 0.0) || !std::isfinite(y_max)) throw Error(ErrorKind::Config, "table y_max must be positive");
  if (n_nodes < 16) throw Error(ErrorKind::Config, "table needs at least 16 nodes");
}

std::vector<double> uniform_grid(double y_max, int n) {
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) y[i] = y_max * i / (n - 1);
  y.back() = y_max;
  return y;
}

GTable assemble(const std::vector<double>& y, std::vector<double> H, std::vector<double> G,
                std::vector<double> G_mid, const std::vector<double>& increments) {
  std::vector<double> gcal(y.size(), 0.0);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) gcal[i + 1] = gcal[i] + increments[i];
  return GTable(y, std::move(H), std::move(G), std::move(G_mid), std::move(gcal));
}

// Third-order one-sided difference at either end of a uniform grid. The
// default PCHIP end slope is only second order and dominated the
// interpolation error in the first cell. A slope against the sign of the
// end secant is replaced by 0 to keep the interpolant shape-preserving.
double endpoint_slope(const std::vector<double>& x, const std::vector<double>& f, bool right) {
  const std::size_t n = f.size();
  if (n < 4) return std::numeric_limits<double>::quiet_NaN();
  auto at = [&](std::size_t k) { return right ? f[n - 1 - k] : f[k]; };
  const double h = right ? x[n - 2] - x[n - 1] : x[1] - x[0];
  const double d = (-11.0 * at(0) + 18.0 * at(1) - 9.0 * at(2) + 2.0 * at(3)) / (6.0 * h);
  const double secant = (at(1) - at(0)) / h;
  return d * secant > 0.0 ? d : 0.0;
}

}  // namespace

GTable::GTable(std::vector<double> y_grid, std::vector<double> H_vals, std::vector<double> G_vals,
               std::vector<double> G_mid, std::vector<double> Gcal_vals)
    : y_grid_(std::move(y_grid)),
      H_vals_(std::move(H_vals)),
      G_vals_(std::move(G_vals)),
      G_mid_(std::move(G_mid)),
      Gcal_vals_(std::move(Gcal_vals)),
      H_interp_(std::vector<double>(y_grid_), std::vector<double>(H_vals_), endpoint_slope(y_grid_, H_vals_, false),
                endpoint_slope(y_grid_, H_vals_, true)),
      G_interp_(std::vector<double>(y_grid_), std::vector<double>(G_vals_), endpoint_slope(y_grid_, G_vals_, false),
                endpoint_slope(y_grid_, G_vals_, true)),
      Gcal_interp_([this] {
        std::vector<double> slopes(G_vals_.size());
        for (std::size_t i = 0; i < slopes.size(); ++i) slopes[i] = 1.0 / (G_vals_[i] * G_vals_[i]);
        return boost::math::interpolators::cubic_hermite<std::vector<double>>(
            std::vector<double>(y_grid_), std::vector<double>(Gcal_vals_), std::move(slopes));
      }()) {
  const std::size_t n = y_grid_.size();
  if (n < 4 || H_vals_.size() != n || G_vals_.size() != n || Gcal_vals_.size() != n || G_mid_.size() != n - 1) {
    throw Error(ErrorKind::InternalConsistency, "GTable arrays have inconsistent sizes");
  }
  if (y_grid_.front() != 0.0 || H_vals_.front() != 1.0 || Gcal_vals_.front() != 0.0) {
    throw Error(ErrorKind::InternalConsistency, "GTable must start at y=0 with H=1 and Gcal=0");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(H_vals_[i] > 0.0) || !(G_vals_[i] > 0.0)) {
      throw Error(ErrorKind::InternalConsistency, "GTable H and G must be positive");
    }
    if (i > 0 && !(Gcal_vals_[i] > Gcal_vals_[i - 1])) {
      throw Error(ErrorKind::InternalConsistency, "Gcal is not strictly increasing");
    }
  }
  // Hermite interpolant of Gcal stays monotone when every slope ratio is
  // inside the Fritsch-Carlson region.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double secant = (Gcal_vals_[i + 1] - Gcal_vals_[i]) / (y_grid_[i + 1] - y_grid_[i]);
    const double alpha = 1.0 / (G_vals_[i] * G_vals_[i]) / secant;
    const double beta = 1.0 / (G_vals_[i + 1] * G_vals_[i + 1]) / secant;
    if (alpha * alpha + beta * beta > 9.0) {
      throw Error(ErrorKind::InternalConsistency, "Gcal interpolant would not be monotone; refine the table");
    }
  }
}

void GTable::check_range(double y, const char* what) const {
  if (!(y >= 0.0) || y > y_max()) {
    std::ostringstream os;
    os << what << "(" << y << ") outside table range [0, " << y_max() << "]";
    throw Error(ErrorKind::Extrapolation, os.str());
  }
}

double GTable::H(double y) const {
  check_range(y, "H");
  return H_interp_(y);
}

double GTable::G(double y) const {
  check_range(y, "G");
  return G_interp_(y);
}

double GTable::Gcal(double y) const {
  check_range(y, "Gcal");
  return Gcal_interp_(y);
}

double GTable::Gcal_inverse(double v) const {
  if (!(v >= 0.0) || v > Gcal_vals_.back()) {
    std::ostringstream os;
    os << "Gcal^-1(" << v << ") outside [0, " << Gcal_vals_.back() << "]";
    throw Error(ErrorKind::Extrapolation, os.str());
  }
  if (v == 0.0) return 0.0;
  auto it = std::lower_bound(Gcal_vals_.begin(), Gcal_vals_.end(), v);
  const std::size_t hi = static_cast<std::size_t>(it - Gcal_vals_.begin());
  if (Gcal_vals_[hi] == v) return y_grid_[hi];
  const std::size_t lo = hi - 1;
  auto f = [&](double y) { return Gcal_interp_(y) - v; };
  return solve_bracketed(f, y_grid_[lo], y_grid_[hi], Gcal_vals_[lo] - v, Gcal_vals_[hi] - v);
}

double GTable::G_min() const { return std::min(*std::min_element(G_vals_.begin(), G_vals_.end()),
                                               *std::min_element(G_mid_.begin(), G_mid_.end())); }
double GTable::G_max() const { return std::max(*std::max_element(G_vals_.begin(), G_vals_.end()),
                                               *std::max_element(G_mid_.begin(), G_mid_.end())); }

GTable build_G_table_serial(const BetweennessPreference& pref, double y_max, int n_nodes,
                            const QuadratureRule& quad) {
  check_build_args(y_max, n_nodes);
  const std::vector<double> y = uniform_grid(y_max, n_nodes);
  std::vector<double> H(n_nodes), G(n_nodes), G_mid(n_nodes - 1), inc(n_nodes - 1);
  for (int i = 0; i < n_nodes; ++i) {
    const HG v = eval_HG(pref, y[i], quad);
    H[i] = v.H;
    G[i] = v.G;
  }
  for (int i = 0; i + 1 < n_nodes; ++i) {
    G_mid[i] = eval_HG(pref, 0.5 * (y[i] + y[i + 1]), quad).G;
    const double coarse = simpson_inv_sq(y[i], y[i + 1], G[i], G_mid[i], G[i + 1]);
    inc[i] = refine_interval(pref, quad, y[i], y[i + 1], G[i], G_mid[i], G[i + 1], coarse, 0);
  }
  return assemble(y, std::move(H), std::move(G), std::move(G_mid), inc);
}

GTable build_G_table(const BetweennessPreference& pref, double y_max, int n_nodes, const QuadratureRule& quad) {
  check_build_args(y_max, n_nodes);
  const std::vector<double> y = uniform_grid(y_max, n_nodes);
  std::vector<double> H(n_nodes), G(n_nodes), G_mid(n_nodes - 1), inc(n_nodes - 1);
  // Exceptions may not cross the OpenMP region; collect the first one.
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_nodes; ++i) {
    try {
      const HG v = eval_HG(pref, y[i], quad);
      H[i] = v.H;
      G[i] = v.G;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_nodes - 1; ++i) {
    try {
      G_mid[i] = eval_HG(pref, 0.5 * (y[i] + y[i + 1]), quad).G;
      const double coarse = simpson_inv_sq(y[i], y[i + 1], G[i], G_mid[i], G[i + 1]);
      inc[i] = refine_interval(pref, quad, y[i], y[i + 1], G[i], G_mid[i], G[i + 1], coarse, 0);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return assemble(y, std::move(H), std::move(G), std::move(G_mid), inc);
}

double compute_Q(const GTable& table, double c2, double c3, double beta_norm2, double x) {
  if (!(c2 > 0.0) || !(c3 > 0.0) || !(beta_norm2 >= 0.0)) {
    throw Error(ErrorKind::Config, "compute_Q needs c2 > 0, c3 > 0, |beta|^2 >= 0");
  }
  return integrate_over_G(table, x, [&](double g) { return 1.0 / (6.0 * c3 * g * g + 4.0 * c2 * beta_norm2); });
}

}  // namespace beq
