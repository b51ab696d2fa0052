#include "beq/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace beq {

namespace {

void check_time(const MarketModel& model, double t) {
  if (!(t >= 0.0 && t <= model.T())) {
    std::ostringstream os;
    os << "time " << t << " outside [0, " << model.T() << "]";
    throw Error(ErrorKind::NumericalDomain, os.str());
  }
}

Vec lu_solve(const Mat& m, const Vec& b, double t) {
  Eigen::PartialPivLU<Mat> lu(m);
  // PartialPivLU does not report singularity; test the pivots directly.
  const Mat& packed = lu.matrixLU();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    if (std::abs(packed(i, i)) <= 1e-14 * scale) {
      std::ostringstream os;
      os << "sigma is singular at t=" << t;
      throw Error(ErrorKind::SingularSigma, os.str());
    }
  }
  return lu.solve(b);
}

}  // namespace

MarketModel::MarketModel(double T, int d, TimeSeries<Vec> mu, TimeSeries<Mat> sigma, TimeSeries<double> r,
                         TimeSeries<double> R)
    : T_(T), d_(d), mu_(std::move(mu)), sigma_(std::move(sigma)), r_(std::move(r)), R_(std::move(R)) {
  if (!(T_ > 0.0) || !std::isfinite(T_)) throw Error(ErrorKind::Config, "market.T must be positive");
  if (d_ < 1) throw Error(ErrorKind::Config, "market.d must be at least 1");
  for (const Vec& v : mu_.values()) {
    if (v.size() != d_) throw Error(ErrorKind::Config, "market.mu has the wrong dimension");
  }
  for (const Mat& m : sigma_.values()) {
    if (m.rows() != d_ || m.cols() != d_) throw Error(ErrorKind::Config, "market.sigma must be d x d");
  }
  // R - r is piecewise linear between the union of nodes, so checking
  // there is exact.
  for (double t : breakpoints()) {
    if (R_(t) < r_(t)) {
      std::ostringstream os;
      os << "market.R must be >= market.r (violated at t=" << t << ")";
      throw Error(ErrorKind::Config, os.str());
    }
  }
}

MarketModel MarketModel::constant(double T, Vec mu, Mat sigma, double r, double R) {
  const int d = static_cast<int>(mu.size());
  return MarketModel(T, d, TimeSeries<Vec>(std::move(mu)), TimeSeries<Mat>(std::move(sigma)),
                     TimeSeries<double>(r), TimeSeries<double>(R));
}

bool MarketModel::zero_rate() const {
  return std::all_of(r_.values().begin(), r_.values().end(), [](double v) { return v == 0.0; });
}

bool MarketModel::rates_equal() const {
  for (double t : breakpoints()) {
    if (r_(t) != R_(t)) return false;
  }
  return true;
}

bool MarketModel::is_constant() const {
  return mu_.is_constant() && sigma_.is_constant() && r_.is_constant() && R_.is_constant();
}

std::vector<double> MarketModel::breakpoints() const {
  std::set<double> s{0.0, T_};
  auto add = [&](const std::vector<double>& ts) {
    for (double t : ts) {
      if (t > 0.0 && t < T_) s.insert(t);
    }
  };
  add(mu_.times());
  add(sigma_.times());
  add(r_.times());
  add(R_.times());
  return {s.begin(), s.end()};
}

Vec kappa(const MarketModel& model, double t) {
  check_time(model, t);
  return lu_solve(model.sigma(t), model.mu(t), t);
}

std::pair<Vec, Vec> kappa12(const MarketModel& model, double t) {
  check_time(model, t);
  const Mat s = model.sigma(t);
  const Vec mu = model.mu(t);
  const Vec ones = Vec::Ones(model.d());
  return {lu_solve(s, mu - model.r(t) * ones, t), lu_solve(s, mu - model.R(t) * ones, t)};
}

Vec solve_sigma_transpose(const Mat& sigma, const Vec& b, double t) {
  return lu_solve(sigma.transpose(), b, t);
}

EllipticityCertificate certify_ellipticity(const MarketModel& model, int grid_n) {
  if (grid_n < 512) throw Error(ErrorKind::Config, "ellipticity grid needs at least 512 intervals");
  EllipticityCertificate cert;
  cert.c1 = std::numeric_limits<double>::infinity();
  cert.c2 = 0.0;
  cert.c3 = 0.0;
  std::set<double> grid;
  for (int i = 0; i <= grid_n; ++i) grid.insert(model.T() * i / grid_n);
  for (double t : model.breakpoints()) grid.insert(t);
  cert.t_grid.assign(grid.begin(), grid.end());
  for (double t : cert.t_grid) {
    const Mat s = model.sigma(t);
    Eigen::SelfAdjointEigenSolver<Mat> eig(s * s.transpose(), Eigen::EigenvaluesOnly);
    cert.c1 = std::min(cert.c1, eig.eigenvalues().minCoeff());
    cert.c2 = std::max(cert.c2, eig.eigenvalues().maxCoeff());
    if (cert.c1 <= 1e-12) {
      std::ostringstream os;
      os << "sigma sigma^T is degenerate at t=" << t << " (min eigenvalue " << eig.eigenvalues().minCoeff() << ")";
      throw Error(ErrorKind::DegenerateMarket, os.str());
    }
    cert.c3 = std::max(cert.c3, kappa(model, t).squaredNorm());
  }
  return cert;
}

}  // namespace beq
