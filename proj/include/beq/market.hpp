#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "beq/error.hpp"

namespace beq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A coefficient on [0, T]: either constant or piecewise linear between
/// (t, value) nodes, held flat outside the first and last node.
template <typename V>
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(V constant) : times_{0.0}, values_{std::move(constant)} {}
  TimeSeries(std::vector<double> times, std::vector<V> values)
      : times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty() || times_.size() != values_.size()) {
      throw Error(ErrorKind::Config, "time series needs matching, nonempty node lists");
    }
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (!(times_[i] > times_[i - 1])) throw Error(ErrorKind::Config, "time series nodes must be increasing");
    }
  }

  V operator()(double t) const {
    if (times_.size() == 1 || t <= times_.front()) return values_.front();
    if (t >= times_.back()) return values_.back();
    std::size_t k = 1;
    while (times_[k] < t) ++k;
    const double w = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
    return V((1.0 - w) * values_[k - 1] + w * values_[k]);
  }

  bool is_constant() const { return times_.size() == 1; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<V>& values() const { return values_; }

 private:
  std::vector<double> times_;
  std::vector<V> values_;
};

/// Deterministic Black-Scholes market with d risky assets. Stock i follows
/// dS_i = S_i (mu_i dt + sigma_i . dW), sigma_i the i-th row of sigma; cash
/// earns r when saving and R >= r when borrowing.
class MarketModel {
 public:
  MarketModel(double T, int d, TimeSeries<Vec> mu, TimeSeries<Mat> sigma, TimeSeries<double> r,
              TimeSeries<double> R);

  /// Constant coefficients with r = R = 0.
  static MarketModel constant(double T, Vec mu, Mat sigma, double r = 0.0, double R = 0.0);

  double T() const { return T_; }
  int d() const { return d_; }
  Vec mu(double t) const { return mu_(t); }
  Mat sigma(double t) const { return sigma_(t); }
  double r(double t) const { return r_(t); }
  double R(double t) const { return R_(t); }

  bool zero_rate() const;
  bool rates_equal() const;
  bool is_constant() const;
  /// Union of all coefficient node times inside [0, T], plus 0 and T.
  std::vector<double> breakpoints() const;

  const TimeSeries<Vec>& mu_series() const { return mu_; }
  const TimeSeries<Mat>& sigma_series() const { return sigma_; }
  const TimeSeries<double>& r_series() const { return r_; }
  const TimeSeries<double>& R_series() const { return R_; }

 private:
  double T_;
  int d_;
  TimeSeries<Vec> mu_;
  TimeSeries<Mat> sigma_;
  TimeSeries<double> r_;
  TimeSeries<double> R_;
};

/// Market price of risk kappa(t) = sigma(t)^-1 mu(t).
Vec kappa(const MarketModel& model, double t);

/// (sigma^-1 (mu - r 1), sigma^-1 (mu - R 1)).
std::pair<Vec, Vec> kappa12(const MarketModel& model, double t);

struct EllipticityCertificate {
  double c1 = 0.0;  // min eigenvalue of sigma sigma^T over the grid
  double c2 = 0.0;  // max eigenvalue of sigma sigma^T over the grid
  double c3 = 0.0;  // max |kappa|^2 over the grid
  std::vector<double> t_grid;
};

EllipticityCertificate certify_ellipticity(const MarketModel& model, int grid_n = 512);

/// x solving sigma(t)^T x = b, with the singularity check of `kappa`.
Vec solve_sigma_transpose(const Mat& sigma, const Vec& b, double t);

}  // namespace beq
