#include "beq/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <sstream>

namespace beq {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vec project_primitive(const ConvexPrimitive& p, const Vec& x) {
  return std::visit(Overloaded{
                        [&](const FullSpace&) -> Vec { return x; },
                        [&](const NonnegOrthant&) -> Vec { return x.cwiseMax(0.0); },
                        [&](const Box& b) -> Vec { return x.cwiseMax(b.lo).cwiseMin(b.hi); },
                        [&](const Ball& b) -> Vec {
                          const Vec diff = x - b.center;
                          const double n = diff.norm();
                          if (n <= b.radius) return x;
                          return Vec(b.center + diff * (b.radius / n));
                        },
                        [&](const Halfspace& h) -> Vec {
                          const double excess = h.normal.dot(x) - h.offset;
                          if (excess <= 0.0) return x;
                          return Vec(x - excess / h.normal.squaredNorm() * h.normal);
                        },
                    },
                    p);
}

double distance_to(const ConvexPrimitive& p, const Vec& x) { return (x - project_primitive(p, x)).norm(); }

int primitive_dim(const ConvexPrimitive& p, int fallback) {
  return std::visit(Overloaded{
                        [&](const FullSpace&) { return fallback; },
                        [&](const NonnegOrthant&) { return fallback; },
                        [](const Box& b) { return static_cast<int>(b.lo.size()); },
                        [](const Ball& b) { return static_cast<int>(b.center.size()); },
                        [](const Halfspace& h) { return static_cast<int>(h.normal.size()); },
                    },
                    p);
}

Vec dykstra(const std::vector<ConvexPrimitive>& members, const Vec& x0) {
  constexpr int kMaxSweeps = 10000;
  constexpr double kTol = 1e-10;
  Vec x = x0;
  std::vector<Vec> corrections(members.size(), Vec::Zero(x0.size()));
  double change = 0.0;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const Vec start = x;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const Vec shifted = x + corrections[i];
      x = project_primitive(members[i], shifted);
      corrections[i] = shifted - x;
    }
    change = (x - start).norm();
    if (change < kTol) return x;
  }
  std::ostringstream os;
  os << "Dykstra projection did not converge in " << kMaxSweeps << " sweeps (last change " << change << ")";
  throw ProjectionError(os.str(), x, change);
}

// Linear inequality rows a.u <= b of a polyhedral member. False for a ball.
bool linear_rows(const ConvexPrimitive& p, int d, std::vector<std::pair<Vec, double>>& rows) {
  return std::visit(Overloaded{
                        [&](const FullSpace&) { return true; },
                        [&](const NonnegOrthant&) {
                          for (int i = 0; i < d; ++i) rows.emplace_back(-Vec::Unit(d, i), 0.0);
                          return true;
                        },
                        [&](const Box& b) {
                          for (int i = 0; i < d; ++i) {
                            if (std::isfinite(b.hi(i))) rows.emplace_back(Vec::Unit(d, i), b.hi(i));
                            if (std::isfinite(b.lo(i))) rows.emplace_back(-Vec::Unit(d, i), -b.lo(i));
                          }
                          return true;
                        },
                        [&](const Ball&) { return false; },
                        [&](const Halfspace& h) {
                          rows.emplace_back(h.normal, h.offset);
                          return true;
                        },
                    },
                    p);
}

// Exact solution of the projection once the active set is known: the KKT
// system of min 0.5 |x - sigma^T u|^2 subject to the active rows as
// equalities. Refines an iterative solution whose accuracy is limited by its
// stopping rule. Returns nothing when the set is not polyhedral or the
// candidate fails feasibility or the multiplier sign test.
std::optional<Vec> polish_active_set(const ConvexSet& set, const Mat& gram, const Vec& sx, const Vec& u) {
  const int d = set.dim();
  std::vector<std::pair<Vec, double>> rows;
  for (const auto& m : set.members()) {
    if (!linear_rows(m, d, rows)) return std::nullopt;
  }
  constexpr double kActive = 1e-7;
  std::vector<int> active;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double scale = 1.0 + std::abs(rows[i].second);
    if (rows[i].first.dot(u) - rows[i].second > -kActive * scale) active.push_back(static_cast<int>(i));
  }
  const int m = static_cast<int>(active.size());
  Mat kkt = Mat::Zero(d + m, d + m);
  Vec rhs(d + m);
  kkt.topLeftCorner(d, d) = gram;
  rhs.head(d) = sx;
  for (int k = 0; k < m; ++k) {
    const auto& [a, b] = rows[static_cast<std::size_t>(active[k])];
    kkt.block(0, d + k, d, 1) = a;
    kkt.block(d + k, 0, 1, d) = a.transpose();
    rhs(d + k) = b;
  }
  const Vec sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  const Vec v = sol.head(d);
  if (!v.allFinite() || (v - u).norm() > 1e-6 * (1.0 + u.norm())) return std::nullopt;
  for (int k = 0; k < m; ++k) {
    if (sol(d + k) < -1e-10) return std::nullopt;
  }
  for (const auto& [a, b] : rows) {
    if (a.dot(v) - b > 1e-12 * (1.0 + std::abs(b))) return std::nullopt;
  }
  return v;
}

bool is_diagonal(const Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

}  // namespace

ConvexSet::ConvexSet(int dim, std::vector<ConvexPrimitive> members, Vec witness)
    : dim_(dim), members_(std::move(members)), witness_(std::move(witness)) {
  if (dim_ < 1) throw Error(ErrorKind::Config, "constraint dimension must be at least 1");
  for (const auto& m : members_) {
    if (primitive_dim(m, dim_) != dim_) throw Error(ErrorKind::Config, "constraint members disagree on dimension");
  }
  if (witness_.size() != dim_) throw Error(ErrorKind::Config, "constraint witness has the wrong dimension");
  if (!contains(*this, witness_, 1e-9)) {
    throw Error(ErrorKind::Config, "constraint witness is not feasible (set may be empty)");
  }
}

ConvexSet ConvexSet::full_space(int d) { return ConvexSet(d, {FullSpace{}}, Vec::Zero(d)); }

ConvexSet ConvexSet::nonneg_orthant(int d) { return ConvexSet(d, {NonnegOrthant{}}, Vec::Zero(d)); }

ConvexSet ConvexSet::box(Vec lo, Vec hi) {
  if (lo.size() != hi.size()) throw Error(ErrorKind::Config, "box bounds differ in dimension");
  if ((lo.array() > hi.array()).any()) throw Error(ErrorKind::Config, "box requires lo <= hi componentwise");
  const int d = static_cast<int>(lo.size());
  Vec w = lo;
  return ConvexSet(d, {Box{std::move(lo), std::move(hi)}}, std::move(w));
}

ConvexSet ConvexSet::ball(Vec center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::Config, "ball requires radius > 0");
  const int d = static_cast<int>(center.size());
  Vec w = center;
  return ConvexSet(d, {Ball{std::move(center), radius}}, std::move(w));
}

ConvexSet ConvexSet::halfspace(Vec normal, double offset) {
  if (!(normal.norm() > 0.0)) throw Error(ErrorKind::Config, "halfspace requires a nonzero normal");
  const int d = static_cast<int>(normal.size());
  Halfspace h{std::move(normal), offset};
  Vec w = project_primitive(h, Vec::Zero(d));
  return ConvexSet(d, {std::move(h)}, std::move(w));
}

ConvexSet ConvexSet::intersection(const std::vector<ConvexSet>& members, Vec witness) {
  if (members.empty()) throw Error(ErrorKind::Config, "intersection needs at least one member");
  std::vector<ConvexPrimitive> flat;
  for (const auto& m : members) {
    if (m.dim() != members.front().dim()) throw Error(ErrorKind::Config, "intersection members differ in dimension");
    for (const auto& p : m.members()) {
      if (!std::holds_alternative<FullSpace>(p)) flat.push_back(p);
    }
  }
  if (flat.empty()) flat.push_back(FullSpace{});
  return ConvexSet(members.front().dim(), std::move(flat), std::move(witness));
}

bool ConvexSet::is_full_space() const {
  return members_.size() == 1 && std::holds_alternative<FullSpace>(members_.front());
}

bool contains(const ConvexSet& set, const Vec& u, double tol) {
  if (u.size() != set.dim()) return false;
  for (const auto& m : set.members()) {
    if (distance_to(m, u) > tol) return false;
  }
  return true;
}

std::vector<int> active_pieces(const ConvexSet& set, const Vec& u, double tol) {
  std::vector<int> flags;
  const int d = set.dim();
  for (const auto& m : set.members()) {
    if (const auto* b = std::get_if<Ball>(&m)) {
      flags.push_back((u - b->center).norm() > b->radius - tol * (1.0 + b->radius));
      continue;
    }
    std::vector<std::pair<Vec, double>> rows;
    linear_rows(m, d, rows);
    for (const auto& [a, off] : rows) flags.push_back(a.dot(u) - off > -tol * (1.0 + std::abs(off)));
  }
  return flags;
}

Vec project_native(const ConvexSet& set, const Vec& x) {
  if (x.size() != set.dim()) throw Error(ErrorKind::NumericalDomain, "projection argument has the wrong dimension");
  if (!set.is_intersection()) return project_primitive(set.members().front(), x);
  return dykstra(set.members(), x);
}

SigmaProjection project_sigma_image_full(const ConvexSet& set, const Mat& sigma, const Vec& x) {
  const int d = set.dim();
  if (x.size() != d || sigma.rows() != d || sigma.cols() != d) {
    throw Error(ErrorKind::NumericalDomain, "projection argument has the wrong dimension");
  }
  const Mat st = sigma.transpose();
  if (set.is_full_space()) return {x, solve_sigma_transpose(sigma, x, 0.0)};

  if (!set.is_intersection()) {
    const ConvexPrimitive& p = set.members().front();
    // sigma^T {n.u <= b} = {z : (sigma^-1 n).z <= b}.
    if (const auto* h = std::get_if<Halfspace>(&p)) {
      const Vec n_img = solve_sigma_transpose(st, h->normal, 0.0);  // sigma^-1 n
      const double excess = n_img.dot(x) - h->offset;
      Vec z = x;
      if (excess > 0.0) z -= excess / n_img.squaredNorm() * n_img;
      return {z, solve_sigma_transpose(sigma, z, 0.0)};
    }
    // Diagonal sigma maps boxes and the orthant to boxes.
    if (is_diagonal(sigma) && (std::holds_alternative<Box>(p) || std::holds_alternative<NonnegOrthant>(p))) {
      Vec lo(d), hi(d);
      if (const auto* b = std::get_if<Box>(&p)) {
        lo = b->lo;
        hi = b->hi;
      } else {
        lo.setZero();
        hi.setConstant(std::numeric_limits<double>::infinity());
      }
      Vec u(d), z(d);
      for (int i = 0; i < d; ++i) {
        const double s = sigma(i, i);
        if (s == 0.0) throw Error(ErrorKind::SingularSigma, "sigma has a zero diagonal entry");
        // Clamp in u-space: z_i = s u_i and the objective is separable.
        u(i) = std::clamp(x(i) / s, lo(i), hi(i));
        z(i) = s * u(i);
      }
      return {z, u};
    }
  }

  // Projected gradient on 0.5 |x - sigma^T u|^2 over U.
  const Mat gram = sigma * st;
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0)) throw Error(ErrorKind::SingularSigma, "sigma is singular in projection");
  const double step = 1.0 / lmax;
  // Distance to the minimiser is at most |du| lmax / lmin, so the stopping
  // threshold is scaled to keep the final error near 1e-10.
  const double tol = 1e-10 * std::min(1.0, lmin / lmax);
  const Vec sx = sigma * x;
  Vec u = project_native(set, solve_sigma_transpose(sigma, x, 0.0));
  constexpr int kMaxIter = 20000;
  double change = 0.0;
  for (int it = 0; it < kMaxIter; ++it) {
    const Vec next = project_native(set, u - step * (gram * u - sx));
    change = (next - u).norm();
    u = next;
    if (change < tol) {
      if (auto v = polish_active_set(set, gram, sx, u)) u = *v;
      return {st * u, u};
    }
  }
  std::ostringstream os;
  os << "projected gradient did not converge in " << kMaxIter << " iterations (last step " << change << ")";
  throw ProjectionError(os.str(), st * u, change * lmax);
}

Vec project_sigma_image(const ConvexSet& set, const Mat& sigma, const Vec& x) {
  return project_sigma_image_full(set, sigma, x).image;
}

}  // namespace beq
