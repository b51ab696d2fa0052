#pragma once

#include <variant>
#include <vector>

#include "beq/market.hpp"

namespace beq {

struct FullSpace {};
struct NonnegOrthant {};
struct Box {
  Vec lo;
  Vec hi;
};
struct Ball {
  Vec center;
  double radius = 1.0;
};
/// { u : normal . u <= offset }
struct Halfspace {
  Vec normal;
  double offset = 0.0;
};

using ConvexPrimitive = std::variant<FullSpace, NonnegOrthant, Box, Ball, Halfspace>;

/// Nonempty closed convex set of admissible portfolio weights: one primitive
/// or an intersection of several. Always carries a verified feasible point.
class ConvexSet {
 public:
  static ConvexSet full_space(int d);
  static ConvexSet nonneg_orthant(int d);
  static ConvexSet box(Vec lo, Vec hi);
  static ConvexSet ball(Vec center, double radius);
  static ConvexSet halfspace(Vec normal, double offset);
  /// The witness is mandatory here since emptiness of an intersection is
  /// not decidable from the members alone.
  static ConvexSet intersection(const std::vector<ConvexSet>& members, Vec witness);

  int dim() const { return dim_; }
  const std::vector<ConvexPrimitive>& members() const { return members_; }
  const Vec& witness() const { return witness_; }
  bool is_full_space() const;
  bool is_intersection() const { return members_.size() > 1; }

 private:
  ConvexSet(int dim, std::vector<ConvexPrimitive> members, Vec witness);

  int dim_;
  std::vector<ConvexPrimitive> members_;
  Vec witness_;
};

/// True iff u lies within Euclidean distance `tol` of every member.
bool contains(const ConvexSet& set, const Vec& u, double tol = 0.0);

/// One flag per boundary piece (orthant coordinate, finite box side, ball
/// sphere, halfspace plane), set when u lies within `tol` of it. Two points
/// with the same flags lie on the same smooth piece of the projection.
std::vector<int> active_pieces(const ConvexSet& set, const Vec& u, double tol = 1e-9);

/// Euclidean projection onto the set. Intersections use Dykstra's
/// alternating projections (tolerance 1e-10, at most 10000 sweeps).
Vec project_native(const ConvexSet& set, const Vec& x);

/// Projection of x onto sigma^T U, i.e. sigma^T u* with
/// u* = argmin_{u in U} |x - sigma^T u|. Returns the image point.
Vec project_sigma_image(const ConvexSet& set, const Mat& sigma, const Vec& x);

/// Same, but also returns the preimage u* (avoids a second solve).
struct SigmaProjection {
  Vec image;  // sigma^T u*
  Vec u;      // u*
};
SigmaProjection project_sigma_image_full(const ConvexSet& set, const Mat& sigma, const Vec& x);

}  // namespace beq
