// Bounded convex domains (interval, axis-aligned box, Euclidean ball) with
// closed-form projection, distance, membership and outward-normal queries.
// All queries are pure; Domain values are immutable after construction.
#pragma once

#include "mortensen/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mortensen {

enum class DomainKind { Interval, Box, Ball };

class Domain {
 public:
  static Domain interval(double a, double b) {
    if (!(a < b)) throw Error("Domain::interval: need a < b");
    Domain d;
    d.kind_ = DomainKind::Interval;
    d.lo_ = make_vec1(a);
    d.hi_ = make_vec1(b);
    return d;
  }

  static Domain box(const Vec& lo, const Vec& hi) {
    if (lo.size() != hi.size() || lo.size() < 1) throw Error("Domain::box: bad extents");
    for (int i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) throw Error("Domain::box: need lo < hi on every axis");
    Domain d;
    d.kind_ = DomainKind::Box;
    d.lo_ = lo;
    d.hi_ = hi;
    return d;
  }

  static Domain ball(const Vec& center, double radius) {
    if (radius <= 0) throw Error("Domain::ball: need radius > 0");
    Domain d;
    d.kind_ = DomainKind::Ball;
    d.center_ = center;
    d.radius_ = radius;
    d.lo_ = center.array() - radius;
    d.hi_ = center.array() + radius;
    return d;
  }

  DomainKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(lo_.size()); }

  // Bounding box of the closure (equals the box itself for interval/box).
  const Vec& bounding_lo() const { return lo_; }
  const Vec& bounding_hi() const { return hi_; }

  double diameter() const {
    if (kind_ == DomainKind::Ball) return 2.0 * radius_;
    return (hi_ - lo_).norm();
  }

  double tol_boundary() const { return 1e-9 * diameter(); }

  // Orthogonal projection onto the closure; identity on the set.
  Vec project(const Vec& x) const {
    check_dim(x);
    if (kind_ == DomainKind::Ball) {
      Vec d = x - center_;
      const double r = d.norm();
      if (r <= radius_) return x;
      return center_ + d * (radius_ / r);
    }
    Vec y = x;
    for (int i = 0; i < y.size(); ++i) y[i] = std::clamp(y[i], lo_[i], hi_[i]);
    return y;
  }

  double dist_to_set(const Vec& x) const { return (x - project(x)).norm(); }

  bool contains(const Vec& x, double tol = 0.0) const { return dist_to_set(x) <= tol; }

  // Distance from an inside point to the boundary (0 if outside the closure).
  double boundary_distance_inside(const Vec& x) const {
    check_dim(x);
    if (kind_ == DomainKind::Ball) {
      return std::max(0.0, radius_ - (x - center_).norm());
    }
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < x.size(); ++i) {
      d = std::min(d, x[i] - lo_[i]);
      d = std::min(d, hi_[i] - x[i]);
    }
    return std::max(0.0, d);
  }

  // Unsigned distance to the boundary, from either side.
  double dist_to_boundary(const Vec& x) const {
    const double out = dist_to_set(x);
    return out > 0 ? out : boundary_distance_inside(x);
  }

  struct SignedQueries {
    double dist_to_set = 0;
    bool in_interior = false;
    bool on_boundary = false;
  };

  SignedQueries signed_queries(const Vec& x) const {
    SignedQueries q;
    q.dist_to_set = dist_to_set(x);
    const double tol = tol_boundary();
    q.on_boundary = dist_to_boundary(x) <= tol;
    q.in_interior = q.dist_to_set <= tol && !q.on_boundary;
    return q;
  }

  // Outward unit normal at a boundary point. For box corners the convention is
  // the normalized sum of the active face normals (any element of the normal
  // cone is admissible; this one is deterministic).
  Vec outward_normal(const Vec& x) const {
    check_dim(x);
    const double tol = tol_boundary();
    if (dist_to_boundary(x) > tol)
      throw Error("Domain::outward_normal: point is not on the boundary");
    if (kind_ == DomainKind::Ball) {
      Vec d = x - center_;
      const double r = d.norm();
      if (r == 0) throw Error("Domain::outward_normal: center has no normal");
      return d / r;
    }
    Vec n = Vec::Zero(dim());
    for (int i = 0; i < n.size(); ++i) {
      if (std::abs(x[i] - lo_[i]) <= tol) n[i] -= 1.0;
      if (std::abs(hi_[i] - x[i]) <= tol) n[i] += 1.0;
    }
    const double len = n.norm();
    if (len == 0) throw Error("Domain::outward_normal: no active face");
    return n / len;
  }

  // Outward normal at the boundary point nearest to x (x may lie on either
  // side of the boundary). Ties between box faces resolve to the normalized
  // sum of the nearest face normals.
  Vec nearest_boundary_normal(const Vec& x) const {
    check_dim(x);
    if (kind_ == DomainKind::Ball) {
      Vec d = x - center_;
      const double r = d.norm();
      if (r < 1e-12 * radius_) throw Error("nearest_boundary_normal: center is ambiguous");
      return d / r;
    }
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < x.size(); ++a)
      best = std::min({best, std::abs(x[a] - lo_[a]), std::abs(hi_[a] - x[a])});
    const double tol = best + 1e-12 * diameter();
    Vec n = Vec::Zero(dim());
    for (int a = 0; a < x.size(); ++a) {
      if (std::abs(x[a] - lo_[a]) <= tol) n[a] -= 1;
      if (std::abs(hi_[a] - x[a]) <= tol) n[a] += 1;
    }
    const double len = n.norm();
    if (len == 0) throw Error("nearest_boundary_normal: no face found");
    return n / len;
  }

  // Parameters for serialization / reporting.
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  void check_dim(const Vec& x) const {
    if (x.size() != lo_.size()) throw Error("Domain: dimension mismatch");
  }

  DomainKind kind_ = DomainKind::Interval;
  Vec lo_, hi_;     // bounding box (== the box for interval/box kinds)
  Vec center_;      // ball only
  double radius_ = 0;
};

}  // namespace mortensen
