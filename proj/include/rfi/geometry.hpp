#pragma once

// Geodesic metric spaces used throughout the library.
//
// Two Hadamard spaces are provided:
//   * Euclidean  - R^n with the l2 metric (points are Eigen vectors).
//   * Spider     - K half-lines glued at a common origin. Distance between
//                  points on different legs is measured through the origin.
//
// Both expose the same surface (Point, distance, geodesic, validate), which
// is what the rest of the library is templated on.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <string>
#include <variant>

#include "rfi/errors.hpp"

namespace rfi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// R^n with the Euclidean metric.
struct Euclidean {
  using Point = Vector;

  std::size_t dim = 1;

  explicit Euclidean(std::size_t n = 1) : dim(n) {
    detail::require(n >= 1, "euclidean space needs dimension >= 1");
  }

  void validate(const Point& p) const {
    if (static_cast<std::size_t>(p.size()) != dim)
      throw InputError("point of dimension " + std::to_string(p.size()) +
                       " does not belong to R^" + std::to_string(dim));
    if (!p.allFinite()) throw InputError("point has non-finite coordinates");
  }

  double distance(const Point& a, const Point& b) const {
    validate(a);
    validate(b);
    return (a - b).norm();
  }

  Point geodesic(const Point& a, const Point& b, double t) const {
    validate(a);
    validate(b);
    return (1.0 - t) * a + t * b;
  }

  friend bool operator==(const Euclidean&, const Euclidean&) = default;
};

/// A point on a K-leg spider. The origin is stored as (leg 0, radius 0).
struct SpiderPoint {
  int leg = 0;
  double radius = 0.0;

  SpiderPoint() = default;
  SpiderPoint(int l, double r) : leg(r == 0.0 ? 0 : l), radius(r) {}

  bool is_origin() const { return radius == 0.0; }

  friend bool operator==(const SpiderPoint& a, const SpiderPoint& b) {
    if (a.radius == 0.0 && b.radius == 0.0) return true;
    return a.leg == b.leg && a.radius == b.radius;
  }
};

/// K half-lines [0, inf) joined at the origin; a locally compact Hadamard space.
struct Spider {
  using Point = SpiderPoint;

  int legs = 2;

  explicit Spider(int k = 2) : legs(k) {
    detail::require(k >= 2, "spider needs at least 2 legs");
  }

  void validate(const Point& p) const {
    if (!(p.radius >= 0.0) || !std::isfinite(p.radius))
      throw InputError("spider radius must be finite and nonnegative");
    if (p.leg < 0 || p.leg >= legs)
      throw InputError("spider leg " + std::to_string(p.leg) + " outside 0.." +
                       std::to_string(legs - 1));
  }

  double distance(const Point& a, const Point& b) const {
    validate(a);
    validate(b);
    if (a.leg == b.leg) return std::abs(a.radius - b.radius);
    return a.radius + b.radius;
  }

  // Unique shortest path: along a's leg toward the origin, then out b's leg.
  Point geodesic(const Point& a, const Point& b, double t) const {
    validate(a);
    validate(b);
    if (a.leg == b.leg) return Point(a.leg, (1.0 - t) * a.radius + t * b.radius);
    const double total = a.radius + b.radius;
    const double s = t * total;
    if (s <= a.radius) return Point(a.leg, a.radius - s);
    return Point(b.leg, std::min(s - a.radius, b.radius));
  }

  friend bool operator==(const Spider&, const Spider&) = default;
};

template <class S>
concept GeodesicSpace = requires(const S& s, const typename S::Point& p, double t) {
  typename S::Point;
  { s.distance(p, p) } -> std::convertible_to<double>;
  { s.geodesic(p, p, t) } -> std::same_as<typename S::Point>;
  s.validate(p);
};

/// Runtime tag used where the space is only known from configuration.
using AnySpace = std::variant<Euclidean, Spider>;

template <GeodesicSpace S>
double distance(const S& space, const typename S::Point& a, const typename S::Point& b) {
  return space.distance(a, b);
}

template <GeodesicSpace S>
double squared_distance(const S& space, const typename S::Point& a,
                        const typename S::Point& b) {
  const double d = space.distance(a, b);
  return d * d;
}

/// Point w on the geodesic from a to b with d(a, w) = t d(a, b).
template <GeodesicSpace S>
typename S::Point geodesic_point(const S& space, const typename S::Point& a,
                                 const typename S::Point& b, double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw InputError("geodesic parameter t must lie in [0, 1]");
  if (t == 0.0) {
    space.validate(a);
    return a;
  }
  if (t == 1.0) {
    space.validate(b);
    return b;
  }
  return space.geodesic(a, b, t);
}

inline std::string describe(const Euclidean& s) { return "euclidean(" + std::to_string(s.dim) + ")"; }
inline std::string describe(const Spider& s) { return "spider(" + std::to_string(s.legs) + ")"; }

} // namespace rfi
