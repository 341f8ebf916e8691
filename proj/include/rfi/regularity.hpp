#pragma once

// Transport discrepancy and sampled estimates of the almost alpha-firm
// nonexpansiveness violation, pointwise and in expectation over a finite
// operator family.
//
// Every estimate here is a maximum over sampled pairs, i.e. a lower bound on
// the true violation over the sampling region. The region and the sample
// count are carried in the report.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rfi/errors.hpp"
#include "rfi/geometry.hpp"
#include "rfi/operators.hpp"
#include "rfi/parallel.hpp"
#include "rfi/random.hpp"

namespace rfi {

/// psi(x, x0, Fx, Fx0) from the six squared distances.
template <GeodesicSpace S>
double transport_discrepancy(const S& space, const typename S::Point& x, const typename S::Point& x0,
                             const typename S::Point& fx, const typename S::Point& fx0) {
  auto d2 = [&](const auto& a, const auto& b) { return squared_distance(space, a, b); };
  return d2(fx, x) + d2(fx0, x0) + d2(fx, fx0) + d2(x, x0) - d2(fx, x0) - d2(x, fx0);
}

/// Inner-product form ||(x - Fx) - (x0 - Fx0)||^2, valid in Euclidean space.
inline double displacement_discrepancy(const Vector& x, const Vector& x0, const Vector& fx, const Vector& fx0) {
  return ((x - fx) - (x0 - fx0)).squaredNorm();
}

// ---------------------------------------------------------------------------
// Pair samplers
//
// A sampler maps a pair index to a pair of points. Being a pure function of
// the index, it can be evaluated in any order on any worker.

template <GeodesicSpace S>
struct PairSampler {
  using Point = typename S::Point;
  std::function<std::pair<Point, Point>(std::uint64_t)> draw;
  std::string region;

  std::pair<Point, Point> operator()(std::uint64_t k) const { return draw(k); }
};

/// Independent uniform points in the box center +- half_width (per coordinate).
inline PairSampler<Euclidean> box_pair_sampler(Vector center, double half_width, std::uint64_t seed) {
  detail::require(half_width > 0.0, "sampling box must have positive width");
  const auto n = center.size();
  std::string region = "box(dim=" + std::to_string(n) + ", half_width=" + std::to_string(half_width) + ")";
  return {[center = std::move(center), half_width, rng = CounterRng(seed)](std::uint64_t k) {
            const auto n = center.size();
            Vector x(n), y(n);
            for (Eigen::Index j = 0; j < n; ++j) {
              x[j] = center[j] + half_width * (2.0 * rng.uniform(k, 0, static_cast<unsigned>(2 * j)) - 1.0);
              y[j] = center[j] + half_width * (2.0 * rng.uniform(k, 0, static_cast<unsigned>(2 * j + 1)) - 1.0);
            }
            return std::pair{x, y};
          },
          std::move(region)};
}

/// Uniform leg, radius uniform in [0, max_radius] for both points.
inline PairSampler<Spider> spider_pair_sampler(const Spider& space, double max_radius, std::uint64_t seed) {
  detail::require(max_radius > 0.0, "sampling radius must be positive");
  return {[legs = space.legs, max_radius, rng = CounterRng(seed)](std::uint64_t k) {
            auto leg = [&](unsigned lane) {
              return std::min(legs - 1, static_cast<int>(rng.uniform(k, 0, lane) * legs));
            };
            SpiderPoint x(leg(0), max_radius * rng.uniform(k, 0, 1));
            SpiderPoint y(leg(2), max_radius * rng.uniform(k, 0, 3));
            return std::pair{x, y};
          },
          "spider(legs=" + std::to_string(space.legs) + ", max_radius=" + std::to_string(max_radius) + ")"};
}

// ---------------------------------------------------------------------------
// Violation estimates

template <GeodesicSpace S>
struct RegularityReport {
  double alpha = 0.5;
  double epsilon_hat = 0.0;
  std::optional<std::pair<typename S::Point, typename S::Point>> worst_pair;
  std::size_t n_pairs = 0;   // pairs drawn
  std::size_t n_skipped = 0; // pairs with d(x, y) below the exclusion threshold
  std::string region;
};

/// Pairs closer than this are excluded from violation estimates.
inline constexpr double kMinPairDistance = 1e-12;

namespace detail {

struct PairScore {
  double value = -std::numeric_limits<double>::infinity();
  std::uint64_t index = 0;
  std::size_t skipped = 0;
  bool any = false;

  void offer(double v, std::uint64_t k) {
    if (!any || v > value || (v == value && k < index)) {
      value = v;
      index = k;
      any = true;
    }
  }
  void merge(const PairScore& o) {
    skipped += o.skipped;
    if (o.any) offer(o.value, o.index);
  }
};

// score(k) returns nullopt when the pair is skipped. The reduction (max,
// ties to the lowest index) does not depend on how pairs are partitioned.
template <class Score>
PairScore max_over_pairs(std::size_t n_pairs, unsigned workers, Score&& score) {
  PairScore total;
  std::mutex m;
  parallel_for(n_pairs, workers, [&](std::size_t b, std::size_t e) {
    PairScore local;
    for (std::size_t k = b; k < e; ++k) {
      const std::optional<double> v = score(static_cast<std::uint64_t>(k));
      if (v) local.offer(*v, k);
      else ++local.skipped;
    }
    std::lock_guard lock(m);
    total.merge(local);
  });
  return total;
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
}

} // namespace detail

/// Smallest eps (clamped at 0) with
///   d^2(Fx,Fy) <= (1+eps) d^2(x,y) - ((1-alpha)/alpha) psi(x,y,Fx,Fy)
/// over the sampled pairs.
template <GeodesicSpace S>
RegularityReport<S> estimate_violation(const Operator<S>& op, double alpha, const PairSampler<S>& sampler,
                                       std::size_t n_pairs, unsigned workers = 1) {
  detail::check_alpha(alpha);
  detail::require(n_pairs >= 1, "need at least one sampled pair");
  const double kappa = (1.0 - alpha) / alpha;
  const auto& space = op.space;
  auto best = detail::max_over_pairs(n_pairs, workers, [&](std::uint64_t k) -> std::optional<double> {
    const auto [x, y] = sampler(k);
    const double d2 = squared_distance(space, x, y);
    if (std::sqrt(d2) < kMinPairDistance) return std::nullopt;
    const auto fx = op(x);
    const auto fy = op(y);
    const double lhs = squared_distance(space, fx, fy) + kappa * transport_discrepancy(space, x, y, fx, fy);
    return lhs / d2 - 1.0;
  });
  RegularityReport<S> rep;
  rep.alpha = alpha;
  rep.n_pairs = n_pairs;
  rep.n_skipped = best.skipped;
  rep.region = sampler.region;
  if (best.any) {
    rep.epsilon_hat = std::max(0.0, best.value);
    rep.worst_pair = sampler(best.index);
  }
  return rep;
}

/// Same as estimate_violation with exact expectations over the family weights.
template <GeodesicSpace S>
RegularityReport<S> estimate_violation_in_expectation(const OperatorFamily<S>& family, double alpha,
                                                      const PairSampler<S>& sampler, std::size_t n_pairs,
                                                      unsigned workers = 1) {
  detail::check_alpha(alpha);
  detail::require(n_pairs >= 1, "need at least one sampled pair");
  const double kappa = (1.0 - alpha) / alpha;
  const auto& space = family.space();
  auto best = detail::max_over_pairs(n_pairs, workers, [&](std::uint64_t k) -> std::optional<double> {
    const auto [x, y] = sampler(k);
    const double d2 = squared_distance(space, x, y);
    if (std::sqrt(d2) < kMinPairDistance) return std::nullopt;
    double lhs = 0.0;
    for (std::size_t i = 0; i < family.size(); ++i) {
      const double w = family.weights()[i];
      if (w == 0.0) continue;
      const auto fx = family.apply(x, i);
      const auto fy = family.apply(y, i);
      lhs += w * (squared_distance(space, fx, fy) + kappa * transport_discrepancy(space, x, y, fx, fy));
    }
    return lhs / d2 - 1.0;
  });
  RegularityReport<S> rep;
  rep.alpha = alpha;
  rep.n_pairs = n_pairs;
  rep.n_skipped = best.skipped;
  rep.region = sampler.region;
  if (best.any) {
    rep.epsilon_hat = std::max(0.0, best.value);
    rep.worst_pair = sampler(best.index);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Closed-form violation bounds

/// Forward-backward operator, alpha = 2/3:
/// eps = max{0, (1 + 2 tau_g)(1 + t(2 tau_f + 2 t L^2)) - 1}.
inline double fb_violation_bound(double t, double L, double tau_f, double tau_g) {
  detail::require(t > 0.0 && L > 0.0, "fb bound needs t > 0 and L > 0");
  return std::max(0.0, (1.0 + 2.0 * tau_g) * (1.0 + t * (2.0 * tau_f + 2.0 * t * L * L)) - 1.0);
}

/// Douglas-Rachford operator, alpha = 1/2:
/// eps = 1/2 ((1 + 2 tau_g)(1 + 2 tau_f) - 1), clamped at 0.
inline double dr_violation_bound(double tau_f, double tau_g) {
  return std::max(0.0, 0.5 * ((1.0 + 2.0 * tau_g) * (1.0 + 2.0 * tau_f) - 1.0));
}

// ---------------------------------------------------------------------------
// Monotonicity probes (Euclidean)

/// Smallest tau with -tau ||x-y||^2 <= <grad(x) - grad(y), x - y> on the sample.
/// Negative values indicate strong monotonicity.
inline double check_hypomonotone(const std::function<Vector(const Vector&)>& grad,
                                 const PairSampler<Euclidean>& sampler, std::size_t n_pairs,
                                 unsigned workers = 1) {
  detail::require(n_pairs >= 1, "need at least one sampled pair");
  auto best = detail::max_over_pairs(n_pairs, workers, [&](std::uint64_t k) -> std::optional<double> {
    const auto [x, y] = sampler(k);
    const Vector dx = x - y;
    const double nn = dx.squaredNorm();
    if (std::sqrt(nn) < kMinPairDistance) return std::nullopt;
    return -(grad(x) - grad(y)).dot(dx) / nn;
  });
  detail::require(best.any, "all sampled pairs were degenerate");
  return best.value;
}

/// Smallest tau_g with -(tau_g/2)||x - y||^2 <= <z - w, x+ - y+>, where
/// x+ = J(x), z = x - x+ and likewise for y.
inline double check_submonotone(const std::function<Vector(const Vector&)>& resolvent,
                                const PairSampler<Euclidean>& sampler, std::size_t n_pairs,
                                unsigned workers = 1) {
  detail::require(n_pairs >= 1, "need at least one sampled pair");
  auto best = detail::max_over_pairs(n_pairs, workers, [&](std::uint64_t k) -> std::optional<double> {
    const auto [x, y] = sampler(k);
    const double nn = (x - y).squaredNorm();
    if (std::sqrt(nn) < kMinPairDistance) return std::nullopt;
    const Vector xp = resolvent(x);
    const Vector yp = resolvent(y);
    const Vector z = x - xp;
    const Vector w = y - yp;
    return -2.0 * (z - w).dot(xp - yp) / nn;
  });
  detail::require(best.any, "all sampled pairs were degenerate");
  return best.value;
}

} // namespace rfi
