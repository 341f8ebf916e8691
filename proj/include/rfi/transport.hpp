#pragma once

// Exact optimal transport between equal-size, equal-weight ensembles
// (an assignment problem), transport between small weighted atomic measures,
// the Markov transport discrepancy estimator and coarse Ricci curvature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "rfi/errors.hpp"
#include "rfi/geometry.hpp"
#include "rfi/operators.hpp"
#include "rfi/regularity.hpp"

namespace rfi {

template <GeodesicSpace S>
using Ensemble = std::vector<typename S::Point>;

/// sigma[i] = index in B matched to A[i]; always a permutation.
using Coupling = std::vector<std::size_t>;

struct TransportResult {
  double value = 0.0;
  Coupling coupling;
};

/// Row-major square cost matrix.
struct CostMatrix {
  std::size_t n = 0;
  std::vector<double> c;

  explicit CostMatrix(std::size_t size) : n(size), c(size * size, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return c[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return c[i * n + j]; }
};

/// Minimum-cost perfect matching (Kuhn-Munkres with potentials, O(n^3)).
/// Returns row -> column.
inline Coupling solve_assignment(const CostMatrix& cost) {
  const std::size_t n = cost.n;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      const double* row = &cost.c[(i0 - 1) * n];
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Coupling sigma(n);
  for (std::size_t j = 1; j <= n; ++j) sigma[p[j] - 1] = j - 1;
  return sigma;
}

namespace detail {

inline double pow_cost(double d, double p) { return p == 2.0 ? d * d : (p == 1.0 ? d : std::pow(d, p)); }

// On the line every convex cost |x - y|^p (p >= 1) is minimized by the
// monotone (sorted) matching.
inline Coupling sorted_coupling(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<std::size_t> ia(a.size()), ib(b.size());
  std::iota(ia.begin(), ia.end(), std::size_t{0});
  std::iota(ib.begin(), ib.end(), std::size_t{0});
  std::stable_sort(ia.begin(), ia.end(), [&](auto i, auto j) { return a[i] < a[j]; });
  std::stable_sort(ib.begin(), ib.end(), [&](auto i, auto j) { return b[i] < b[j]; });
  Coupling sigma(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) sigma[ia[k]] = ib[k];
  return sigma;
}

} // namespace detail

template <GeodesicSpace S>
CostMatrix transport_costs(const S& space, const Ensemble<S>& A, const Ensemble<S>& B, double p) {
  CostMatrix cost(A.size());
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < B.size(); ++j) cost(i, j) = detail::pow_cost(space.distance(A[i], B[j]), p);
  return cost;
}

/// Average cost (1/N) sum_i d(a_i, b_sigma(i))^p of a given coupling.
template <GeodesicSpace S>
double coupling_cost(const S& space, const Ensemble<S>& A, const Ensemble<S>& B, const Coupling& sigma,
                     double p) {
  double total = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) total += detail::pow_cost(space.distance(A[i], B[sigma[i]]), p);
  return total / static_cast<double>(A.size());
}

/// Exact W_p between two equal-weight ensembles of the same size, with an
/// optimal coupling.
template <GeodesicSpace S>
TransportResult wasserstein(const S& space, const Ensemble<S>& A, const Ensemble<S>& B, double p = 2.0) {
  detail::require(p >= 1.0 && std::isfinite(p), "Wasserstein order p must be >= 1");
  detail::require(!A.empty(), "ensembles must be nonempty");
  if (A.size() != B.size())
    throw InputError("ensemble sizes differ (" + std::to_string(A.size()) + " vs " + std::to_string(B.size()) +
                     "); only equal-size ensembles are supported");
  for (const auto& a : A) space.validate(a);
  for (const auto& b : B) space.validate(b);

  TransportResult out;
  if constexpr (std::is_same_v<S, Euclidean>) {
    if (space.dim == 1) {
      std::vector<double> a(A.size()), b(B.size());
      for (std::size_t i = 0; i < A.size(); ++i) {
        a[i] = A[i][0];
        b[i] = B[i][0];
      }
      out.coupling = detail::sorted_coupling(a, b);
    }
  }
  if (out.coupling.empty()) out.coupling = solve_assignment(transport_costs(space, A, B, p));
  out.value = std::pow(coupling_cost(space, A, B, out.coupling, p), 1.0 / p);
  return out;
}

// ---------------------------------------------------------------------------
// Weighted atomic measures

template <GeodesicSpace S>
struct AtomicMeasure {
  std::vector<typename S::Point> atoms;
  std::vector<double> weights;
};

/// Minimum of sum_ij pi_ij c_ij over couplings of weight vectors a and b
/// (successive shortest paths on the transportation network). Meant for the
/// handful of atoms produced by pushing a point through a finite family.
inline double weighted_transport_cost(const std::vector<double>& a, const std::vector<double>& b,
                                      const std::vector<std::vector<double>>& cost) {
  const std::size_t m = a.size(), n = b.size();
  detail::require(m > 0 && n > 0 && cost.size() == m, "weighted transport: malformed input");
  const double ta = std::accumulate(a.begin(), a.end(), 0.0);
  const double tb = std::accumulate(b.begin(), b.end(), 0.0);
  detail::require(std::abs(ta - tb) <= 1e-12 * std::max(1.0, ta), "weighted transport: unequal total mass");

  struct Edge {
    std::size_t to;
    double cap;
    double cost;
  };
  const std::size_t src = m + n, snk = m + n + 1, V = m + n + 2;
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> adj(V);
  auto add = [&](std::size_t u, std::size_t v, double cap, double c) {
    adj[u].push_back(edges.size());
    edges.push_back({v, cap, c});
    adj[v].push_back(edges.size());
    edges.push_back({u, 0.0, -c});
  };
  const double big = ta + tb + 1.0;
  for (std::size_t i = 0; i < m; ++i) add(src, i, a[i], 0.0);
  for (std::size_t j = 0; j < n; ++j) add(m + j, snk, b[j], 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    detail::require(cost[i].size() == n, "weighted transport: cost row length mismatch");
    for (std::size_t j = 0; j < n; ++j) add(i, m + j, big, cost[i][j]);
  }

  constexpr double kCapTol = 1e-15;
  double shipped = 0.0, total = 0.0;
  const std::size_t max_rounds = 4 * (edges.size() + V) + 16;
  for (std::size_t round = 0; shipped < ta - kCapTol * std::max(1.0, ta); ++round) {
    if (round > max_rounds) throw std::runtime_error("weighted transport did not converge");
    // Bellman-Ford on the residual network
    std::vector<double> dist(V, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> via(V, edges.size());
    dist[src] = 0.0;
    for (std::size_t it = 0; it + 1 < V; ++it) {
      bool changed = false;
      for (std::size_t u = 0; u < V; ++u) {
        if (!std::isfinite(dist[u])) continue;
        for (std::size_t e : adj[u]) {
          const Edge& E = edges[e];
          if (E.cap <= kCapTol) continue;
          if (dist[u] + E.cost < dist[E.to] - 1e-15) {
            dist[E.to] = dist[u] + E.cost;
            via[E.to] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (!std::isfinite(dist[snk])) break;
    double push = std::numeric_limits<double>::infinity();
    for (std::size_t v = snk; v != src; v = edges[via[v] ^ 1].to) push = std::min(push, edges[via[v]].cap);
    for (std::size_t v = snk; v != src; v = edges[via[v] ^ 1].to) {
      edges[via[v]].cap -= push;
      edges[via[v] ^ 1].cap += push;
    }
    shipped += push;
    total += push * dist[snk];
  }
  return total;
}

template <GeodesicSpace S>
double wasserstein_weighted(const S& space, const AtomicMeasure<S>& mu, const AtomicMeasure<S>& nu, double p = 2.0) {
  detail::require(p >= 1.0, "Wasserstein order p must be >= 1");
  std::vector<std::vector<double>> cost(mu.atoms.size(), std::vector<double>(nu.atoms.size()));
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    for (std::size_t j = 0; j < nu.atoms.size(); ++j)
      cost[i][j] = detail::pow_cost(space.distance(mu.atoms[i], nu.atoms[j]), p);
  return std::pow(std::max(0.0, weighted_transport_cost(mu.weights, nu.weights, cost)), 1.0 / p);
}

/// delta_x P: the atoms T_i x with weights w_i.
template <GeodesicSpace S>
AtomicMeasure<S> push_forward(const OperatorFamily<S>& family, const typename S::Point& x) {
  AtomicMeasure<S> out;
  for (std::size_t i = 0; i < family.size(); ++i) {
    out.atoms.push_back(family.apply(x, i));
    out.weights.push_back(family.weights()[i]);
  }
  return out;
}

/// kappa_p(x, y) = 1 - W_p^p(delta_x P, delta_y P) / d(x, y)^p.
template <GeodesicSpace S>
double coarse_ricci_estimate(const OperatorFamily<S>& family, const typename S::Point& x,
                             const typename S::Point& y, double p = 2.0) {
  const auto& space = family.space();
  const double d = space.distance(x, y);
  if (!(d > 0.0)) throw InputError("coarse Ricci curvature needs distinct points");
  const double w = wasserstein_weighted(space, push_forward(family, x), push_forward(family, y), p);
  return 1.0 - std::pow(w, p) / std::pow(d, p);
}

// ---------------------------------------------------------------------------
// Markov transport discrepancy

struct MarkovDiscrepancy {
  double value = 0.0;
  std::size_t candidate = 0; // index of the minimizing candidate
};

/// Psi-hat(mu) = min over candidates pi of
///   ( sum_i w_i (1/N) sum_k psi(x_k, y_sigma(k), T_i x_k, T_i y_sigma(k)) )^{1/2}
/// with sigma an optimal W_2 coupling between mu and pi.
///
/// An empty candidate list stands for "no invariant measure available" and is
/// rejected; callers report that case separately from a numeric value.
template <GeodesicSpace S>
MarkovDiscrepancy markov_transport_discrepancy(const OperatorFamily<S>& family, const Ensemble<S>& mu,
                                               const std::vector<Ensemble<S>>& candidates,
                                               unsigned workers = 1) {
  if (candidates.empty()) throw InputError("no invariant-measure candidate supplied (Psi would be +inf)");
  const auto& space = family.space();
  const std::size_t N = mu.size();
  const std::size_t m = family.size();

  std::vector<std::vector<typename S::Point>> tx(m, std::vector<typename S::Point>(N));
  parallel_for(N, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k)
      for (std::size_t i = 0; i < m; ++i)
        if (family.weights()[i] > 0.0) tx[i][k] = family.apply(mu[k], i);
  });

  MarkovDiscrepancy best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& pi = candidates[c];
    const Coupling sigma = wasserstein(space, mu, pi, 2.0).coupling;
    std::vector<double> per_particle(N, 0.0);
    parallel_for(N, workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) {
        const auto& x = mu[k];
        const auto& y = pi[sigma[k]];
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double w = family.weights()[i];
          if (w == 0.0) continue;
          acc += w * transport_discrepancy(space, x, y, tx[i][k], family.apply(y, i));
        }
        per_particle[k] = acc;
      }
    });
    // fixed summation order
    double total = 0.0;
    for (double v : per_particle) total += v;
    const double value = std::sqrt(std::max(0.0, total / static_cast<double>(N)));
    if (value < best.value) best = {value, c};
  }
  return best;
}

} // namespace rfi
