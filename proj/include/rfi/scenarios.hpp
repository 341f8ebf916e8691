#pragma once

// Catalog of concrete operator families with their initial ensembles, pair
// sampling regions and whatever ground truth is known for them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rfi/errors.hpp"
#include "rfi/geometry.hpp"
#include "rfi/operators.hpp"
#include "rfi/random.hpp"
#include "rfi/regularity.hpp"
#include "rfi/transport.hpp"

namespace rfi {

/// Closed-form violation constant declared by a scenario.
struct ViolationBound {
  std::string formula; // "exact", "forward_backward" or "douglas_rachford"
  double epsilon = 0.0;
  std::vector<std::pair<std::string, double>> constants;
};

template <GeodesicSpace S>
struct Scenario {
  using Point = typename S::Point;
  using EnsembleBuilder = std::function<Ensemble<S>(std::size_t, std::uint64_t)>;

  std::string name;
  OperatorFamily<S> family;
  EnsembleBuilder initial;
  std::function<PairSampler<S>(std::uint64_t)> pairs;
  double alpha = 0.5; // alpha at which violations are reported
  std::optional<ViolationBound> bound;
  // Bound whose constants are themselves estimated on sampled pairs.
  std::function<ViolationBound(const PairSampler<S>&, std::size_t, unsigned)> estimated_bound;

  // Ground truth, where known.
  std::optional<EnsembleBuilder> invariant; // exact sampler of the invariant measure
  std::optional<double> known_rate;
  std::optional<Point> limit_point;
  std::function<double(const Point&)> error_to_truth; // per-particle error; empty if none

  std::vector<std::string> warnings;

  Scenario(std::string n, OperatorFamily<S> f, EnsembleBuilder init, double a)
      : name(std::move(n)), family(std::move(f)), initial(std::move(init)), alpha(a) {}

  const S& space() const { return family.space(); }
};

// ---------------------------------------------------------------------------
// Ensemble builders

/// Independent uniform points in the box center +- half_width.
inline Scenario<Euclidean>::EnsembleBuilder uniform_box_ensemble(Vector center, double half_width) {
  detail::require(half_width >= 0.0, "initial box half width must be nonnegative");
  return [center = std::move(center), half_width](std::size_t N, std::uint64_t seed) {
    const CounterRng rng(mix_seed(seed, 0x1417));
    Ensemble<Euclidean> out(N, Vector(center.size()));
    for (std::size_t p = 0; p < N; ++p)
      for (Eigen::Index j = 0; j < center.size(); ++j)
        out[p][j] = center[j] + half_width * (2.0 * rng.uniform(p, static_cast<std::uint64_t>(j)) - 1.0);
    return out;
  };
}

/// Uniform leg, radius uniform on [0, max_radius].
inline Scenario<Spider>::EnsembleBuilder uniform_spider_ensemble(int legs, double max_radius) {
  detail::require(max_radius >= 0.0, "initial radius must be nonnegative");
  return [legs, max_radius](std::size_t N, std::uint64_t seed) {
    const CounterRng rng(mix_seed(seed, 0x5b1d));
    Ensemble<Spider> out(N);
    for (std::size_t p = 0; p < N; ++p) {
      const int leg = std::min(legs - 1, static_cast<int>(rng.uniform(p, 0, 0) * legs));
      out[p] = SpiderPoint(leg, max_radius * rng.uniform(p, 0, 1));
    }
    return out;
  };
}

/// Sampling resolution of ensemble W_2 estimates: root mean square of
/// W_2 between independent size-N draws from the same law.
template <GeodesicSpace S>
double monte_carlo_floor(const S& space, const typename Scenario<S>::EnsembleBuilder& sample, std::size_t N,
                         std::uint64_t seed, std::size_t replicates = 4) {
  detail::require(replicates >= 1 && N >= 1, "floor needs N >= 1 and at least one replicate");
  double acc = 0.0;
  for (std::size_t r = 0; r < replicates; ++r) {
    const double w = wasserstein(space, sample(N, mix_seed(seed, 2 * r)), sample(N, mix_seed(seed, 2 * r + 1))).value;
    acc += w * w;
  }
  return std::sqrt(acc / static_cast<double>(replicates));
}

// ---------------------------------------------------------------------------
// Two points on the line

/// T_1 = P_{-1}, T_2 = P_{+1} with equal weights. The invariant measure
/// 1/2 (delta_{-1} + delta_{+1}) is reached after one step.
inline Scenario<Euclidean> scenario_two_point() {
  const Euclidean R1(1);
  OperatorFamily<Euclidean> fam({point_projector(R1, Vector::Constant(1, -1.0)),
                                 point_projector(R1, Vector::Constant(1, 1.0))});
  Scenario<Euclidean> s{"two_point", fam, uniform_box_ensemble(Vector::Zero(1), 3.0), 0.5};
  s.pairs = [](std::uint64_t seed) { return box_pair_sampler(Vector::Zero(1), 3.0, seed); };
  s.bound = ViolationBound{"exact", 0.0, {}};
  s.invariant = [](std::size_t N, std::uint64_t seed) {
    const CounterRng rng(mix_seed(seed, 0x2b0));
    Ensemble<Euclidean> out(N, Vector(1));
    for (std::size_t p = 0; p < N; ++p) out[p][0] = rng.uniform(p, 0) < 0.5 ? -1.0 : 1.0;
    return out;
  };
  s.known_rate = 0.0;
  return s;
}

/// N/2 particles at -1 and the rest at +1: the invariant measure of the
/// two-point scenario represented without sampling noise.
inline Ensemble<Euclidean> two_point_exact_ensemble(std::size_t N) {
  Ensemble<Euclidean> out(N, Vector::Constant(1, 1.0));
  for (std::size_t p = 0; p < N / 2; ++p) out[p][0] = -1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Affine contraction in expectation

/// x -> r x + 1 and x -> r x - 1 with equal weights. Contractive in
/// expectation with constant r; alpha-fne in expectation for alpha = (1+r)/2.
inline Scenario<Euclidean> scenario_contraction(double r) {
  detail::require(r > 0.0 && r < 1.0, "contraction constant must lie in (0, 1)");
  const Euclidean R1(1);
  OperatorFamily<Euclidean> fam({Operator<Euclidean>{R1, [r](const Vector& x) -> Vector { return r * x.array() + 1.0; },
                                                     "affine_plus"},
                                 Operator<Euclidean>{R1, [r](const Vector& x) -> Vector { return r * x.array() - 1.0; },
                                                     "affine_minus"}});
  const double reach = 1.0 / (1.0 - r);
  // Started off-center: the mean offset then decays exactly like r^k.
  Scenario<Euclidean> s{"contraction", fam, uniform_box_ensemble(Vector::Constant(1, 4.0 * reach), reach),
                        0.5 * (1.0 + r)};
  s.pairs = [reach](std::uint64_t seed) { return box_pair_sampler(Vector::Zero(1), 2.0 * reach, seed); };
  s.bound = ViolationBound{"exact", 0.0, {{"r", r}}};
  // The invariant law is that of sum_j r^j s_j with i.i.d. signs s_j; the
  // series is truncated once r^j falls below double resolution.
  s.invariant = [r](std::size_t N, std::uint64_t seed) {
    const CounterRng rng(mix_seed(seed, 0xc0a));
    const int terms = static_cast<int>(std::ceil(std::log(1e-17) / std::log(r)));
    Ensemble<Euclidean> out(N, Vector(1));
    for (std::size_t p = 0; p < N; ++p) {
      double x = 0.0;
      for (int j = terms - 1; j >= 0; --j) x = r * x + (rng.uniform(p, static_cast<std::uint64_t>(j)) < 0.5 ? -1.0 : 1.0);
      out[p][0] = x;
    }
    return out;
  };
  s.known_rate = r;
  return s;
}

// ---------------------------------------------------------------------------
// Randomized Kaczmarz

/// Cyclic-free randomized projections onto the hyperplanes a_j'x = b_j.
///
/// With consistent = true the system must be solvable; the least-squares
/// solution is then recorded as the limit point (the unique limit when A has
/// full column rank). Inconsistent systems have no closed-form ground truth.
inline Scenario<Euclidean> scenario_kaczmarz(const Matrix& A, const Vector& b, bool consistent) {
  detail::require(A.rows() >= 1 && A.cols() >= 1, "system matrix must be nonempty");
  detail::require(b.size() == A.rows(), "right-hand side length must equal the number of rows");
  std::vector<Operator<Euclidean>> ops;
  for (Eigen::Index j = 0; j < A.rows(); ++j) {
    if (!(A.row(j).squaredNorm() > 0.0)) throw InputError("row " + std::to_string(j) + " of A is zero");
    ops.push_back(hyperplane_projector(A.row(j).transpose(), b[j]));
  }
  const Vector ls = A.completeOrthogonalDecomposition().solve(b);
  const double residual = (A * ls - b).norm();
  if (consistent && residual > 1e-9 * (1.0 + b.norm()))
    throw InputError("system declared consistent has least-squares residual " + std::to_string(residual));
  const double scale = 1.0 + ls.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
  Scenario<Euclidean> s{consistent ? "kaczmarz_consistent" : "kaczmarz_inconsistent",
                        OperatorFamily<Euclidean>(std::move(ops)),
                        uniform_box_ensemble(ls, scale), 0.5};
  s.pairs = [ls, scale](std::uint64_t seed) { return box_pair_sampler(ls, 2.0 * scale, seed); };
  s.bound = ViolationBound{"exact", 0.0, {}};
  if (consistent) {
    s.limit_point = ls;
    s.error_to_truth = [ls](const Vector& x) { return (x - ls).norm(); };
  } else if (residual <= 1e-9 * (1.0 + b.norm())) {
    s.warnings.push_back("system declared inconsistent is solvable");
  }
  return s;
}

/// Right-hand side b = A x*, shifted by `perturbation` times a random unit
/// vector when inconsistent.
inline Vector kaczmarz_rhs(const Matrix& A, const Vector& x_star, bool consistent, double perturbation,
                           std::uint64_t seed) {
  detail::require(A.cols() == x_star.size(), "solution dimension must equal the number of columns");
  Vector b = A * x_star;
  if (!consistent) {
    const CounterRng rng(mix_seed(seed, 0x6ac2));
    Vector e(b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j) e[j] = 2.0 * rng.uniform(0, static_cast<std::uint64_t>(j)) - 1.0;
    b += perturbation * e / std::max(e.norm(), 1e-300);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Stochastic gradient descent with linear noise

/// Gradient steps for f_i(x) = f(x) + <zeta_i, x>, uniform over the atoms.
inline Scenario<Euclidean> scenario_sgd_linear_noise(const SmoothTerm& f, const std::vector<Vector>& noise_atoms,
                                                     double t) {
  detail::require(!noise_atoms.empty(), "sgd scenario needs at least one noise atom");
  detail::require(t > 0.0, "step size must be positive");
  const auto dim = static_cast<std::size_t>(noise_atoms.front().size());
  detail::require(dim >= 1, "noise atoms must be nonempty vectors");
  const Euclidean space(dim);
  std::vector<Operator<Euclidean>> ops;
  for (const auto& zeta : noise_atoms) {
    detail::require(static_cast<std::size_t>(zeta.size()) == dim, "noise atom dimension mismatch");
    ops.push_back(forward_backward(space, ProxTerm::zero(), f.with_linear_noise(zeta), t));
  }
  Scenario<Euclidean> s{"sgd_linear_noise", OperatorFamily<Euclidean>(std::move(ops)),
                        uniform_box_ensemble(Vector::Zero(static_cast<Eigen::Index>(dim)), 5.0), 2.0 / 3.0};
  s.pairs = [dim](std::uint64_t seed) {
    return box_pair_sampler(Vector::Zero(static_cast<Eigen::Index>(dim)), 5.0, seed);
  };
  const double L = f.lipschitz;
  s.bound = ViolationBound{"forward_backward",
                           fb_violation_bound(t, L, f.tau, 0.0),
                           {{"t", t}, {"L", L}, {"tau_f", f.tau}, {"tau_g", 0.0}}};
  if (f.tau < 0.0 && t > std::abs(f.tau) / (L * L))
    s.warnings.push_back("step t = " + std::to_string(t) + " exceeds the window |tau_f|/L^2 = " +
                         std::to_string(std::abs(f.tau) / (L * L)));
  return s;
}

// ---------------------------------------------------------------------------
// Douglas-Rachford on two parallel lines

/// Lines y = 0 and y = gap in R^2. Operator i is Douglas-Rachford with
/// f = (weight/2) dist^2(., line_i) and g the indicator of the other line.
/// Each map contracts the y-coordinate with factor weight/(1+weight) toward a
/// different fixed point, so the chain has a nondegenerate invariant measure.
inline Scenario<Euclidean> scenario_dr_parallel_lines(double gap, double weight) {
  detail::require(gap > 0.0 && weight > 0.0, "parallel lines need gap > 0 and weight > 0");
  const Euclidean R2(2);
  const Vector normal = Vector::Unit(2, 1);
  auto line = [normal](double c) { return [normal, c](const Vector& x) { return project_hyperplane(normal, c, x); }; };
  std::vector<Operator<Euclidean>> ops;
  ops.push_back(douglas_rachford(R2, ProxTerm::squared_distance(line(0.0), weight), ProxTerm::indicator(line(gap))));
  ops.push_back(douglas_rachford(R2, ProxTerm::squared_distance(line(gap), weight), ProxTerm::indicator(line(0.0))));
  const Vector mid = Vector::Unit(2, 1) * (0.5 * gap);
  Scenario<Euclidean> s{"dr_parallel_lines", OperatorFamily<Euclidean>(std::move(ops)),
                        uniform_box_ensemble(mid, 2.0 * gap + 1.0), 0.5};
  s.pairs = [mid, gap](std::uint64_t seed) { return box_pair_sampler(mid, 2.0 * gap + 1.0, seed); };
  s.bound = ViolationBound{"douglas_rachford", dr_violation_bound(0.0, 0.0), {{"tau_f", 0.0}, {"tau_g", 0.0}}};
  s.known_rate = weight / (1.0 + weight);
  return s;
}

// ---------------------------------------------------------------------------
// Phase retrieval with random masks

/// Distance modulo a global phase: min over theta of ||z - e^{i theta} w||.
inline double phase_aligned_distance(const ComplexVector& z, const ComplexVector& w) {
  detail::require(z.size() == w.size(), "signals differ in length");
  const double v = z.squaredNorm() + w.squaredNorm() - 2.0 * std::abs(w.dot(z));
  return std::sqrt(std::max(0.0, v));
}

struct PhaseRetrievalInstance {
  ComplexVector truth;                 // rho*, zero outside the support
  std::size_t support = 0;             // rho* lives on the first `support` entries
  std::vector<ComplexVector> masks;    // unit-modulus diagonal masks
  std::vector<Vector> magnitudes;      // |DFT(mask . rho*)|
};

inline PhaseRetrievalInstance phase_retrieval_instance(std::size_t n, std::size_t n_masks, std::uint64_t seed) {
  detail::require(n >= 2 && n <= 256, "phase retrieval signal length must lie in 2..256");
  detail::require(n_masks >= 1, "phase retrieval needs at least one mask");
  const CounterRng rng(mix_seed(seed, 0x9a5e));
  PhaseRetrievalInstance inst;
  inst.support = (n + 1) / 2;
  inst.truth = ComplexVector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < inst.support; ++j)
    inst.truth[static_cast<Eigen::Index>(j)] = {2.0 * rng.uniform(0, j, 0) - 1.0, 2.0 * rng.uniform(0, j, 1) - 1.0};
  for (std::size_t m = 0; m < n_masks; ++m) {
    ComplexVector mask(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j)
      mask[static_cast<Eigen::Index>(j)] = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform(1 + m, j));
    inst.magnitudes.push_back(dft(mask.cwiseProduct(inst.truth)).cwiseAbs());
    inst.masks.push_back(std::move(mask));
  }
  return inst;
}

/// Zeroes the packed signal outside the first `support` complex entries.
inline Vector project_support(std::size_t support, const Vector& x) {
  Vector y = x;
  for (Eigen::Index i = 2 * static_cast<Eigen::Index>(support); i < y.size(); ++i) y[i] = 0.0;
  return y;
}

/// Douglas-Rachford with f = lambda/(2(1-lambda)) dist^2(., C0) for the
/// support set C0 and g the indicator of the magnitude set of mask j.
/// With use_support = false, C0 is the whole space and f vanishes.
inline Scenario<Euclidean> scenario_phase_retrieval(std::size_t n, std::size_t n_masks, std::uint64_t seed,
                                                    double lambda = 0.5, bool use_support = true,
                                                    double initial_spread = 0.1) {
  detail::require(lambda > 0.0 && lambda < 1.0, "phase retrieval relaxation lambda must lie in (0, 1)");
  auto inst = phase_retrieval_instance(n, n_masks, seed);
  const Euclidean space(2 * n);
  const std::size_t support = use_support ? inst.support : n;
  const ProxTerm f = ProxTerm::squared_distance([support](const Vector& x) { return project_support(support, x); },
                                                lambda / (1.0 - lambda));
  std::vector<Operator<Euclidean>> ops;
  std::vector<std::function<Vector(const Vector&)>> projs;
  for (std::size_t m = 0; m < n_masks; ++m) {
    const auto proj = fourier_magnitude_projector(inst.masks[m], inst.magnitudes[m]);
    projs.push_back(proj.map);
    ops.push_back(douglas_rachford(Operator<Euclidean>{space, f.resolvent, "J_f"}, proj));
  }
  const Vector truth = to_real(inst.truth);
  const double scale = truth.cwiseAbs().maxCoeff();
  Scenario<Euclidean> s{"phase_retrieval", OperatorFamily<Euclidean>(std::move(ops)),
                        uniform_box_ensemble(truth, initial_spread * scale), 0.5};
  s.pairs = [truth, initial_spread, scale](std::uint64_t seed) {
    return box_pair_sampler(truth, initial_spread * scale, seed);
  };
  s.estimated_bound = [projs = std::move(projs)](const PairSampler<Euclidean>& sampler, std::size_t n_pairs,
                                                 unsigned workers) {
    double tau_g = 0.0;
    for (const auto& P : projs) tau_g = std::max(tau_g, check_submonotone(P, sampler, n_pairs, workers));
    return ViolationBound{"douglas_rachford", dr_violation_bound(0.0, tau_g), {{"tau_f", 0.0}, {"tau_g", tau_g}}};
  };
  s.limit_point = truth;
  s.error_to_truth = [t = inst.truth](const Vector& x) { return phase_aligned_distance(to_complex(x), t); };
  return s;
}

// ---------------------------------------------------------------------------
// Frechet mean on a spider

/// Minimizer of sum_i d^2(x, a_i). On leg l the objective is a quadratic in
/// the radius with stationary point (sum_on r_i - sum_off r_i) / m; at most
/// one leg has a positive stationary point, otherwise the mean is the origin.
inline SpiderPoint spider_frechet_mean(const Spider& space, const std::vector<SpiderPoint>& anchors) {
  detail::require(!anchors.empty(), "Frechet mean needs at least one anchor");
  double total = 0.0;
  std::vector<double> on(static_cast<std::size_t>(space.legs), 0.0);
  for (const auto& a : anchors) {
    space.validate(a);
    total += a.radius;
    if (!a.is_origin()) on[static_cast<std::size_t>(a.leg)] += a.radius;
  }
  const double m = static_cast<double>(anchors.size());
  for (int l = 0; l < space.legs; ++l) {
    const double r = (2.0 * on[static_cast<std::size_t>(l)] - total) / m;
    if (r > 0.0) return SpiderPoint(l, r);
  }
  return SpiderPoint{};
}

/// Stochastic proximal point: prox of 1/2 d^2(., a_i) with fixed lambda,
/// uniformly over the anchors.
inline Scenario<Spider> scenario_spider_frechet(const Spider& space, const std::vector<SpiderPoint>& anchors,
                                                double lambda) {
  detail::require(!anchors.empty(), "spider Frechet scenario needs at least one anchor");
  detail::require(lambda > 0.0, "prox parameter must be positive");
  std::vector<Operator<Spider>> ops;
  double reach = 0.0;
  for (const auto& a : anchors) {
    ops.push_back(spider_prox_squared_distance(space, a, lambda));
    reach = std::max(reach, a.radius);
  }
  reach = std::max(reach, 1.0);
  Scenario<Spider> s{"spider_frechet", OperatorFamily<Spider>(std::move(ops)),
                     uniform_spider_ensemble(space.legs, 2.0 * reach), 0.5};
  s.pairs = [space, reach](std::uint64_t seed) { return spider_pair_sampler(space, 2.0 * reach, seed); };
  s.bound = ViolationBound{"exact", 0.0, {}};
  const SpiderPoint mean = spider_frechet_mean(space, anchors);
  s.limit_point = mean;
  s.error_to_truth = [space, mean](const SpiderPoint& x) { return space.distance(x, mean); };
  return s;
}

/// Comparison mode: the same proximal chain with lambda_k = lambda0 / (k + 1).
/// Returns the ensemble after K steps; particles use the engine's streams.
inline Ensemble<Spider> spider_frechet_diminishing(const Spider& space, const std::vector<SpiderPoint>& anchors,
                                                   double lambda0, const Ensemble<Spider>& initial, std::size_t K,
                                                   std::uint64_t seed) {
  detail::require(!anchors.empty() && lambda0 > 0.0, "diminishing mode needs anchors and lambda0 > 0");
  const CounterRng rng(seed);
  const OperatorFamily<Spider> index_family(std::vector<Operator<Spider>>(anchors.size(), identity_operator(space)));
  Ensemble<Spider> out = initial;
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t i = index_family.sample(rng.uniform(p, k));
      const double lam = lambda0 / static_cast<double>(k + 1);
      out[p] = geodesic_point(space, out[p], anchors[i], lam / (1.0 + lam));
    }
  }
  return out;
}

} // namespace rfi
