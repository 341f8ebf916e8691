#pragma once

// Self-mappings T_i, the finite operator families that drive a random
// function iteration, and the splitting constructions built from them
// (forward-backward, Douglas-Rachford, proximal steps on a spider).

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "rfi/errors.hpp"
#include "rfi/geometry.hpp"

namespace rfi {

using ComplexVector = Eigen::VectorXcd;

/// A deterministic self-mapping on a declared space.
template <GeodesicSpace S>
struct Operator {
  using Point = typename S::Point;
  using Map = std::function<Point(const Point&)>;

  S space;
  Map map;
  std::string name;

  Operator(S s, Map m, std::string n = {}) : space(std::move(s)), map(std::move(m)), name(std::move(n)) {}

  Point operator()(const Point& x) const {
    space.validate(x);
    return map(x);
  }
};

template <GeodesicSpace S>
Operator<S> identity_operator(const S& space) {
  return {space, [](const typename S::Point& x) { return x; }, "identity"};
}

/// Finite indexed family {T_i} with selection probabilities w_i.
template <GeodesicSpace S>
class OperatorFamily {
public:
  using Point = typename S::Point;

  OperatorFamily(std::vector<Operator<S>> ops, std::vector<double> weights)
      : ops_(std::move(ops)), weights_(std::move(weights)) {
    detail::require(!ops_.empty(), "operator family must not be empty");
    detail::require(ops_.size() == weights_.size(), "one weight per operator required");
    for (double w : weights_) detail::require(w >= 0.0 && std::isfinite(w), "weights must be nonnegative");
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    detail::require(std::abs(total - 1.0) <= 1e-12, "weights must sum to 1");
    for (const auto& op : ops_)
      detail::require(op.space == ops_.front().space, "all operators must share one space");
    cumulative_.resize(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
  }

  /// Uniformly weighted family.
  explicit OperatorFamily(std::vector<Operator<S>> ops)
      : OperatorFamily(ops, std::vector<double>(ops.size(), 1.0 / static_cast<double>(ops.size()))) {}

  std::size_t size() const { return ops_.size(); }
  const S& space() const { return ops_.front().space; }
  const Operator<S>& operator[](std::size_t i) const { return ops_[i]; }
  const std::vector<double>& weights() const { return weights_; }

  /// Index i with P(i) = w_i for u ~ U[0, 1).
  std::size_t sample(double u) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
    if (i >= ops_.size()) i = ops_.size() - 1;
    // Zero-weight operators are never selected, even at ties.
    while (weights_[i] == 0.0 && i > 0) --i;
    return i;
  }

  /// Phi(x, i) = T_i x.
  Point apply(const Point& x, std::size_t i) const { return ops_[i](x); }

private:
  std::vector<Operator<S>> ops_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

// ---------------------------------------------------------------------------
// Smooth and proximable terms

/// Differentiable f with L-Lipschitz gradient, hypomonotone with violation tau.
struct SmoothTerm {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  double lipschitz = 1.0;
  double tau = 0.0;

  /// f(x) = 1/2 x'Qx + q'x; L and tau read off the spectrum of Q.
  static SmoothTerm quadratic(const Matrix& Q, const Vector& q) {
    detail::require(Q.rows() == Q.cols() && Q.rows() == q.size(), "quadratic term dimensions mismatch");
    detail::require((Q - Q.transpose()).norm() <= 1e-12 * (1.0 + Q.norm()), "Q must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Q, Eigen::EigenvaluesOnly);
    const Vector ev = eig.eigenvalues();
    SmoothTerm f;
    f.value = [Q, q](const Vector& x) { return 0.5 * x.dot(Q * x) + q.dot(x); };
    f.gradient = [Q, q](const Vector& x) -> Vector { return Q * x + q; };
    f.lipschitz = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    f.tau = -ev.minCoeff();
    return f;
  }

  /// The term f(x) + <zeta, x>: same L and tau, gradient shifted by zeta.
  SmoothTerm with_linear_noise(const Vector& zeta) const {
    SmoothTerm g = *this;
    g.value = [v = value, zeta](const Vector& x) { return v(x) + zeta.dot(x); };
    g.gradient = [gr = gradient, zeta](const Vector& x) -> Vector { return gr(x) + zeta; };
    return g;
  }
};

/// Single-valued resolvent J_{g,lambda} with submonotonicity violation tau.
struct ProxTerm {
  std::function<Vector(const Vector&)> resolvent;
  double tau = 0.0;
  double lambda = 1.0;

  Vector operator()(const Vector& x) const { return resolvent(x); }

  static ProxTerm zero() {
    return {[](const Vector& x) { return x; }, 0.0, 1.0};
  }

  /// g = ||.||_1; the resolvent is soft-thresholding at level lambda.
  static ProxTerm l1(double lambda) {
    detail::require(lambda > 0.0, "prox parameter must be positive");
    return {[lambda](const Vector& x) -> Vector {
              return x.unaryExpr([lambda](double v) {
                return std::copysign(std::max(std::abs(v) - lambda, 0.0), v);
              });
            },
            0.0, lambda};
  }

  /// Indicator of a set; the resolvent is the supplied (selection of the) projector.
  static ProxTerm indicator(std::function<Vector(const Vector&)> projector, double tau = 0.0) {
    return {std::move(projector), tau, 1.0};
  }

  /// f = (weight/2) dist^2(., C) for convex C with projector P:
  /// J x = x + (weight lambda / (1 + weight lambda)) (P x - x).
  static ProxTerm squared_distance(std::function<Vector(const Vector&)> projector, double weight,
                                   double lambda = 1.0) {
    detail::require(weight >= 0.0 && lambda > 0.0, "squared-distance prox needs weight >= 0, lambda > 0");
    const double s = weight * lambda / (1.0 + weight * lambda);
    return {[projector = std::move(projector), s](const Vector& x) -> Vector {
              return x + s * (projector(x) - x);
            },
            0.0, lambda};
  }
};

// ---------------------------------------------------------------------------
// Elementary operations

template <GeodesicSpace S>
typename S::Point project_point(const S& space, const typename S::Point& c, const typename S::Point& x) {
  space.validate(c);
  space.validate(x);
  return c;
}

/// Projector onto the singleton {c}.
template <GeodesicSpace S>
Operator<S> point_projector(const S& space, typename S::Point c) {
  space.validate(c);
  return {space, [c](const typename S::Point&) { return c; }, "project_point"};
}

inline Vector project_hyperplane(const Vector& a, double b, const Vector& x) {
  detail::require(a.size() == x.size(), "hyperplane normal and point dimensions differ");
  const double nn = a.squaredNorm();
  if (!(nn > 0.0)) throw InputError("hyperplane normal must be nonzero");
  return x - ((a.dot(x) - b) / nn) * a;
}

inline Operator<Euclidean> hyperplane_projector(Vector a, double b) {
  detail::require(a.squaredNorm() > 0.0, "hyperplane normal must be nonzero");
  Euclidean space(static_cast<std::size_t>(a.size()));
  return {space, [a = std::move(a), b](const Vector& x) { return project_hyperplane(a, b, x); },
          "project_hyperplane"};
}

/// Coordinatewise projection of z onto circles of radius m_i.
/// At z_i = 0 the phase is taken to be 1.
inline ComplexVector project_magnitude(const Vector& m, const ComplexVector& z) {
  detail::require(m.size() == z.size(), "magnitude and signal lengths differ");
  ComplexVector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (m[i] < 0.0 || !std::isfinite(m[i])) throw InputError("magnitudes must be nonnegative");
    const double r = std::abs(z[i]);
    out[i] = r > 0.0 ? std::complex<double>(m[i] * z[i].real() / r, m[i] * z[i].imag() / r)
                     : std::complex<double>(m[i], 0.0);
  }
  return out;
}

inline Vector gradient_step(const SmoothTerm& f, double t, const Vector& x) {
  detail::require(t > 0.0, "step size must be positive");
  return x - t * f.gradient(x);
}

/// prox of f(y) = 1/2 y'Qy + q'y: solves (lambda Q + I) y = x - lambda q.
inline Vector prox_quadratic(const Matrix& Q, const Vector& q, double lambda, const Vector& x) {
  detail::require(lambda > 0.0, "prox parameter must be positive");
  detail::require(Q.rows() == Q.cols() && Q.rows() == x.size() && q.size() == x.size(),
                  "prox_quadratic dimensions mismatch");
  if ((Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm())) throw InputError("Q must be symmetric");
  const Matrix A = lambda * Q + Matrix::Identity(Q.rows(), Q.cols());
  const Vector rhs = x - lambda * q;
  const Vector y = A.ldlt().solve(rhs);
  if (!y.allFinite() || (A * y - rhs).norm() > 1e-10 * (1.0 + x.norm()))
    throw InputError("prox system (lambda Q + I) is singular; Q must be PSD");
  return y;
}

inline ProxTerm quadratic_prox(const Matrix& Q, const Vector& q, double lambda) {
  detail::require((Q - Q.transpose()).norm() <= 1e-12 * (1.0 + Q.norm()), "Q must be symmetric");
  return {[Q, q, lambda](const Vector& x) { return prox_quadratic(Q, q, lambda, x); }, 0.0, lambda};
}

/// R = 2 op - Id. Only meaningful in a vector space.
template <GeodesicSpace S>
typename S::Point reflect(const Operator<S>& op, const typename S::Point& x) {
  if constexpr (std::is_same_v<S, Euclidean>) {
    return 2.0 * op(x) - x;
  } else {
    throw UnsupportedError("reflection requires a Euclidean space, got " + describe(op.space));
  }
}

/// x -> J_g(x - t grad f(x)).
inline Operator<Euclidean> forward_backward(const Euclidean& space, ProxTerm g, SmoothTerm f, double t) {
  detail::require(t > 0.0, "step size must be positive");
  return {space,
          [g = std::move(g), f = std::move(f), t](const Vector& x) { return g(gradient_step(f, t, x)); },
          "forward_backward"};
}

/// x -> 1/2 (R_f R_g x + x) for resolvents J_f, J_g.
template <GeodesicSpace S>
Operator<S> douglas_rachford(const Operator<S>& resolvent_f, const Operator<S>& resolvent_g) {
  if constexpr (std::is_same_v<S, Euclidean>) {
    return {resolvent_f.space,
            [jf = resolvent_f, jg = resolvent_g](const Vector& x) -> Vector {
              const Vector rg = 2.0 * jg(x) - x;
              const Vector rf = 2.0 * jf(rg) - rg;
              return 0.5 * (rf + x);
            },
            "douglas_rachford"};
  } else {
    throw UnsupportedError("Douglas-Rachford requires a Euclidean space, got " + describe(resolvent_f.space));
  }
}

inline Operator<Euclidean> douglas_rachford(const Euclidean& space, const ProxTerm& f, const ProxTerm& g) {
  return douglas_rachford(Operator<Euclidean>{space, f.resolvent, "J_f"},
                          Operator<Euclidean>{space, g.resolvent, "J_g"});
}

/// prox of 1/2 d^2(., anchor) with parameter lambda in a Hadamard space:
/// the point at fraction lambda / (1 + lambda) along the geodesic to the anchor.
template <GeodesicSpace S>
Operator<S> prox_squared_distance(const S& space, typename S::Point anchor, double lambda) {
  detail::require(lambda > 0.0, "prox parameter must be positive");
  space.validate(anchor);
  const double t = lambda / (1.0 + lambda);
  return {space,
          [space, anchor = std::move(anchor), t](const typename S::Point& x) {
            return geodesic_point(space, x, anchor, t);
          },
          "prox_squared_distance"};
}

inline Operator<Spider> spider_prox_squared_distance(const Spider& space, SpiderPoint anchor, double lambda) {
  return prox_squared_distance(space, anchor, lambda);
}

// ---------------------------------------------------------------------------
// Fourier magnitude constraints (phase retrieval)
//
// Complex signals in C^n are stored as real vectors in R^{2n} with
// interleaved (re, im) pairs so they live in the Euclidean space.

inline ComplexVector to_complex(const Vector& x) {
  detail::require(x.size() % 2 == 0, "packed complex vector must have even length");
  ComplexVector z(x.size() / 2);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = {x[2 * i], x[2 * i + 1]};
  return z;
}

inline Vector to_real(const ComplexVector& z) {
  Vector x(2 * z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    x[2 * i] = z[i].real();
    x[2 * i + 1] = z[i].imag();
  }
  return x;
}

inline ComplexVector dft(const ComplexVector& z) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(z.data(), z.data() + z.size()), out;
  fft.fwd(out, in);
  return Eigen::Map<ComplexVector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

inline ComplexVector idft(const ComplexVector& z) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(z.data(), z.data() + z.size()), out;
  fft.inv(out, in);
  return Eigen::Map<ComplexVector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

/// Projector onto {rho : |DFT(mask . rho)| = magnitudes} for a unit-modulus mask.
inline Operator<Euclidean> fourier_magnitude_projector(ComplexVector mask, Vector magnitudes) {
  detail::require(mask.size() == magnitudes.size(), "mask and magnitudes lengths differ");
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    detail::require(std::abs(std::abs(mask[i]) - 1.0) <= 1e-12, "mask entries must have unit modulus");
  Euclidean space(static_cast<std::size_t>(2 * mask.size()));
  return {space,
          [mask = std::move(mask), m = std::move(magnitudes)](const Vector& x) -> Vector {
            const ComplexVector z = dft(mask.cwiseProduct(to_complex(x)));
            const ComplexVector y = idft(project_magnitude(m, z));
            return to_real(y.cwiseQuotient(mask));
          },
          "fourier_magnitude_projector"};
}

} // namespace rfi
