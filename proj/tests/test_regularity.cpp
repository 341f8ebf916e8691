#include <gtest/gtest.h>

#include <cmath>

#include "rfi/regularity.hpp"
#include "support.hpp"

using namespace rfi;
using rfi::testing::Gen;

namespace {

OperatorFamily<Euclidean> affine_pair(double r) {
  const Euclidean R1(1);
  return OperatorFamily<Euclidean>(
      {Operator<Euclidean>{R1, [r](const Vector& x) -> Vector { return r * x.array() + 1.0; }},
       Operator<Euclidean>{R1, [r](const Vector& x) -> Vector { return r * x.array() - 1.0; }}});
}

} // namespace

TEST(TransportDiscrepancy, VanishesForIdentity) {
  const Euclidean R2(2);
  const Vector x = Vector::Ones(2), y = Vector::Zero(2);
  EXPECT_NEAR(transport_discrepancy(R2, x, y, x, y), 0.0, 1e-15);
}

TEST(Property, SixTermFormEqualsDisplacementForm) {
  Gen g(31);
  const Euclidean R3(3);
  for (int i = 0; i < 10000; ++i) {
    const Vector x = g.vector(3, 2.0), x0 = g.vector(3, 2.0), fx = g.vector(3, 2.0), fx0 = g.vector(3, 2.0);
    const double six = transport_discrepancy(R3, x, x0, fx, fx0);
    const double disp = displacement_discrepancy(x, x0, fx, fx0);
    ASSERT_NEAR(six, disp, 1e-10 * std::max(1.0, disp));
  }
}

TEST(Property, SpiderDiscrepancyNonnegativeForProxMaps) {
  Gen g(32);
  const Spider sp(4);
  for (int i = 0; i < 10000; ++i) {
    const auto F = spider_prox_squared_distance(sp, g.spider(4, 2.0), g.uniform(0.01, 3.0));
    const auto x = g.spider(4, 3.0), y = g.spider(4, 3.0);
    ASSERT_GE(transport_discrepancy(sp, x, y, F(x), F(y)), -1e-10);
  }
}

TEST(Violation, ProjectorIsFirmlyNonexpansive) {
  const auto P = hyperplane_projector((Vector(2) << 1.0, 2.0).finished(), 0.5);
  const auto rep = estimate_violation(P, 0.5, box_pair_sampler(Vector::Zero(2), 3.0, 1), 5000);
  EXPECT_LE(rep.epsilon_hat, 1e-12);
  EXPECT_EQ(rep.n_pairs, 5000u);
  EXPECT_TRUE(rep.worst_pair.has_value());
  EXPECT_NE(rep.region.find("box"), std::string::npos);
}

// F = 2 Id: d^2(Fx,Fy) = 4 d^2, psi = d^2, so at alpha = 1/2 eps = 4 for every pair.
TEST(Violation, ScalingMapHasExactViolation) {
  const Euclidean R2(2);
  const Operator<Euclidean> F{R2, [](const Vector& x) -> Vector { return 2.0 * x; }};
  const auto rep = estimate_violation(F, 0.5, box_pair_sampler(Vector::Zero(2), 1.0, 2), 1000);
  EXPECT_NEAR(rep.epsilon_hat, 4.0, 1e-12);
}

TEST(Violation, RejectsAlphaOutsideOpenInterval) {
  const auto P = identity_operator(Euclidean(1));
  const auto s = box_pair_sampler(Vector::Zero(1), 1.0, 3);
  EXPECT_THROW(estimate_violation(P, 0.0, s, 10), InputError);
  EXPECT_THROW(estimate_violation(P, 1.0, s, 10), InputError);
  EXPECT_THROW(estimate_violation(P, 0.5, s, 0), InputError);
}

// The reported value is the maximum of the per-pair values, recomputed here by a plain loop.
TEST(Violation, EqualsMaximumOfPerPairValues) {
  const Euclidean R2(2);
  const Operator<Euclidean> F{R2, [](const Vector& x) -> Vector {
                                return (Vector(2) << std::sin(3.0 * x[0]) + x[1], 1.3 * x[0]).finished();
                              }};
  const auto sampler = box_pair_sampler(Vector::Zero(2), 2.0, 4);
  const double alpha = 0.6, kappa = (1.0 - alpha) / alpha;
  double best = -1e300;
  for (std::uint64_t k = 0; k < 2000; ++k) {
    const auto [x, y] = sampler(k);
    const Vector fx = F(x), fy = F(y);
    const double v = ((fx - fy).squaredNorm() + kappa * ((x - fx) - (y - fy)).squaredNorm()) / (x - y).squaredNorm();
    best = std::max(best, v - 1.0);
  }
  EXPECT_NEAR(estimate_violation(F, alpha, sampler, 2000).epsilon_hat, std::max(0.0, best), 1e-12);
}

TEST(Violation, PartitionIndependent) {
  const Euclidean R2(2);
  const Operator<Euclidean> F{R2, [](const Vector& x) -> Vector { return (Vector(2) << x[1], -1.5 * x[0]).finished(); }};
  const auto sampler = box_pair_sampler(Vector::Zero(2), 2.0, 5);
  const auto a = estimate_violation(F, 0.5, sampler, 3001, 1);
  const auto b = estimate_violation(F, 0.5, sampler, 3001, 4);
  EXPECT_EQ(a.epsilon_hat, b.epsilon_hat);
  EXPECT_EQ(a.worst_pair->first, b.worst_pair->first);
  EXPECT_EQ(a.worst_pair->second, b.worst_pair->second);
}

TEST(Violation, CoincidentPairsAreSkipped) {
  const Euclidean R1(1);
  const PairSampler<Euclidean> same{[](std::uint64_t) { return std::pair{Vector::Ones(1).eval(), Vector::Ones(1).eval()}; },
                                    "diagonal"};
  const auto rep = estimate_violation(identity_operator(R1), 0.5, same, 10);
  EXPECT_EQ(rep.n_skipped, 10u);
  EXPECT_FALSE(rep.worst_pair.has_value());
  EXPECT_EQ(rep.epsilon_hat, 0.0);
}

// For x -> r x +- 1: E d^2 = r^2 d^2 and psi = (1-r)^2 d^2, so
// eps(alpha) = max(0, r^2 + ((1-alpha)/alpha)(1-r)^2 - 1) exactly.
TEST(ViolationInExpectation, AffinePairMatchesClosedForm) {
  const double r = 0.5;
  const auto fam = affine_pair(r);
  const auto sampler = box_pair_sampler(Vector::Zero(1), 4.0, 6);
  for (double alpha : {0.05, 0.1, 0.2, 0.5, 0.75, 0.9}) {
    const double kappa = (1.0 - alpha) / alpha;
    const double expected = std::max(0.0, r * r + kappa * (1.0 - r) * (1.0 - r) - 1.0);
    EXPECT_NEAR(estimate_violation_in_expectation(fam, alpha, sampler, 500).epsilon_hat, expected, 1e-10)
        << "alpha " << alpha;
  }
}

TEST(ClosedFormBounds, ForwardBackward) {
  EXPECT_DOUBLE_EQ(fb_violation_bound(0.5, 1.0, -1.0, 0.0), 0.0);
  // (1 + 2*0.1)(1 + 0.1(2*0.5 + 2*0.1*4)) - 1 = 1.2 * 1.18 - 1
  EXPECT_NEAR(fb_violation_bound(0.1, 2.0, 0.5, 0.1), 1.2 * 1.18 - 1.0, 1e-15);
  EXPECT_THROW(fb_violation_bound(0.0, 1.0, 0.0, 0.0), InputError);
}

TEST(ClosedFormBounds, DouglasRachford) {
  EXPECT_DOUBLE_EQ(dr_violation_bound(0.0, 0.0), 0.0);
  EXPECT_NEAR(dr_violation_bound(0.1, 0.2), 0.5 * (1.4 * 1.2 - 1.0), 1e-15);
  EXPECT_DOUBLE_EQ(dr_violation_bound(-0.4, 0.0), 0.0);
}

TEST(Monotonicity, HypomonotoneConstantOfQuadratic) {
  // grad = Q x with eigenvalues {1, -2}: tau = 2, attained along the second axis
  const Matrix Q = (Matrix(2, 2) << 1.0, 0.0, 0.0, -2.0).finished();
  const double tau = check_hypomonotone([Q](const Vector& x) -> Vector { return Q * x; },
                                        box_pair_sampler(Vector::Zero(2), 1.0, 7), 20000);
  EXPECT_LE(tau, 2.0 + 1e-12);
  EXPECT_GE(tau, 1.9);
}

TEST(Monotonicity, ConvexProjectorIsNotSubmonotone) {
  const Vector a = (Vector(3) << 1.0, -1.0, 0.5).finished();
  const double tau = check_submonotone([a](const Vector& x) { return project_hyperplane(a, 0.3, x); },
                                       box_pair_sampler(Vector::Zero(3), 2.0, 8), 5000);
  EXPECT_LE(tau, 1e-12);
}
