#include <gtest/gtest.h>

#include <cmath>

#include "rfi/analysis.hpp"
#include "support.hpp"

using namespace rfi;
using rfi::testing::Gen;

namespace {

std::vector<double> geometric(double beta, double c, std::size_t n) {
  std::vector<double> d(n);
  for (std::size_t k = 0; k < n; ++k) d[k] = beta * std::pow(c, static_cast<double>(k));
  return d;
}

} // namespace

TEST(QLinear, GeometricSeries) {
  const auto fit = fit_qlinear(geometric(1.0, 0.5, 30), {0, 30});
  EXPECT_NEAR(fit.c, 0.5, 1e-12);
  EXPECT_NEAR(fit.geometric_mean, 0.5, 1e-12);
  EXPECT_TRUE(fit.linear);
}

TEST(QLinear, ConstantSeriesIsNotLinear) {
  const auto fit = fit_qlinear(std::vector<double>(10, 2.0), {0, 10});
  EXPECT_EQ(fit.c, 1.0);
  EXPECT_FALSE(fit.linear);
}

TEST(QLinear, ZerosTerminateWindow) {
  const std::vector<double> d{1.0, 0.5, 0.25, 0.0, 7.0};
  const auto fit = fit_qlinear(d, {0, 5});
  EXPECT_EQ(fit.window.end, 3u);
  EXPECT_DOUBLE_EQ(fit.c, 0.5);
  EXPECT_THROW(fit_qlinear(std::vector<double>{1.0, 0.0, 1.0}, {0, 3}), InputError);
  EXPECT_THROW(fit_qlinear(std::vector<double>{1.0, 0.5}, {1, 2}), InputError);
}

TEST(RLinear, RecoversExactGeometricParameters) {
  const auto fit = fit_rlinear(geometric(3.0, 0.8, 40), {0, 40});
  EXPECT_NEAR(fit.beta, 3.0, 1e-10);
  EXPECT_NEAR(fit.c, 0.8, 1e-10);
  EXPECT_LT(fit.residual, 1e-12);
  EXPECT_FALSE(fit.nonlinear);
}

TEST(RLinear, NonMonotoneRatiosStillRLinear) {
  auto d = geometric(1.0, 0.9, 100);
  for (std::size_t k = 1; k < d.size(); k += 2) d[k] *= 2.0;
  const auto r = fit_rlinear(d, {0, 100});
  EXPECT_NEAR(r.c, 0.9, 1e-3);
  EXPECT_FALSE(r.nonlinear);
  EXPECT_GT(fit_qlinear(d, {0, 100}).c, 1.0); // not Q-linear
}

TEST(RLinear, SublinearSeriesIsFlagged) {
  std::vector<double> d(1000);
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = 1.0 / static_cast<double>(k + 1);
  const auto short_fit = fit_rlinear(d, {0, 100});
  const auto long_fit = fit_rlinear(d, {0, 1000});
  EXPECT_TRUE(short_fit.nonlinear);
  EXPECT_TRUE(long_fit.nonlinear);
  EXPECT_GT(long_fit.c, short_fit.c);
}

TEST(ThetaLinear, Substitutions) {
  EXPECT_NEAR(theta_linear(0.0, 1.0, std::sqrt(2.0)), 0.5, 1e-15);
  EXPECT_NEAR(theta_linear(0.0, 2.0, std::sqrt(2.0)), 0.0, 1e-15);
  EXPECT_NEAR(theta_linear(0.02, 0.5, 1.0), 0.52, 1e-15);
}

TEST(ThetaLinear, ErrorNamesViolatedBound) {
  try {
    theta_linear(0.0, 1.0, 0.5);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("lower bound"), std::string::npos);
  }
  try {
    theta_linear(0.5, 1.0, 2.0); // upper sqrt(1/0.5) = 1.414
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("upper bound"), std::string::npos);
  }
}

TEST(RateBound, Substitutions) {
  EXPECT_NEAR(rate_bound_from_theorem(0.5, 0.0, std::sqrt(2.0)), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(rate_bound_from_theorem(2.0 / 3.0, 0.0, 1.0), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(rate_bound_from_theorem(0.5, 0.0, 1.0), 0.0, 1e-15);
  EXPECT_THROW(rate_bound_from_theorem(0.5, 0.0, 0.9), InputError);
  EXPECT_THROW(rate_bound_from_theorem(0.5, 0.25, 2.0), InputError); // upper bound is exclusive
  EXPECT_THROW(rate_bound_from_theorem(1.0, 0.0, 1.0), InputError);
}

TEST(Property, RateSquaredEqualsGamma) {
  Gen g(51);
  for (int i = 0; i < 1000; ++i) {
    const double alpha = g.uniform(0.01, 0.99);
    const double eps = g.uniform() < 0.2 ? 0.0 : g.uniform(0.0, 0.5);
    const double tau = (1.0 - alpha) / alpha;
    const double lo = std::sqrt(tau / (1.0 + eps));
    const double hi = eps > 0.0 ? std::sqrt(tau / eps) : 10.0 * lo;
    const double r = lo + (hi - lo) * g.uniform(0.0, 0.999);
    const double c = rate_bound_from_theorem(alpha, eps, r);
    ASSERT_NEAR(c * c, theta_linear(eps, tau, r), 1e-12);
    ASSERT_LT(c, 1.0);
  }
}

namespace {

std::vector<std::pair<double, double>> tabulate(double (*theta)(double), std::vector<double> ts) {
  std::vector<std::pair<double, double>> t;
  for (double x : ts) t.emplace_back(x, theta(x));
  return t;
}

std::vector<double> linear_grid(double hi, int n) {
  std::vector<double> ts;
  for (int i = 0; i <= n; ++i) ts.push_back(hi * i / n);
  return ts;
}

} // namespace

TEST(ThetaAdmissible, GeometricGaugeIsAdmissible) {
  const auto res = check_theta_admissible(tabulate([](double t) { return 0.5 * t; }, linear_grid(1.0, 1000)));
  EXPECT_TRUE(res.zero_at_origin);
  EXPECT_TRUE(res.below_identity);
  EXPECT_EQ(res.verdict, Verdict::admissible);
}

TEST(ThetaAdmissible, IdentityViolatesStrictInequality) {
  const auto res = check_theta_admissible(tabulate([](double t) { return t; }, linear_grid(1.0, 10)));
  EXPECT_FALSE(res.below_identity);
  EXPECT_EQ(res.verdict, Verdict::inadmissible);
}

TEST(ThetaAdmissible, HarmonicTailIsInadmissible) {
  const auto res = check_theta_admissible(tabulate([](double t) { return t / (1.0 + t); }, linear_grid(1.0, 10000)));
  EXPECT_TRUE(res.zero_at_origin);
  EXPECT_TRUE(res.below_identity);
  EXPECT_EQ(res.summable, Verdict::inadmissible);
  EXPECT_EQ(res.verdict, Verdict::inadmissible);
}

TEST(ThetaAdmissible, SlowSummableTailIsInconclusiveWithinBudget) {
  // iterates decay like j^{-1.2}: summable, but too slowly to tell from 2000 terms
  std::vector<double> ts{0.0};
  for (int i = 0; i <= 400; ++i) ts.push_back(std::pow(10.0, -12.0 + 12.0 * i / 400));
  const auto res = check_theta_admissible(
      tabulate([](double t) { return t - std::pow(t, 1.0 + 1.0 / 1.2) / 1.2; }, ts), {2000, 1e-12});
  EXPECT_EQ(res.verdict, Verdict::inconclusive);
}

TEST(ThetaAdmissible, NonzeroAtOriginFails) {
  const auto res = check_theta_admissible({{0.0, 0.1}, {1.0, 0.5}});
  EXPECT_FALSE(res.zero_at_origin);
  EXPECT_EQ(res.verdict, Verdict::inadmissible);
}

TEST(ThetaAdmissible, MalformedTables) {
  EXPECT_THROW(check_theta_admissible({{0.0, 0.0}}), InputError);
  EXPECT_THROW(check_theta_admissible({{0.0, 0.0}, {1.0, 0.5}, {0.5, 0.2}}), InputError);
  EXPECT_THROW(check_theta_admissible({{0.1, 0.0}, {1.0, 0.5}}), InputError);
  EXPECT_THROW(check_theta_admissible({{0.0, 0.0}, {1.0, std::nan("")}}), InputError);
}

TEST(Subregularity, ExactLinearRelation) {
  const std::vector<double> psi{0.5, 1.0, 2.0, 0.0}, dist{1.0, 2.0, 4.0, 3.0};
  const auto est = estimate_subregularity(psi, dist);
  EXPECT_DOUBLE_EQ(est.r_hat, 2.0);
  EXPECT_DOUBLE_EQ(est.ls_slope, 2.0);
  EXPECT_EQ(est.n_used, 3u);
  EXPECT_EQ(est.n_excluded, 1u);
}

TEST(Subregularity, ScaleCovariant) {
  Gen g(52);
  std::vector<double> psi(50), dist(50);
  for (int i = 0; i < 50; ++i) {
    psi[i] = g.uniform(0.1, 2.0);
    dist[i] = g.uniform(0.0, 3.0);
  }
  const double r = estimate_subregularity(psi, dist).r_hat;
  for (double s : {0.25, 3.0, 1e3}) {
    auto scaled = psi;
    for (auto& v : scaled) v *= s;
    EXPECT_DOUBLE_EQ(estimate_subregularity(scaled, dist).r_hat, r / s);
  }
}

TEST(Subregularity, RejectsEmptyOrAllZero) {
  EXPECT_THROW(estimate_subregularity({}, {}), InputError);
  EXPECT_THROW(estimate_subregularity({0.0, 0.0}, {1.0, 1.0}), InputError);
  EXPECT_THROW(estimate_subregularity({1.0}, {1.0, 2.0}), InputError);
}

TEST(HoodConstant, MinimumRatio) {
  EXPECT_DOUBLE_EQ(estimate_hood_constant({1.0, 3.0, 0.5}, {2.0, 3.0, 0.0}), 0.5);
  EXPECT_THROW(estimate_hood_constant({1.0}, {0.0}), InputError);
}

TEST(RateReport, GeometricSeriesIsLinear) {
  std::vector<std::pair<std::size_t, double>> s;
  for (std::size_t k = 0; k <= 40; ++k) s.emplace_back(k, 4.0 * std::pow(0.5, static_cast<double>(k)));
  const auto rep = analyze_rates(s, 1e-9);
  EXPECT_EQ(rep.status, RateStatus::linear);
  EXPECT_NEAR(rep.r_rate->c, 0.5, 1e-10);
  EXPECT_NEAR(rep.q_rate->c, 0.5, 1e-10);
  // 4 * 0.5^k exceeds 1e-8 up to k = 28: the first 20% of those 29 points are skipped
  EXPECT_EQ(rep.fit_window.begin, 5u);
  EXPECT_EQ(rep.fit_window.end, 29u);
  EXPECT_LE(s[rep.fit_window.end - 1].second, 4.0 * std::pow(0.5, 26.0));
}

TEST(RateReport, RecordSpacingIsConvertedToPerStepRate) {
  std::vector<std::pair<std::size_t, double>> s;
  for (std::size_t k = 0; k <= 60; k += 3) s.emplace_back(k, std::pow(0.8, static_cast<double>(k)));
  const auto rep = analyze_rates(s, 0.0);
  EXPECT_NEAR(rep.r_rate->c, 0.8, 1e-10);
}

TEST(RateReport, SeriesAtFloorFromFirstStep) {
  const std::vector<std::pair<std::size_t, double>> s{{0, 3.0}, {1, 0.01}, {2, 0.012}, {3, 0.009}, {4, 0.011}};
  const auto rep = analyze_rates(s, 0.01, {0.0, 10.0});
  EXPECT_EQ(rep.status, RateStatus::converged_within_floor);
  EXPECT_FALSE(rep.r_rate.has_value());
}
