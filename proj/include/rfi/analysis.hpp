#pragma once

// Post-processing of distance series: Q-/R-linear rate fits, the linear
// gauge algebra behind the predicted rate, admissibility checks
// for tabulated gauges and estimation of the metric subregularity constant.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rfi/errors.hpp"

namespace rfi {

/// Half-open index range [begin, end) into a series.
struct FitWindow {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
};

namespace detail {

// Clips the window to the series and stops it at the first non-positive value.
inline FitWindow usable_window(const std::vector<double>& series, FitWindow w) {
  w.end = std::min(w.end, series.size());
  for (std::size_t k = w.begin; k < w.end; ++k) {
    if (!(series[k] > 0.0)) {
      w.end = k;
      break;
    }
  }
  if (w.size() < 2) throw InputError("rate fit window needs at least 2 positive values");
  return w;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

inline LineFit fit_log_line(const std::vector<double>& series, FitWindow w) {
  const double n = static_cast<double>(w.size());
  double sk = 0.0, sy = 0.0;
  for (std::size_t k = w.begin; k < w.end; ++k) {
    sk += static_cast<double>(k);
    sy += std::log(series[k]);
  }
  const double mk = sk / n, my = sy / n;
  double skk = 0.0, sky = 0.0;
  for (std::size_t k = w.begin; k < w.end; ++k) {
    const double dk = static_cast<double>(k) - mk;
    skk += dk * dk;
    sky += dk * (std::log(series[k]) - my);
  }
  LineFit f;
  f.slope = sky / skk;
  f.intercept = my - f.slope * mk;
  double ss = 0.0;
  for (std::size_t k = w.begin; k < w.end; ++k) {
    const double r = std::log(series[k]) - (f.intercept + f.slope * static_cast<double>(k));
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / n);
  return f;
}

} // namespace detail

struct QLinearFit {
  double c = 1.0;              // max_k d_{k+1} / d_k over the window
  double geometric_mean = 1.0; // (d_end / d_begin)^{1 / steps}
  bool linear = false;         // c < 1
  FitWindow window;
};

/// Q-rate as the largest one-step ratio in the window.
inline QLinearFit fit_qlinear(const std::vector<double>& series, FitWindow window) {
  const FitWindow w = detail::usable_window(series, window);
  QLinearFit out;
  out.window = w;
  out.c = 0.0;
  for (std::size_t k = w.begin; k + 1 < w.end; ++k) out.c = std::max(out.c, series[k + 1] / series[k]);
  out.geometric_mean =
      std::pow(series[w.end - 1] / series[w.begin], 1.0 / static_cast<double>(w.size() - 1));
  out.linear = out.c < 1.0;
  return out;
}

struct RLinearFit {
  double beta = 0.0;
  double c = 1.0;
  double residual = 0.0; // RMS residual of the log-linear fit
  bool nonlinear = false;
  FitWindow window;
};

/// Least-squares fit of log d_k = log beta + k log c.
///
/// The fit is flagged nonlinear when c >= 1 or when the rate fitted on the
/// second half of the window is markedly slower than on the first half
/// (the signature of sublinear decay such as 1/k).
inline RLinearFit fit_rlinear(const std::vector<double>& series, FitWindow window) {
  const FitWindow w = detail::usable_window(series, window);
  const auto line = detail::fit_log_line(series, w);
  RLinearFit out;
  out.window = w;
  out.c = std::exp(line.slope);
  out.beta = std::exp(line.intercept);
  out.residual = line.rms_residual;
  out.nonlinear = !(out.c < 1.0);
  if (!out.nonlinear && w.size() >= 6) {
    const std::size_t mid = w.begin + w.size() / 2;
    const double c1 = std::exp(detail::fit_log_line(series, {w.begin, mid}).slope);
    const double c2 = std::exp(detail::fit_log_line(series, {mid, w.end}).slope);
    if (c1 < 1.0 && c2 - c1 > 0.5 * (1.0 - c1)) out.nonlinear = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear gauge algebra

namespace detail {
inline constexpr double kEdgeSlack = 1e-12;
}

/// gamma = 1 + eps - tau / r^2 for r in [sqrt(tau/(1+eps)), sqrt(tau/eps)].
inline double theta_linear(double epsilon, double tau, double r) {
  detail::require(epsilon >= 0.0 && tau > 0.0 && r > 0.0, "theta_linear needs eps >= 0, tau > 0, r > 0");
  const double lower = std::sqrt(tau / (1.0 + epsilon));
  if (r < lower * (1.0 - detail::kEdgeSlack))
    throw InputError("r = " + std::to_string(r) + " violates the lower bound r >= sqrt(tau/(1+eps)) = " +
                     std::to_string(lower));
  if (epsilon > 0.0) {
    const double upper = std::sqrt(tau / epsilon);
    if (r > upper * (1.0 + detail::kEdgeSlack))
      throw InputError("r = " + std::to_string(r) + " violates the upper bound r <= sqrt(tau/eps) = " +
                       std::to_string(upper));
  }
  return std::clamp(1.0 + epsilon - tau / (r * r), 0.0, 1.0);
}

/// c = sqrt(1 + eps - (1 - alpha) / (r^2 alpha)) for
/// sqrt((1-alpha)/(alpha(1+eps))) <= r < sqrt((1-alpha)/(alpha eps)).
inline double rate_bound_from_theorem(double alpha, double epsilon, double r) {
  detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  detail::require(epsilon >= 0.0 && r > 0.0, "rate bound needs eps >= 0 and r > 0");
  const double tau = (1.0 - alpha) / alpha;
  const double lower = std::sqrt(tau / (1.0 + epsilon));
  if (r < lower * (1.0 - detail::kEdgeSlack))
    throw InputError("r = " + std::to_string(r) + " violates the lower bound sqrt((1-alpha)/(alpha(1+eps))) = " +
                     std::to_string(lower));
  if (epsilon > 0.0) {
    const double upper = std::sqrt(tau / epsilon);
    if (!(r < upper))
      throw InputError("r = " + std::to_string(r) + " violates the upper bound r < sqrt((1-alpha)/(alpha eps)) = " +
                       std::to_string(upper));
  }
  return std::sqrt(std::max(0.0, 1.0 + epsilon - tau / (r * r)));
}

/// Smallest admissible subregularity constant for (alpha, eps); a constant
/// that holds for r' also holds for every r >= r'.
inline double admissible_subregularity(double alpha, double epsilon, double r) {
  return std::max(r, std::sqrt((1.0 - alpha) / (alpha * (1.0 + epsilon))));
}

// ---------------------------------------------------------------------------
// Tabulated gauge admissibility

enum class Verdict { admissible, inadmissible, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
  case Verdict::admissible: return "admissible";
  case Verdict::inadmissible: return "inadmissible";
  case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct ThetaCheck {
  bool zero_at_origin = false; // theta(0) = 0
  bool below_identity = false; // 0 < theta(t) < t for t > 0
  Verdict summable = Verdict::inconclusive;
  Verdict verdict = Verdict::inconclusive;
  std::size_t iterations = 0;
  double partial_sum = 0.0;
  std::string diagnostics;
};

struct ThetaCheckOptions {
  std::size_t budget = 1'000'000;
  double rel_tol = 1e-12;
};

/// Checks theta(0) = 0, 0 < theta(t) < t and summability of the iterates
/// theta^(j)(t_max), with theta interpolated linearly between table entries.
///
/// Iteration stops once the partial sum stabilizes, the budget is spent, or
/// the iterate falls below the smallest tabulated positive t (beyond which
/// the table carries no information). Without stabilization, the tail is
/// judged by the condensation ratio (2j a_2j) / (j a_j): values near 1 mean
/// harmonic-like decay (divergent), small values a summable tail.
inline ThetaCheck check_theta_admissible(const std::vector<std::pair<double, double>>& table,
                                         ThetaCheckOptions opt = {}) {
  if (table.size() < 2) throw InputError("theta table needs at least 2 rows");
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto [t, th] = table[i];
    if (!std::isfinite(t) || !std::isfinite(th) || t < 0.0) throw InputError("theta table has invalid entries");
    if (i > 0 && !(t > table[i - 1].first)) throw InputError("theta table must be strictly increasing in t");
  }
  if (table.front().first != 0.0) throw InputError("theta table must start at t = 0");

  ThetaCheck out;
  out.zero_at_origin = table.front().second == 0.0;
  out.below_identity = true;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto [t, th] = table[i];
    if (!(th > 0.0 && th < t)) {
      out.below_identity = false;
      out.diagnostics += "condition (ii) fails at t = " + std::to_string(t) + "; ";
    }
  }
  if (!out.zero_at_origin) out.diagnostics += "condition (i) fails: theta(0) != 0; ";

  auto theta = [&](double t) {
    auto it = std::upper_bound(table.begin(), table.end(), t, [](double v, const auto& row) { return v < row.first; });
    if (it == table.end()) return table.back().second;
    if (it == table.begin()) return table.front().second;
    const auto& [t1, y1] = *it;
    const auto& [t0, y0] = *(it - 1);
    return y0 + (y1 - y0) * (t - t0) / (t1 - t0);
  };

  if (out.zero_at_origin && out.below_identity) {
    const double t_min = table[1].first;
    std::vector<double> iterates;
    double t = table.back().first, sum = 0.0;
    bool stabilized = false;
    while (iterates.size() < opt.budget) {
      t = theta(t);
      iterates.push_back(t);
      sum += t;
      if (t <= opt.rel_tol * sum) {
        stabilized = true;
        break;
      }
      if (t < t_min) break;
    }
    out.iterations = iterates.size();
    out.partial_sum = sum;
    if (stabilized) {
      out.summable = Verdict::admissible;
    } else if (iterates.size() >= 8) {
      const std::size_t J = iterates.size(), h = J / 2;
      const double ratio = (static_cast<double>(J) * iterates[J - 1]) / (static_cast<double>(h) * iterates[h - 1]);
      out.diagnostics += "condensation ratio " + std::to_string(ratio) + " after " + std::to_string(J) + " iterates; ";
      if (ratio >= 0.9) out.summable = Verdict::inadmissible;
      else if (ratio <= 0.75) out.summable = Verdict::admissible;
    } else {
      // too few iterates before leaving the table: rely on the one-step ratio
      const double q = iterates.size() >= 2 ? iterates.back() / iterates[iterates.size() - 2] : 1.0;
      if (q < 0.9) out.summable = Verdict::admissible;
    }
    if (out.summable == Verdict::inadmissible) out.diagnostics += "condition (iii) fails: iterates not summable; ";
    if (out.summable == Verdict::inconclusive) out.diagnostics += "condition (iii) inconclusive within budget; ";
  }

  if (!out.zero_at_origin || !out.below_identity) out.verdict = Verdict::inadmissible;
  else out.verdict = out.summable;
  return out;
}

// ---------------------------------------------------------------------------
// Subregularity and rate reports

struct SubregularityEstimate {
  double r_hat = 0.0;       // max distance / psi
  double ls_slope = 0.0;    // least squares through the origin
  std::size_t n_used = 0;
  std::size_t n_excluded = 0; // pairs with psi == 0
};

/// Linear-gauge fit of distance <= r psi over paired samples.
inline SubregularityEstimate estimate_subregularity(const std::vector<double>& psi_values,
                                                    const std::vector<double>& distances) {
  if (psi_values.empty()) throw InputError("subregularity estimate needs at least one sample");
  if (psi_values.size() != distances.size()) throw InputError("psi and distance samples differ in length");
  SubregularityEstimate out;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < psi_values.size(); ++i) {
    const double s = psi_values[i], d = distances[i];
    if (!(s > 0.0)) {
      ++out.n_excluded;
      continue;
    }
    out.r_hat = std::max(out.r_hat, d / s);
    sxy += s * d;
    sxx += s * s;
    ++out.n_used;
  }
  if (out.n_used == 0) throw InputError("all psi samples are zero");
  out.ls_slope = sxy / sxx;
  return out;
}

/// q-hat = min Psi(mu) / W2(mu P, mu) over samples with a positive step.
inline double estimate_hood_constant(const std::vector<double>& psi_values, const std::vector<double>& step_distances) {
  if (psi_values.empty() || psi_values.size() != step_distances.size())
    throw InputError("hood constant needs paired, nonempty samples");
  double q = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < psi_values.size(); ++i)
    if (step_distances[i] > 0.0) q = std::min(q, psi_values[i] / step_distances[i]);
  if (!std::isfinite(q)) throw InputError("hood constant needs a positive step distance");
  return q;
}

enum class RateStatus { linear, nonlinear, converged_within_floor };

inline const char* to_string(RateStatus s) {
  switch (s) {
  case RateStatus::linear: return "linear";
  case RateStatus::nonlinear: return "nonlinear";
  case RateStatus::converged_within_floor: return "converged within floor";
  }
  return "?";
}

struct RateOptions {
  double burn_in_fraction = 0.2; // leading share of the transient excluded
  double floor_multiple = 10.0;  // window ends where d_k <= floor_multiple * floor
};

struct RateReport {
  std::vector<std::pair<std::size_t, double>> series; // (k, d_k)
  std::optional<QLinearFit> q_rate;
  std::optional<RLinearFit> r_rate;
  FitWindow fit_window;
  double residual = 0.0;
  double floor = 0.0;
  RateStatus status = RateStatus::nonlinear;
};

/// Fits rates to a series of distances to the invariant measure. Points at or
/// below floor_multiple * floor are Monte-Carlo noise and end the window.
/// Window indices refer to positions in the series, not step numbers.
inline RateReport analyze_rates(const std::vector<std::pair<std::size_t, double>>& series, double floor,
                                RateOptions opt = {}) {
  RateReport rep;
  rep.series = series;
  rep.floor = floor;
  std::vector<double> d;
  for (const auto& [k, v] : series) {
    if (!(v >= 0.0)) throw InputError("distance series must be nonnegative");
    d.push_back(v);
  }
  // The window is the transient above the floor, minus its leading share.
  std::size_t end = 0;
  while (end < d.size() && d[end] > opt.floor_multiple * floor) ++end;
  const auto begin = static_cast<std::size_t>(std::floor(opt.burn_in_fraction * static_cast<double>(end)));
  rep.fit_window = {begin, end};
  if (rep.fit_window.size() < 2) {
    // Nothing above the noise floor to fit.
    const bool at_floor = !d.empty() && d.back() <= opt.floor_multiple * floor;
    rep.status = at_floor ? RateStatus::converged_within_floor : RateStatus::nonlinear;
    return rep;
  }
  // Step numbers may be spaced by record_every: fit on per-step scale.
  const double spacing = rep.fit_window.size() >= 2
                             ? static_cast<double>(series[begin + 1].first - series[begin].first)
                             : 1.0;
  rep.q_rate = fit_qlinear(d, rep.fit_window);
  rep.r_rate = fit_rlinear(d, rep.fit_window);
  if (spacing > 1.0) {
    rep.q_rate->c = std::pow(rep.q_rate->c, 1.0 / spacing);
    rep.q_rate->geometric_mean = std::pow(rep.q_rate->geometric_mean, 1.0 / spacing);
    rep.r_rate->c = std::pow(rep.r_rate->c, 1.0 / spacing);
  }
  rep.residual = rep.r_rate->residual;
  rep.status = rep.r_rate->nonlinear ? RateStatus::nonlinear : RateStatus::linear;
  return rep;
}

} // namespace rfi
