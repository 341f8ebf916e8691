#pragma once

// Batch experiments: run a configured scenario, compute diagnostics and
// write manifest.json, series.csv, ensembles/*.csv and report.json.
//
// Seeds for every auxiliary draw (initial ensemble, reference burn-in,
// floor replicates, one-step pushes, sampled pairs) are derived from the
// main seed, so the CSV outputs depend on the configuration alone.

#include <Eigen/Core>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rfi/analysis.hpp"
#include "rfi/config.hpp"
#include "rfi/engine.hpp"
#include "rfi/io.hpp"
#include "rfi/regularity.hpp"
#include "rfi/scenarios.hpp"
#include "rfi/transport.hpp"
#include "rfi/version.hpp"

namespace rfi {

namespace fs = std::filesystem;
using io::Json;

/// Command-line values that take precedence over the configuration.
struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::size_t> record_every;
};

inline void apply_overrides(ExperimentConfig& cfg, const Overrides& ov) {
  if (ov.out) cfg.output = *ov.out;
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.workers) {
    if (*ov.workers < 1) throw InputError("--workers must be >= 1");
    cfg.workers = *ov.workers;
  }
  if (ov.record_every) {
    if (*ov.record_every < 1) throw InputError("--record-every must be >= 1");
    cfg.record_every = *ov.record_every;
  }
}

inline Json overrides_json(const Overrides& ov) {
  Json o = Json::object();
  if (ov.out) o["out"] = *ov.out;
  if (ov.seed) o["seed"] = *ov.seed;
  if (ov.workers) o["workers"] = *ov.workers;
  if (ov.record_every) o["record_every"] = *ov.record_every;
  return o;
}

// Salts for seeds derived from the main seed.
namespace salt {
inline constexpr std::uint64_t initial = 1;
inline constexpr std::uint64_t reference_initial = 2;
inline constexpr std::uint64_t reference_chain = 3;
inline constexpr std::uint64_t floor = 4;
inline constexpr std::uint64_t push = 5;
inline constexpr std::uint64_t pairs = 6;
} // namespace salt

/// Burn-in length of the auto-generated reference run.
inline std::size_t reference_burn_in(std::size_t K, std::size_t factor) { return std::max<std::size_t>(factor * K, 50); }

inline Json point_json(const Vector& x) { return io::to_json(x); }
inline Json point_json(const SpiderPoint& x) { return io::to_json(x); }

// ---------------------------------------------------------------------------
// Regularity

template <GeodesicSpace S>
PairSampler<S> region_sampler(const Scenario<S>& sc, const ExperimentConfig& cfg) {
  const auto seed = mix_seed(cfg.seed, salt::pairs);
  if constexpr (std::is_same_v<S, Euclidean>) {
    if (cfg.region_center) return box_pair_sampler(*cfg.region_center, *cfg.region_half_width, seed);
  } else {
    if (cfg.region_max_radius) return spider_pair_sampler(sc.space(), *cfg.region_max_radius, seed);
  }
  return sc.pairs(seed);
}

template <GeodesicSpace S>
Json regularity_section(const Scenario<S>& sc, const ExperimentConfig& cfg) {
  const double alpha = cfg.alpha.value_or(sc.alpha);
  const auto sampler = region_sampler(sc, cfg);
  const auto& fam = sc.family;

  auto report_json = [](const auto& rep, const std::string& name) {
    Json j;
    j["name"] = name;
    j["alpha"] = rep.alpha;
    j["epsilon_hat"] = rep.epsilon_hat;
    j["n_pairs"] = rep.n_pairs;
    j["n_skipped"] = rep.n_skipped;
    j["worst_pair"] = rep.worst_pair ? Json::array({point_json(rep.worst_pair->first), point_json(rep.worst_pair->second)})
                                     : Json(nullptr);
    return j;
  };

  Json out;
  out["alpha"] = alpha;
  out["region"] = sampler.region;
  out["n_pairs"] = cfg.regularity_pairs;
  Json ops = Json::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const auto rep = estimate_violation(fam[i], alpha, sampler, cfg.regularity_pairs, cfg.workers);
    worst = std::max(worst, rep.epsilon_hat);
    const std::string name = fam[i].name.empty() ? "T" + std::to_string(i) : fam[i].name + "[" + std::to_string(i) + "]";
    ops.push_back(report_json(rep, name));
  }
  out["operators"] = ops;
  out["in_expectation"] =
      report_json(estimate_violation_in_expectation(fam, alpha, sampler, cfg.regularity_pairs, cfg.workers), "family");

  std::optional<ViolationBound> bound = sc.bound;
  if (!bound && sc.estimated_bound) bound = sc.estimated_bound(sampler, cfg.regularity_pairs, cfg.workers);
  if (bound) {
    Json b;
    b["formula"] = bound->formula;
    b["alpha"] = sc.alpha;
    b["epsilon"] = bound->epsilon;
    Json c = Json::object();
    for (const auto& [k, v] : bound->constants) c[k] = v;
    b["constants"] = c;
    out["bound"] = b;
    // The bound is stated at the scenario's alpha.
    out["within_bound"] = alpha == sc.alpha ? Json(worst <= bound->epsilon + 1e-6) : Json(nullptr);
  } else {
    out["bound"] = nullptr;
    out["within_bound"] = nullptr;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rates

struct RateInputs {
  std::vector<io::SeriesRow> rows;
  double floor = 0.0;
  RateOptions options;
  std::optional<double> alpha;
  std::optional<double> epsilon; // in-expectation violation
  std::optional<double> known_rate;
};

struct RateSummary {
  Json json;
  std::string text; // human-readable lines for stdout
};

inline RateSummary rate_section(const RateInputs& in) {
  RateSummary out;
  Json& j = out.json;
  std::ostringstream msg;

  std::vector<std::pair<std::size_t, double>> series;
  for (const auto& r : in.rows)
    if (std::isfinite(r.w2_to_reference)) series.emplace_back(r.k, r.w2_to_reference);

  j["floor"] = in.floor;
  j["burn_in_fraction"] = in.options.burn_in_fraction;
  j["floor_multiple"] = in.options.floor_multiple;
  j["known_rate"] = in.known_rate ? Json(*in.known_rate) : Json(nullptr);
  if (series.empty()) {
    j["status"] = "unavailable";
    j["fit_window"] = nullptr;
    j["q_rate"] = nullptr;
    j["r_rate"] = nullptr;
    j["residual"] = nullptr;
    msg << "rate: no W2_to_pi values to fit\n";
  } else {
    const auto rep = analyze_rates(series, in.floor, in.options);
    j["status"] = to_string(rep.status);
    Json w;
    w["begin"] = rep.fit_window.begin;
    w["end"] = rep.fit_window.end;
    w["k_begin"] = rep.fit_window.begin < series.size() ? Json(series[rep.fit_window.begin].first) : Json(nullptr);
    w["k_end"] = rep.fit_window.end > rep.fit_window.begin ? Json(series[rep.fit_window.end - 1].first) : Json(nullptr);
    j["fit_window"] = w;
    if (rep.q_rate)
      j["q_rate"] = {{"c", rep.q_rate->c}, {"geometric_mean", rep.q_rate->geometric_mean}, {"linear", rep.q_rate->linear}};
    else
      j["q_rate"] = nullptr;
    if (rep.r_rate)
      j["r_rate"] = {{"beta", rep.r_rate->beta},
                     {"c", rep.r_rate->c},
                     {"residual", rep.r_rate->residual},
                     {"nonlinear", rep.r_rate->nonlinear}};
    else
      j["r_rate"] = nullptr;
    j["residual"] = rep.r_rate ? Json(rep.residual) : Json(nullptr);
    msg << "rate: " << to_string(rep.status);
    if (rep.r_rate) msg << " (R-linear c = " << io::format_double(rep.r_rate->c) << ", Q-linear c = " << io::format_double(rep.q_rate->c) << ")";
    msg << "\n";
  }

  // Subregularity: distance to the reference against psi_hat.
  std::vector<double> psi, dist, step;
  for (const auto& r : in.rows)
    if (std::isfinite(r.psi_hat) && std::isfinite(r.w2_to_reference)) {
      psi.push_back(r.psi_hat);
      dist.push_back(r.w2_to_reference);
      step.push_back(std::isfinite(r.w2_step) ? r.w2_step : 0.0);
    }
  std::optional<double> r_hat;
  j["subregularity"] = nullptr;
  j["hood_constant"] = nullptr;
  try {
    const auto est = estimate_subregularity(psi, dist);
    r_hat = est.r_hat;
    j["subregularity"] = {{"r_hat", est.r_hat}, {"ls_slope", est.ls_slope}, {"n_used", est.n_used}, {"n_excluded", est.n_excluded}};
  } catch (const InputError&) {
  }
  try {
    j["hood_constant"] = estimate_hood_constant(psi, step);
  } catch (const InputError&) {
  }

  j["predicted_rate"] = nullptr;
  if (in.alpha && in.epsilon && r_hat) {
    const double r = admissible_subregularity(*in.alpha, *in.epsilon, *r_hat);
    try {
      const double c = rate_bound_from_theorem(*in.alpha, *in.epsilon, r);
      j["predicted_rate"] = {{"alpha", *in.alpha}, {"epsilon", *in.epsilon}, {"r", r}, {"c", c}};
      msg << "predicted rate c = " << io::format_double(c) << " (alpha = " << io::format_double(*in.alpha)
          << ", epsilon = " << io::format_double(*in.epsilon) << ", r = " << io::format_double(r) << ")\n";
    } catch (const InputError& e) {
      msg << "predicted rate unavailable: " << e.what() << "\n";
    }
  }
  out.text = msg.str();
  return out;
}

// ---------------------------------------------------------------------------
// Runs

template <GeodesicSpace S>
struct RunResult {
  Trajectory<S> trajectory;
  Ensemble<S> reference;
  std::vector<io::SeriesRow> series;
  double floor = 0.0;
  Json manifest;
  Json report;
};

template <GeodesicSpace S>
Ensemble<S> read_ensemble_for(const S& space, const std::string& path, std::size_t N, const std::string& what) {
  auto any = io::read_ensemble_csv(path);
  auto* e = std::get_if<Ensemble<S>>(&any);
  if (!e) throw InputError(path + ": " + what + " ensemble lives in a different space than the scenario");
  if (e->size() != N)
    throw InputError(path + ": " + what + " ensemble has " + std::to_string(e->size()) + " particles, expected " +
                     std::to_string(N));
  for (std::size_t p = 0; p < e->size(); ++p) {
    try {
      space.validate((*e)[p]);
    } catch (const InputError& err) {
      throw InputError(path + ":" + std::to_string(p + 2) + ": " + err.what());
    }
  }
  return std::move(*e);
}

template <GeodesicSpace S>
Ensemble<S> burn_in_ensemble(const Scenario<S>& sc, const ExperimentConfig& cfg, std::size_t steps, std::uint64_t init_seed,
                             std::uint64_t chain_seed) {
  ChainConfig<S> cc{sc.family, sc.initial(cfg.ensemble_size, init_seed), steps, chain_seed, std::max<std::size_t>(steps, 1),
                    cfg.workers, NoiseMode::independent};
  return run_ensemble(cc).final_ensemble();
}

template <GeodesicSpace S>
Json final_truth(const Scenario<S>& sc, const Ensemble<S>& final) {
  Json t;
  t["known_rate"] = sc.known_rate ? Json(*sc.known_rate) : Json(nullptr);
  t["limit_point"] = sc.limit_point ? point_json(*sc.limit_point) : Json(nullptr);
  t["mean_error_to_truth"] = nullptr;
  t["barycenter_distance_to_limit"] = nullptr;
  if (sc.error_to_truth) {
    double acc = 0.0;
    for (const auto& x : final) acc += sc.error_to_truth(x);
    t["mean_error_to_truth"] = acc / static_cast<double>(final.size());
  } else if (sc.limit_point) {
    if constexpr (std::is_same_v<S, Spider>) {
      t["barycenter_distance_to_limit"] = sc.space().distance(spider_frechet_mean(sc.space(), final), *sc.limit_point);
    } else {
      Vector m = Vector::Zero(sc.limit_point->size());
      for (const auto& x : final) m += x;
      m /= static_cast<double>(final.size());
      t["barycenter_distance_to_limit"] = (m - *sc.limit_point).norm();
    }
  }
  return t;
}

/// Runs the chain and every enabled diagnostic without touching the disk
/// (except to read user-supplied initial or reference ensembles).
template <GeodesicSpace S>
RunResult<S> run_scenario(const Scenario<S>& sc, const ExperimentConfig& cfg) {
  const auto& space = sc.space();
  const std::size_t N = cfg.ensemble_size;
  RunResult<S> res;

  const Ensemble<S> initial = cfg.initial_file ? read_ensemble_for(space, *cfg.initial_file, N, "initial")
                                               : sc.initial(N, mix_seed(cfg.seed, salt::initial));
  ChainConfig<S> cc{sc.family, initial, cfg.iterations, cfg.seed, cfg.record_every, cfg.workers, cfg.noise};
  res.trajectory = run_ensemble(cc);

  const bool need_reference = cfg.wasserstein || cfg.psi || cfg.rates;
  Json ref_json;
  Json floor_json;
  if (need_reference) {
    const std::size_t burn = reference_burn_in(cfg.iterations, cfg.reference_burn_in_factor);
    if (cfg.reference_file) {
      res.reference = read_ensemble_for(space, *cfg.reference_file, N, "reference");
      ref_json = {{"source", "file"}, {"path", *cfg.reference_file}};
    } else {
      const auto init_seed = mix_seed(cfg.seed, salt::reference_initial);
      const auto chain_seed = mix_seed(cfg.seed, salt::reference_chain);
      res.reference = burn_in_ensemble(sc, cfg, burn, init_seed, chain_seed);
      ref_json = {{"source", "burn_in"},
                  {"steps", burn},
                  {"initial_seed", init_seed},
                  {"chain_seed", chain_seed},
                  {"noise", "independent"}};
    }
    const auto floor_seed = mix_seed(cfg.seed, salt::floor);
    if (sc.invariant) {
      res.floor = monte_carlo_floor<S>(space, *sc.invariant, N, floor_seed, 16);
      floor_json = {{"value", res.floor}, {"method", "exact invariant sampler"}, {"replicates", 16}, {"seed", floor_seed}};
    } else {
      typename Scenario<S>::EnsembleBuilder draw = [&](std::size_t n, std::uint64_t s) {
        ExperimentConfig c2 = cfg;
        c2.ensemble_size = n;
        return burn_in_ensemble(sc, c2, burn, mix_seed(s, salt::reference_initial), mix_seed(s, salt::reference_chain));
      };
      res.floor = monte_carlo_floor<S>(space, draw, N, floor_seed, 2);
      floor_json = {{"value", res.floor}, {"method", "independent burn-in runs"}, {"replicates", 2}, {"steps", burn}, {"seed", floor_seed}};
    }
  }

  const std::vector<Ensemble<S>> candidates{res.reference};
  double prev = std::nan("");
  for (const auto& st : res.trajectory.steps) {
    io::SeriesRow row;
    row.k = st.step;
    if (cfg.wasserstein || cfg.rates) {
      row.w2_to_reference = wasserstein(space, st.ensemble, res.reference).value;
      if (std::isfinite(prev) && prev > 0.0) row.ratio = row.w2_to_reference / prev;
      prev = row.w2_to_reference;
    }
    if (cfg.psi) {
      row.psi_hat = markov_transport_discrepancy(sc.family, st.ensemble, candidates, cfg.workers).value;
      const auto pushed = step_ensemble(sc.family, st.ensemble, mix_seed(mix_seed(cfg.seed, salt::push), st.step), cfg.workers);
      row.w2_step = wasserstein(space, pushed, st.ensemble).value;
    }
    res.series.push_back(row);
  }

  Json report;
  report["scenario"] = sc.name;
  report["warnings"] = sc.warnings;
  std::optional<double> eps;
  if (cfg.regularity) {
    report["regularity"] = regularity_section(sc, cfg);
    eps = report["regularity"]["in_expectation"]["epsilon_hat"].template get<double>();
  } else {
    report["regularity"] = nullptr;
  }
  if (cfg.rates && need_reference) {
    RateInputs ri{res.series, res.floor, {cfg.burn_in_fraction, cfg.floor_multiple}, std::nullopt, eps, sc.known_rate};
    if (cfg.regularity) ri.alpha = cfg.alpha.value_or(sc.alpha);
    report["rates"] = rate_section(ri).json;
  } else {
    report["rates"] = nullptr;
  }
  report["truth"] = final_truth(sc, res.trajectory.final_ensemble());
  // No invariant domain is enforced; the largest distance from the origin
  // reached by any recorded particle lets a proposed domain be checked.
  double extent = 0.0;
  for (const auto& st : res.trajectory.steps)
    for (const auto& x : st.ensemble) {
      if constexpr (std::is_same_v<S, Spider>)
        extent = std::max(extent, x.radius);
      else
        extent = std::max(extent, x.norm());
    }
  report["truth"]["trajectory_extent"] = extent;
  report["estimators"] = {
      {"epsilon_hat", "sampled maximum over the reported region; a lower bound on the true violation"},
      {"psi_hat", "one optimal coupling per candidate, ties broken by the assignment solver's deterministic order "
                  "(a possible source of estimator variance); the finite candidate list makes it an upper bound"},
      {"w2_to_pi", "W2 against the reference ensemble; compare with the Monte-Carlo floor"}};
  res.report = std::move(report);

  Json m;
  m["tool"] = "rfi";
  m["version"] = kVersion;
  m["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"compiler", __VERSION__}};
  m["config_path"] = cfg.source;
  m["config"] = cfg.echo;
  m["scenario"] = sc.name;
  m["space"] = describe(space);
  m["seed"] = cfg.seed;
  m["ensemble_size"] = N;
  m["iterations"] = cfg.iterations;
  m["record_every"] = cfg.record_every;
  m["workers"] = cfg.workers;
  m["noise"] = cfg.noise == NoiseMode::common ? "common" : "independent";
  m["initial"] = cfg.initial_file ? Json{{"source", "file"}, {"path", *cfg.initial_file}}
                                  : Json{{"source", "scenario"}, {"seed", mix_seed(cfg.seed, salt::initial)}};
  m["reference"] = need_reference ? ref_json : Json(nullptr);
  m["floor"] = need_reference ? floor_json : Json(nullptr);
  m["rates"] = {{"burn_in_fraction", cfg.burn_in_fraction}, {"floor_multiple", cfg.floor_multiple}};
  Json steps = Json::array();
  for (const auto& st : res.trajectory.steps) steps.push_back(st.step);
  m["recorded_steps"] = steps;
  m["warnings"] = sc.warnings;
  res.manifest = std::move(m);
  return res;
}

inline std::string ensemble_file_name(std::size_t step) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "step_%06zu.csv", step);
  return buf;
}

template <GeodesicSpace S>
std::string ensemble_csv(const S& space, const Ensemble<S>& e) {
  std::ostringstream os;
  io::write_ensemble_csv(os, space, e);
  return os.str();
}

inline std::string series_csv(const std::vector<io::SeriesRow>& rows) {
  std::ostringstream os;
  io::write_series_csv(os, rows);
  return os.str();
}

/// Updates report.json in place: keys in `section` replace existing ones.
inline void merge_report(const fs::path& dir, const Json& section) {
  const fs::path p = dir / "report.json";
  Json report = Json::object();
  if (fs::exists(p)) {
    try {
      report = io::read_json(p.string());
    } catch (const Json::exception&) {
      report = Json::object();
    }
    if (!report.is_object()) report = Json::object();
  }
  for (const auto& [k, v] : section.items()) report[k] = v;
  io::write_text(p.string(), report.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Commands. Each returns a process exit status: 0 success, 1 runtime
// failure, 2 invalid input.

inline int exit_status_for(const std::exception& e, std::ostream& err) {
  if (dynamic_cast<const InputError*>(&e)) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "runtime failure: " << e.what() << "\n";
  return 1;
}

inline int cmd_run(const std::string& config_path, const Overrides& ov, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  try {
    auto cfg = load_config(config_path);
    apply_overrides(cfg, ov);
    const auto t0 = std::chrono::steady_clock::now();
    const AnyScenario sc = make_scenario(cfg);
    return std::visit(
        [&](const auto& s) {
          auto res = run_scenario(s, cfg);
          const fs::path dir(cfg.output);
          fs::create_directories(dir / "ensembles");
          Json files = Json::array();
          for (const auto& st : res.trajectory.steps) {
            const auto name = ensemble_file_name(st.step);
            io::write_text((dir / "ensembles" / name).string(), ensemble_csv(s.space(), st.ensemble));
            files.push_back("ensembles/" + name);
          }
          io::write_text((dir / "series.csv").string(), series_csv(res.series));
          const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          res.manifest["overrides"] = overrides_json(ov);
          res.manifest["ensembles"] = files;
          res.manifest["wall_time_seconds"] = wall;
          io::write_text((dir / "manifest.json").string(), res.manifest.dump(2) + "\n");
          io::write_text((dir / "report.json").string(), res.report.dump(2) + "\n");
          for (const auto& w : s.warnings) err << "warning: " << w << "\n";
          out << "wrote " << res.trajectory.steps.size() << " ensembles, series.csv, manifest.json and report.json to "
              << dir.string() << "\n";
          return 0;
        },
        sc);
  } catch (const std::exception& e) {
    return exit_status_for(e, err);
  }
}

inline int cmd_regularity(const std::string& config_path, const Overrides& ov, std::ostream& out = std::cout,
                          std::ostream& err = std::cerr) {
  try {
    auto cfg = load_config(config_path);
    apply_overrides(cfg, ov);
    const AnyScenario sc = make_scenario(cfg);
    const Json section = std::visit(
        [&](const auto& s) {
          Json j;
          j["scenario"] = s.name;
          j["regularity"] = regularity_section(s, cfg);
          return j;
        },
        sc);
    const fs::path dir(cfg.output);
    fs::create_directories(dir);
    merge_report(dir, section);
    const auto& r = section["regularity"];
    out << "alpha = " << io::format_double(r["alpha"].get<double>()) << "\n";
    for (const auto& op : r["operators"])
      out << op["name"].get<std::string>() << ": epsilon_hat = " << io::format_double(op["epsilon_hat"].get<double>()) << "\n";
    out << "in expectation: epsilon_hat = " << io::format_double(r["in_expectation"]["epsilon_hat"].get<double>()) << "\n";
    if (!r["bound"].is_null())
      out << "closed-form bound (" << r["bound"]["formula"].get<std::string>()
          << "): epsilon = " << io::format_double(r["bound"]["epsilon"].get<double>()) << "\n";
    return 0;
  } catch (const std::exception& e) {
    return exit_status_for(e, err);
  }
}

inline int cmd_rate(const std::string& results_dir, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const fs::path dir(results_dir);
    const fs::path series_path = dir / "series.csv";
    if (!fs::exists(series_path)) throw InputError(series_path.string() + ": missing series (run the experiment first)");
    std::ifstream in(series_path);
    if (!in) throw InputError("cannot open " + series_path.string());
    RateInputs ri;
    ri.rows = io::read_series_csv(in, series_path.string());

    const fs::path manifest_path = dir / "manifest.json";
    if (fs::exists(manifest_path)) {
      const Json m = io::read_json(manifest_path.string());
      if (m.contains("floor") && m["floor"].is_object()) ri.floor = m["floor"].value("value", 0.0);
      if (m.contains("rates") && m["rates"].is_object()) {
        ri.options.burn_in_fraction = m["rates"].value("burn_in_fraction", ri.options.burn_in_fraction);
        ri.options.floor_multiple = m["rates"].value("floor_multiple", ri.options.floor_multiple);
      }
    }
    const fs::path report_path = dir / "report.json";
    if (fs::exists(report_path)) {
      const Json r = io::read_json(report_path.string());
      if (r.contains("regularity") && r["regularity"].is_object()) {
        ri.alpha = r["regularity"]["alpha"].get<double>();
        ri.epsilon = r["regularity"]["in_expectation"]["epsilon_hat"].get<double>();
      }
      if (r.contains("truth") && r["truth"].is_object() && r["truth"]["known_rate"].is_number())
        ri.known_rate = r["truth"]["known_rate"].get<double>();
    }
    const auto summary = rate_section(ri);
    merge_report(dir, Json{{"rates", summary.json}});
    out << summary.text;
    return 0;
  } catch (const Json::exception& e) {
    err << "error: malformed JSON in " << results_dir << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    return exit_status_for(e, err);
  }
}

/// W_p between two ensemble files of equal size in the same space.
inline int cmd_wasserstein(const std::string& a_path, const std::string& b_path, double p, std::ostream& out = std::cout,
                           std::ostream& err = std::cerr) {
  try {
    if (!(p >= 1.0)) throw InputError("p must be >= 1");
    const auto a = io::read_ensemble_csv(a_path);
    const auto b = io::read_ensemble_csv(b_path);
    if (a.index() != b.index()) throw InputError("ensembles live in different spaces");
    const double w = std::visit(
        [&](const auto& ea) -> double {
          using E = std::decay_t<decltype(ea)>;
          const auto& eb = std::get<E>(b);
          if (ea.size() != eb.size())
            throw InputError("ensembles differ in size (" + std::to_string(ea.size()) + " vs " + std::to_string(eb.size()) + ")");
          if (ea.empty()) throw InputError("ensembles are empty");
          if constexpr (std::is_same_v<E, Ensemble<Spider>>) {
            int legs = 2;
            for (const auto& x : ea) legs = std::max(legs, x.leg + 1);
            for (const auto& x : eb) legs = std::max(legs, x.leg + 1);
            return wasserstein(Spider(legs), ea, eb, p).value;
          } else {
            if (ea.front().size() != eb.front().size()) throw InputError("ensembles differ in dimension");
            return wasserstein(Euclidean(static_cast<std::size_t>(ea.front().size())), ea, eb, p).value;
          }
        },
        a);
    out << io::format_double(w) << "\n";
    return 0;
  } catch (const std::exception& e) {
    return exit_status_for(e, err);
  }
}

} // namespace rfi
