#pragma once

// Experiment configuration: a YAML document checked field by field before
// anything runs. Every rejection carries the file, line and column of the
// offending node. The accepted shape is published as
// schema/experiment.schema.json.

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "rfi/engine.hpp"
#include "rfi/errors.hpp"
#include "rfi/io.hpp"
#include "rfi/scenarios.hpp"

namespace rfi {

/// Invalid configuration; the message starts with "file:line:column:".
class ConfigError : public InputError {
public:
  using InputError::InputError;
};

using AnyScenario = std::variant<Scenario<Euclidean>, Scenario<Spider>>;

struct ExperimentConfig {
  std::string source;
  std::string scenario;
  io::Json echo; // the document as parsed, for the manifest

  std::size_t ensemble_size = 0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
  unsigned workers = 1;
  NoiseMode noise = NoiseMode::independent;

  bool wasserstein = true;
  bool psi = true;
  bool regularity = true;
  bool rates = true;

  std::size_t regularity_pairs = 10000;
  std::optional<double> alpha;
  // Sampling region for violation estimates; the scenario's own when unset.
  std::optional<Vector> region_center;
  std::optional<double> region_half_width;
  std::optional<double> region_max_radius;
  double burn_in_fraction = 0.2;
  double floor_multiple = 10.0;

  std::optional<std::string> reference_file;
  std::size_t reference_burn_in_factor = 10;
  std::optional<std::string> initial_file;

  std::string output = "results";

  // The scenario as built from the configuration (construction is part of
  // validation); rebuilt when the seed is overridden.
  YAML::Node scenario_node;
  YAML::Node initial_node;
};

namespace config_detail {

inline std::string where(const std::string& src, const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.is_null()) return src + ": ";
  return src + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1) + ": ";
}

[[noreturn]] inline void fail(const std::string& src, const YAML::Node& n, const std::string& msg) {
  throw ConfigError(where(src, n) + msg);
}

inline void check_keys(const std::string& src, const YAML::Node& map, const std::set<std::string>& allowed,
                       const std::string& context) {
  if (!map.IsMap()) fail(src, map, context + " must be a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(src, kv.first, "unknown key '" + key + "' in " + context);
  }
}

inline double as_double(const std::string& src, const YAML::Node& n, const std::string& name) {
  if (!n.IsScalar()) fail(src, n, name + " must be a number");
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    fail(src, n, name + " must be a number, got '" + n.Scalar() + "'");
  }
}

inline std::int64_t as_integer(const std::string& src, const YAML::Node& n, const std::string& name) {
  if (!n.IsScalar()) fail(src, n, name + " must be an integer");
  try {
    return n.as<std::int64_t>();
  } catch (const YAML::Exception&) {
    fail(src, n, name + " must be an integer, got '" + n.Scalar() + "'");
  }
}

inline std::size_t as_count(const std::string& src, const YAML::Node& n, const std::string& name, std::int64_t min) {
  const auto v = as_integer(src, n, name);
  if (v < min) fail(src, n, name + " must be >= " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

inline bool as_bool(const std::string& src, const YAML::Node& n, const std::string& name) {
  if (!n.IsScalar()) fail(src, n, name + " must be true or false");
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    fail(src, n, name + " must be true or false, got '" + n.Scalar() + "'");
  }
}

inline std::string as_string(const std::string& src, const YAML::Node& n, const std::string& name) {
  if (!n.IsScalar()) fail(src, n, name + " must be a string");
  return n.Scalar();
}

inline Vector as_vector(const std::string& src, const YAML::Node& n, const std::string& name) {
  if (!n.IsSequence() || n.size() == 0) fail(src, n, name + " must be a nonempty list of numbers");
  Vector v(static_cast<Eigen::Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_double(src, n[i], name);
  return v;
}

inline Matrix as_matrix(const std::string& src, const YAML::Node& n, const std::string& name) {
  if (!n.IsSequence() || n.size() == 0) fail(src, n, name + " must be a nonempty list of rows");
  const std::size_t cols = n[0].IsSequence() ? n[0].size() : 0;
  Matrix M(static_cast<Eigen::Index>(n.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < n.size(); ++i) {
    const Vector row = as_vector(src, n[i], name + " row");
    if (static_cast<std::size_t>(row.size()) != cols) fail(src, n[i], name + " rows must all have " + std::to_string(cols) + " entries");
    M.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return M;
}

inline double positive(const std::string& src, const YAML::Node& n, const std::string& name) {
  const double v = as_double(src, n, name);
  if (!(v > 0.0) || !std::isfinite(v)) fail(src, n, name + " must be a positive number");
  return v;
}

inline io::Json to_json(const YAML::Node& n) {
  switch (n.Type()) {
  case YAML::NodeType::Sequence: {
    io::Json a = io::Json::array();
    for (const auto& c : n) a.push_back(to_json(c));
    return a;
  }
  case YAML::NodeType::Map: {
    io::Json o = io::Json::object();
    for (const auto& kv : n) o[kv.first.as<std::string>()] = to_json(kv.second);
    return o;
  }
  case YAML::NodeType::Scalar: {
    const std::string& s = n.Scalar();
    if (n.Tag() == "!") return s; // quoted
    std::int64_t i;
    double d;
    bool b;
    if (YAML::convert<std::int64_t>::decode(n, i)) return i;
    if (YAML::convert<double>::decode(n, d)) return d;
    if (YAML::convert<bool>::decode(n, b)) return b;
    return s;
  }
  default:
    return nullptr;
  }
}

} // namespace config_detail

/// Names accepted under scenario.name.
inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"two_point",        "contraction",       "kaczmarz",       "sgd_linear_noise",
                                              "dr_parallel_lines", "phase_retrieval",   "spider_frechet"};
  return names;
}

/// Builds the scenario described by the `scenario` node. Library input
/// errors are re-anchored at the node that caused them.
inline AnyScenario build_scenario(const std::string& src, const YAML::Node& node, std::uint64_t seed) {
  using namespace config_detail;
  check_keys(src, node, {"name", "params"}, "scenario");
  if (!node["name"]) fail(src, node, "scenario.name is required");
  const std::string name = as_string(src, node["name"], "scenario.name");
  const YAML::Node params = node["params"] ? node["params"] : YAML::Node(YAML::NodeType::Map);
  const YAML::Node anchor = node["params"] ? node["params"] : node;
  if (!params.IsMap()) fail(src, anchor, "scenario.params must be a mapping");
  auto req = [&](const char* key) {
    if (!params[key]) fail(src, anchor, std::string("scenario ") + name + " requires params." + key);
    return params[key];
  };

  try {
    if (name == "two_point") {
      check_keys(src, params, {}, "two_point params");
      return scenario_two_point();
    }
    if (name == "contraction") {
      check_keys(src, params, {"r"}, "contraction params");
      const double r = as_double(src, req("r"), "r");
      if (!(r > 0.0 && r < 1.0)) fail(src, params["r"], "r must lie in (0, 1)");
      return scenario_contraction(r);
    }
    if (name == "kaczmarz") {
      check_keys(src, params, {"A", "b", "x_star", "consistent", "perturbation"}, "kaczmarz params");
      const Matrix A = as_matrix(src, req("A"), "A");
      const bool consistent = as_bool(src, req("consistent"), "consistent");
      if (params["b"] && params["x_star"]) fail(src, anchor, "give either b or x_star, not both");
      Vector b;
      if (params["b"]) {
        b = as_vector(src, params["b"], "b");
        if (b.size() != A.rows()) fail(src, params["b"], "b must have one entry per row of A");
      } else if (params["x_star"]) {
        const Vector xs = as_vector(src, params["x_star"], "x_star");
        if (xs.size() != A.cols()) fail(src, params["x_star"], "x_star must have one entry per column of A");
        const double pert = params["perturbation"] ? as_double(src, params["perturbation"], "perturbation") : 1.0;
        b = kaczmarz_rhs(A, xs, consistent, pert, seed);
      } else {
        fail(src, anchor, "kaczmarz requires params.b or params.x_star");
      }
      for (Eigen::Index j = 0; j < A.rows(); ++j)
        if (!(A.row(j).squaredNorm() > 0.0)) fail(src, params["A"][static_cast<std::size_t>(j)], "row of A is zero");
      return scenario_kaczmarz(A, b, consistent);
    }
    if (name == "sgd_linear_noise") {
      check_keys(src, params, {"Q", "q", "noise_atoms", "t"}, "sgd_linear_noise params");
      const Matrix Q = as_matrix(src, req("Q"), "Q");
      if (Q.rows() != Q.cols()) fail(src, params["Q"], "Q must be square");
      if ((Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm())) fail(src, params["Q"], "Q must be symmetric");
      const Vector q = params["q"] ? as_vector(src, params["q"], "q") : Vector::Zero(Q.rows());
      if (q.size() != Q.rows()) fail(src, params["q"], "q must match the size of Q");
      const YAML::Node atoms = req("noise_atoms");
      if (!atoms.IsSequence() || atoms.size() == 0) fail(src, atoms, "noise_atoms must be a nonempty list of vectors");
      std::vector<Vector> zetas;
      for (const auto& a : atoms) {
        zetas.push_back(as_vector(src, a, "noise atom"));
        if (zetas.back().size() != Q.rows()) fail(src, a, "noise atom must match the size of Q");
      }
      const double t = positive(src, req("t"), "t");
      return scenario_sgd_linear_noise(SmoothTerm::quadratic(Q, q), zetas, t);
    }
    if (name == "dr_parallel_lines") {
      check_keys(src, params, {"gap", "weight"}, "dr_parallel_lines params");
      const double gap = params["gap"] ? positive(src, params["gap"], "gap") : 1.0;
      const double weight = params["weight"] ? positive(src, params["weight"], "weight") : 1.0;
      return scenario_dr_parallel_lines(gap, weight);
    }
    if (name == "phase_retrieval") {
      check_keys(src, params, {"n", "n_masks", "instance_seed", "lambda", "support", "initial_spread"},
                 "phase_retrieval params");
      const std::size_t n = as_count(src, req("n"), "n", 2);
      if (n > 256) fail(src, params["n"], "n must be <= 256");
      const std::size_t masks = as_count(src, req("n_masks"), "n_masks", 1);
      const std::uint64_t inst_seed =
          params["instance_seed"] ? as_count(src, params["instance_seed"], "instance_seed", 0) : seed;
      const double lambda = params["lambda"] ? as_double(src, params["lambda"], "lambda") : 0.5;
      if (!(lambda > 0.0 && lambda < 1.0)) fail(src, params["lambda"], "lambda must lie in (0, 1)");
      const bool support = params["support"] ? as_bool(src, params["support"], "support") : true;
      const double spread = params["initial_spread"] ? positive(src, params["initial_spread"], "initial_spread") : 0.1;
      return scenario_phase_retrieval(n, masks, inst_seed, lambda, support, spread);
    }
    if (name == "spider_frechet") {
      check_keys(src, params, {"legs", "anchors", "lambda"}, "spider_frechet params");
      const auto legs = static_cast<int>(as_count(src, req("legs"), "legs", 2));
      const YAML::Node an = req("anchors");
      if (!an.IsSequence() || an.size() == 0) fail(src, an, "anchors must be a nonempty list of [leg, radius]");
      std::vector<SpiderPoint> anchors;
      for (const auto& a : an) {
        if (!a.IsSequence() || a.size() != 2) fail(src, a, "anchor must be [leg, radius]");
        const auto leg = as_integer(src, a[0], "anchor leg");
        const double r = as_double(src, a[1], "anchor radius");
        if (leg < 0 || leg >= legs) fail(src, a[0], "anchor leg must lie in 0.." + std::to_string(legs - 1));
        if (!(r >= 0.0) || !std::isfinite(r)) fail(src, a[1], "anchor radius must be nonnegative");
        anchors.emplace_back(static_cast<int>(leg), r);
      }
      const double lambda = positive(src, req("lambda"), "lambda");
      return scenario_spider_frechet(Spider(legs), anchors, lambda);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InputError& e) {
    fail(src, anchor, e.what());
  }
  std::string known;
  for (const auto& n : scenario_names()) known += (known.empty() ? "" : ", ") + n;
  fail(src, node["name"], "unknown scenario '" + name + "' (known: " + known + ")");
}

/// Replaces the scenario's initial builder when the config overrides it.
inline void apply_initial(const std::string& src, const YAML::Node& node, AnyScenario& sc) {
  using namespace config_detail;
  if (!node) return;
  std::visit(
      [&](auto& s) {
        using S = std::decay_t<decltype(s.space())>;
        if constexpr (std::is_same_v<S, Euclidean>) {
          check_keys(src, node, {"center", "half_width", "file"}, "initial");
          if (node["file"]) return;
          if (!node["center"] || !node["half_width"]) fail(src, node, "initial needs center and half_width (or file)");
          const Vector c = as_vector(src, node["center"], "initial.center");
          if (static_cast<std::size_t>(c.size()) != s.space().dim)
            fail(src, node["center"], "initial.center must have dimension " + std::to_string(s.space().dim));
          const double h = as_double(src, node["half_width"], "initial.half_width");
          if (!(h >= 0.0)) fail(src, node["half_width"], "initial.half_width must be nonnegative");
          s.initial = uniform_box_ensemble(c, h);
        } else {
          check_keys(src, node, {"max_radius", "file"}, "initial");
          if (node["file"]) return;
          if (!node["max_radius"]) fail(src, node, "initial needs max_radius (or file)");
          const double r = as_double(src, node["max_radius"], "initial.max_radius");
          if (!(r >= 0.0)) fail(src, node["max_radius"], "initial.max_radius must be nonnegative");
          s.initial = uniform_spider_ensemble(s.space().legs, r);
        }
      },
      sc);
}

/// Parses and validates a configuration document.
inline ExperimentConfig parse_config(const std::string& text, const std::string& src) {
  using namespace config_detail;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(src + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                      ": YAML syntax error: " + e.msg);
  }
  if (!root || !root.IsMap()) throw ConfigError(src + ":1:1: configuration must be a mapping");
  check_keys(src, root,
             {"scenario", "ensemble_size", "iterations", "seed", "record_every", "workers", "noise", "diagnostics",
              "regularity", "rates", "reference", "initial", "output"},
             "configuration");

  ExperimentConfig cfg;
  cfg.source = src;
  cfg.echo = to_json(root);
  auto required = [&](const char* key) {
    if (!root[key]) fail(src, root, std::string("missing required key '") + key + "'");
    return root[key];
  };

  cfg.ensemble_size = as_count(src, required("ensemble_size"), "ensemble_size", 1);
  cfg.iterations = as_count(src, required("iterations"), "iterations", 0);
  cfg.seed = as_count(src, required("seed"), "seed", 0);
  if (root["record_every"]) cfg.record_every = as_count(src, root["record_every"], "record_every", 1);
  if (root["workers"]) cfg.workers = static_cast<unsigned>(as_count(src, root["workers"], "workers", 1));
  if (root["noise"]) {
    const auto mode = as_string(src, root["noise"], "noise");
    if (mode == "independent") cfg.noise = NoiseMode::independent;
    else if (mode == "common") cfg.noise = NoiseMode::common;
    else fail(src, root["noise"], "noise must be 'independent' or 'common'");
  }
  if (const auto d = root["diagnostics"]) {
    check_keys(src, d, {"wasserstein", "psi", "regularity", "rates"}, "diagnostics");
    if (d["wasserstein"]) cfg.wasserstein = as_bool(src, d["wasserstein"], "diagnostics.wasserstein");
    if (d["psi"]) cfg.psi = as_bool(src, d["psi"], "diagnostics.psi");
    if (d["regularity"]) cfg.regularity = as_bool(src, d["regularity"], "diagnostics.regularity");
    if (d["rates"]) cfg.rates = as_bool(src, d["rates"], "diagnostics.rates");
  }
  if (const auto r = root["regularity"]) {
    check_keys(src, r, {"pairs", "alpha", "region"}, "regularity");
    if (r["pairs"]) cfg.regularity_pairs = as_count(src, r["pairs"], "regularity.pairs", 1);
    if (r["alpha"]) {
      const double a = as_double(src, r["alpha"], "regularity.alpha");
      if (!(a > 0.0 && a < 1.0)) fail(src, r["alpha"], "regularity.alpha must lie in (0, 1)");
      cfg.alpha = a;
    }
  }
  if (const auto r = root["rates"]) {
    check_keys(src, r, {"burn_in_fraction", "floor_multiple"}, "rates");
    if (r["burn_in_fraction"]) {
      cfg.burn_in_fraction = as_double(src, r["burn_in_fraction"], "rates.burn_in_fraction");
      if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0))
        fail(src, r["burn_in_fraction"], "rates.burn_in_fraction must lie in [0, 1)");
    }
    if (r["floor_multiple"]) cfg.floor_multiple = positive(src, r["floor_multiple"], "rates.floor_multiple");
  }
  if (const auto r = root["reference"]) {
    check_keys(src, r, {"file", "burn_in_factor"}, "reference");
    if (r["file"]) cfg.reference_file = as_string(src, r["file"], "reference.file");
    if (r["burn_in_factor"]) cfg.reference_burn_in_factor = as_count(src, r["burn_in_factor"], "reference.burn_in_factor", 1);
  }
  if (root["output"]) cfg.output = as_string(src, root["output"], "output");
  if (root["initial"] && root["initial"]["file"]) cfg.initial_file = as_string(src, root["initial"]["file"], "initial.file");

  cfg.scenario_node = required("scenario");
  cfg.initial_node = root["initial"];
  auto sc = build_scenario(src, cfg.scenario_node, cfg.seed);
  apply_initial(src, cfg.initial_node, sc);
  cfg.scenario = std::visit([](const auto& s) { return s.name; }, sc);
  if (const YAML::Node region = root["regularity"] ? root["regularity"]["region"] : YAML::Node(YAML::NodeType::Undefined);
      region.IsDefined() && !region.IsNull()) {
    std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s.space())>;
          if constexpr (std::is_same_v<S, Euclidean>) {
            check_keys(src, region, {"center", "half_width"}, "regularity.region");
            if (!region["center"] || !region["half_width"]) fail(src, region, "regularity.region needs center and half_width");
            cfg.region_center = as_vector(src, region["center"], "regularity.region.center");
            if (static_cast<std::size_t>(cfg.region_center->size()) != s.space().dim)
              fail(src, region["center"], "regularity.region.center must have dimension " + std::to_string(s.space().dim));
            cfg.region_half_width = positive(src, region["half_width"], "regularity.region.half_width");
          } else {
            check_keys(src, region, {"max_radius"}, "regularity.region");
            if (!region["max_radius"]) fail(src, region, "regularity.region needs max_radius");
            cfg.region_max_radius = positive(src, region["max_radius"], "regularity.region.max_radius");
          }
        },
        sc);
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// The scenario for a validated configuration.
inline AnyScenario make_scenario(const ExperimentConfig& cfg) {
  auto sc = build_scenario(cfg.source, cfg.scenario_node, cfg.seed);
  apply_initial(cfg.source, cfg.initial_node, sc);
  return sc;
}

} // namespace rfi
