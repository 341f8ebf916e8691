// rfi: batch runner for random function iteration experiments.
//
//   rfi run --config exp.yaml [--out DIR] [--seed S] [--workers W] [--record-every R]
//   rfi regularity --config exp.yaml [--out DIR] [--seed S] [--workers W]
//   rfi rate --out DIR
//   rfi wasserstein A.csv B.csv [--p 2]
//
// Exit status: 0 success, 1 runtime failure, 2 invalid input.

#include <CLI11.hpp>

#include <iostream>

#include "rfi/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Random function iterations: simulation and convergence diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rfi::kVersion);

  std::string config;
  rfi::Overrides ov;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t record_every = 1;

  auto add_common = [&](CLI::App* sub, bool with_record) {
    sub->add_option("--config", config, "experiment configuration (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "seed (overrides config)");
    sub->add_option("--workers", workers, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    if (with_record)
      sub->add_option("--record-every", record_every, "record every R-th step (overrides config)")
          ->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "simulate the ensemble and write series, ensembles and report");
  add_common(run, true);
  auto* reg = app.add_subcommand("regularity", "estimate operator violations and closed-form bounds");
  add_common(reg, false);

  std::string results;
  auto* rate = app.add_subcommand("rate", "fit convergence rates to a results directory");
  rate->add_option("--out,dir", results, "results directory written by 'run'")->required();

  std::string a_path, b_path;
  double p = 2.0;
  auto* ws = app.add_subcommand("wasserstein", "W_p between two ensemble CSV files");
  ws->add_option("first", a_path, "ensemble CSV")->required();
  ws->add_option("second", b_path, "ensemble CSV")->required();
  ws->add_option("--p", p, "order p >= 1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto collect = [&](CLI::App* sub) {
    if (sub->count("--out")) ov.out = out_dir;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--workers")) ov.workers = workers;
    if (sub->get_option_no_throw("--record-every") && sub->count("--record-every")) ov.record_every = record_every;
  };

  if (*run) {
    collect(run);
    return rfi::cmd_run(config, ov);
  }
  if (*reg) {
    collect(reg);
    return rfi::cmd_regularity(config, ov);
  }
  if (*rate) return rfi::cmd_rate(results);
  if (*ws) return rfi::cmd_wasserstein(a_path, b_path, p);
  return 2;
}
