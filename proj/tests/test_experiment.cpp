#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rfi/experiment.hpp"
#include "support.hpp"

using namespace rfi;
using rfi::testing::Gen;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& yaml) {
  try {
    parse_config(yaml, "exp.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rfi_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTwoPoint = "scenario:\n  name: two_point\nensemble_size: 1000\niterations: 10\nseed: 11\n";

} // namespace

TEST(Config, MinimalDocumentGetsDefaults) {
  const auto cfg = parse_config(kTwoPoint, "exp.yaml");
  EXPECT_EQ(cfg.scenario, "two_point");
  EXPECT_EQ(cfg.ensemble_size, 1000u);
  EXPECT_EQ(cfg.iterations, 10u);
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_EQ(cfg.record_every, 1u);
  EXPECT_EQ(cfg.workers, 1u);
  EXPECT_TRUE(cfg.wasserstein && cfg.psi && cfg.regularity && cfg.rates);
  EXPECT_EQ(cfg.echo["scenario"]["name"], "two_point");
  EXPECT_EQ(cfg.echo["ensemble_size"], 1000);
}

TEST(Config, UnknownKeyIsLineAnchored) {
  const auto msg = error_of("scenario:\n  name: two_point\nensemble_size: 10\niterations: 1\nseed: 1\nworkerz: 2\n");
  EXPECT_EQ(msg.rfind("exp.yaml:6:1:", 0), 0u) << msg;
  EXPECT_NE(msg.find("workerz"), std::string::npos);
}

TEST(Config, TypeErrorsPointAtTheValue) {
  const auto msg = error_of("scenario:\n  name: two_point\nensemble_size: many\niterations: 1\nseed: 1\n");
  EXPECT_EQ(msg.rfind("exp.yaml:3:16:", 0), 0u) << msg;
  const auto neg = error_of("scenario:\n  name: two_point\nensemble_size: 10\niterations: -1\nseed: 1\n");
  EXPECT_EQ(neg.rfind("exp.yaml:4:13:", 0), 0u) << neg;
}

TEST(Config, MissingRequiredKey) {
  const auto msg = error_of("scenario:\n  name: two_point\nensemble_size: 10\nseed: 1\n");
  EXPECT_NE(msg.find("iterations"), std::string::npos) << msg;
  EXPECT_EQ(msg.rfind("exp.yaml:", 0), 0u);
}

TEST(Config, ScenarioParameterChecks) {
  const std::string head = "ensemble_size: 10\niterations: 1\nseed: 1\n";
  auto msg = error_of(head + "scenario:\n  name: contraction\n  params:\n    r: 1.5\n");
  EXPECT_EQ(msg.rfind("exp.yaml:7:8:", 0), 0u) << msg;
  msg = error_of(head + "scenario:\n  name: nope\n");
  EXPECT_NE(msg.find("unknown scenario 'nope'"), std::string::npos) << msg;
  EXPECT_EQ(msg.rfind("exp.yaml:5:9:", 0), 0u) << msg;
  msg = error_of(head + "scenario:\n  name: kaczmarz\n  params:\n    A: [[1, 0], [0, 0]]\n    b: [1, 2]\n    consistent: true\n");
  EXPECT_NE(msg.find("row of A is zero"), std::string::npos) << msg;
  EXPECT_EQ(msg.rfind("exp.yaml:7:17:", 0), 0u) << msg;
  msg = error_of(head + "scenario:\n  name: kaczmarz\n  params:\n    A: [[1, 0], [1, 0]]\n    b: [1, 2]\n    consistent: true\n");
  EXPECT_NE(msg.find("exp.yaml:7:"), std::string::npos) << msg; // inconsistent system claimed consistent
  msg = error_of(head + "scenario:\n  name: spider_frechet\n  params:\n    legs: 3\n    anchors: [[3, 1.0]]\n    lambda: 0.1\n");
  EXPECT_NE(msg.find("anchor leg"), std::string::npos) << msg;
}

TEST(Config, YamlSyntaxErrorIsAnchored) {
  const auto msg = error_of("scenario: [unclosed\nseed: 1\n");
  EXPECT_EQ(msg.rfind("exp.yaml:", 0), 0u) << msg;
  EXPECT_NE(msg.find("YAML syntax error"), std::string::npos);
}

TEST(Config, InitialOverrideMustMatchDimension) {
  const auto msg = error_of(std::string(kTwoPoint) + "initial:\n  center: [0, 0]\n  half_width: 1\n");
  EXPECT_NE(msg.find("dimension 1"), std::string::npos) << msg;
}

TEST(Config, RegularityRegionOverride) {
  const auto cfg = parse_config(std::string(kTwoPoint) + "regularity:\n  pairs: 100\n  region:\n    center: [7]\n    half_width: 0.5\n",
                                "exp.yaml");
  const auto sc = std::get<Scenario<Euclidean>>(make_scenario(cfg));
  const auto j = regularity_section(sc, cfg);
  EXPECT_NE(j["region"].get<std::string>().find("half_width=0.5"), std::string::npos) << j["region"];
  const auto msg = error_of(std::string(kTwoPoint) + "regularity:\n  region:\n    max_radius: 2\n");
  EXPECT_NE(msg.find("unknown key 'max_radius'"), std::string::npos) << msg;
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(fs::path(RFI_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".yaml") continue;
    EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
  }
}

TEST(Property, ShortestFormatRoundTrips) {
  Gen g(71);
  for (int i = 0; i < 100000; ++i) {
    const double v = g.normal() * std::pow(10.0, g.integer(-300, 300));
    ASSERT_EQ(io::parse_double(io::format_double(v)), v);
  }
  EXPECT_TRUE(std::isnan(io::parse_double(io::format_double(std::nan("")))));
  EXPECT_THROW(io::parse_double("1.5x"), InputError);
}

TEST(Property, EnsembleCsvRoundTrip) {
  Gen g(72);
  for (int trial = 0; trial < 50; ++trial) {
    const auto dim = static_cast<std::size_t>(g.integer(1, 5));
    const Euclidean space(dim);
    Ensemble<Euclidean> e;
    for (int p = 0; p < g.integer(1, 30); ++p) e.push_back(g.vector(static_cast<Eigen::Index>(dim), 100.0));
    std::stringstream ss;
    io::write_ensemble_csv(ss, space, e);
    const auto back = std::get<Ensemble<Euclidean>>(io::read_ensemble_csv(ss));
    ASSERT_EQ(back.size(), e.size());
    for (std::size_t p = 0; p < e.size(); ++p) ASSERT_EQ(back[p], e[p]);
  }
  const Spider sp(4);
  Ensemble<Spider> s;
  for (int p = 0; p < 40; ++p) s.push_back(g.spider(4, 3.0));
  std::stringstream ss;
  io::write_ensemble_csv(ss, sp, s);
  const auto back = std::get<Ensemble<Spider>>(io::read_ensemble_csv(ss));
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t p = 0; p < s.size(); ++p) EXPECT_EQ(back[p], s[p]);
}

TEST(EnsembleCsv, MalformedRowsNameTheLine) {
  std::stringstream ss("particle,x0,x1\n0,1,2\n1,3\n");
  try {
    io::read_ensemble_csv(ss, "e.csv");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("e.csv:3:", 0), 0u) << e.what();
  }
  std::stringstream bad("particle,y0\n");
  EXPECT_THROW(io::read_ensemble_csv(bad, "e.csv"), InputError);
}

TEST(SeriesCsv, EmptyCellsAreMissingValues) {
  std::vector<io::SeriesRow> rows(2);
  rows[0] = {0, 1.5, 0.25, std::nan(""), 0.5};
  rows[1] = {3, 0.75, std::nan(""), 0.5, std::nan("")};
  std::stringstream ss;
  io::write_series_csv(ss, rows);
  EXPECT_EQ(ss.str(), "k,W2_to_pi,psi_hat,ratio,W2_step\n0,1.5,0.25,,0.5\n3,0.75,,0.5,\n");
  const auto back = io::read_series_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].k, 3u);
  EXPECT_TRUE(std::isnan(back[1].psi_hat));
  EXPECT_EQ(back[0].w2_step, 0.5);
}

TEST(Run, ZeroIterationsRecordsOnlyTheInitialEnsemble) {
  const auto dir = scratch("k0");
  std::ofstream(dir / "exp.yaml") << "scenario:\n  name: two_point\nensemble_size: 50\niterations: 0\nseed: 3\n";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run((dir / "exp.yaml").string(), {(dir / "res").string(), {}, {}, {}}, out, err), 0) << err.str();
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir / "res" / "ensembles")) files.push_back(e.path().filename().string());
  ASSERT_EQ(files.size(), 1u);
  EXPECT_EQ(files[0], "step_000000.csv");
  const auto cfg = load_config((dir / "exp.yaml").string());
  const auto init = scenario_two_point().initial(50, mix_seed(cfg.seed, salt::initial));
  EXPECT_EQ(slurp(dir / "res" / "ensembles" / files[0]), ensemble_csv(Euclidean(1), init));
  EXPECT_TRUE(fs::exists(dir / "res" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "res" / "report.json"));
}

TEST(Run, OutputIndependentOfWorkersAndRepeatable) {
  auto cfg = parse_config(
      "scenario:\n  name: sgd_linear_noise\n  params:\n    Q: [[2, 0], [0, 1]]\n    noise_atoms: [[1, 0], [0, -1], [-1, 1]]\n"
      "    t: 0.2\nensemble_size: 60\niterations: 12\nseed: 9\nrecord_every: 4\nregularity:\n  pairs: 500\n",
      "exp.yaml");
  const auto sc = std::get<Scenario<Euclidean>>(make_scenario(cfg));
  const auto a = run_scenario(sc, cfg);
  cfg.workers = 3;
  const auto b = run_scenario(sc, cfg);
  const auto c = run_scenario(sc, cfg);
  EXPECT_EQ(series_csv(a.series), series_csv(b.series));
  EXPECT_EQ(series_csv(b.series), series_csv(c.series));
  ASSERT_EQ(a.trajectory.steps.size(), 4u); // 0, 4, 8, 12
  for (std::size_t i = 0; i < a.trajectory.steps.size(); ++i)
    EXPECT_EQ(ensemble_csv(sc.space(), a.trajectory.steps[i].ensemble), ensemble_csv(sc.space(), b.trajectory.steps[i].ensemble));
  EXPECT_EQ(a.report.dump(), b.report.dump());
}

TEST(Run, TwoPointSeriesSitsAtTheFloorAfterOneStep) {
  const auto cfg = parse_config(kTwoPoint, "exp.yaml");
  const auto sc = std::get<Scenario<Euclidean>>(make_scenario(cfg));
  const auto res = run_scenario(sc, cfg);
  ASSERT_EQ(res.series.size(), 11u);
  EXPECT_GT(res.series[0].w2_to_reference, 3.0 * res.floor); // uniform start on [-3, 3]
  for (std::size_t k = 1; k < res.series.size(); ++k) EXPECT_LE(res.series[k].w2_to_reference, 3.0 * res.floor) << k;
  EXPECT_EQ(res.report["rates"]["status"], "converged within floor");
  const double extent = res.report["truth"]["trajectory_extent"];
  EXPECT_GE(extent, 1.0);
  EXPECT_LE(extent, 3.0);
}

TEST(Run, UserSuppliedReferenceIsUsed) {
  const auto dir = scratch("ref");
  {
    std::ofstream f(dir / "ref.csv");
    io::write_ensemble_csv(f, Euclidean(1), two_point_exact_ensemble(100));
  }
  auto cfg = parse_config(std::string("scenario:\n  name: two_point\nensemble_size: 100\niterations: 3\nseed: 1\n") +
                              "reference:\n  file: " + (dir / "ref.csv").string() + "\n",
                          "exp.yaml");
  const auto sc = std::get<Scenario<Euclidean>>(make_scenario(cfg));
  const auto res = run_scenario(sc, cfg);
  EXPECT_EQ(res.manifest["reference"]["source"], "file");
  const double direct = wasserstein(Euclidean(1), res.trajectory.final_ensemble(), two_point_exact_ensemble(100)).value;
  EXPECT_DOUBLE_EQ(res.series.back().w2_to_reference, direct);
  cfg.ensemble_size = 99;
  EXPECT_THROW(run_scenario(sc, cfg), InputError);
}

TEST(Commands, RegularityReportsForContraction) {
  const auto dir = scratch("reg");
  std::ofstream(dir / "exp.yaml") << "scenario:\n  name: contraction\n  params:\n    r: 0.5\n"
                                     "ensemble_size: 10\niterations: 1\nseed: 1\nregularity:\n  pairs: 2000\n";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_regularity((dir / "exp.yaml").string(), {(dir / "res").string(), {}, {}, {}}, out, err), 0) << err.str();
  const auto r = io::read_json((dir / "res" / "report.json").string());
  EXPECT_DOUBLE_EQ(r["regularity"]["alpha"].get<double>(), 0.75);
  EXPECT_LE(r["regularity"]["in_expectation"]["epsilon_hat"].get<double>(), 1e-10);
  EXPECT_EQ(r["regularity"]["operators"].size(), 2u);
}

TEST(Commands, RegularityForSgdStaysBelowClosedFormBound) {
  const auto dir = scratch("sgd");
  std::ofstream(dir / "exp.yaml")
      << "scenario:\n  name: sgd_linear_noise\n  params:\n    Q: [[1, 0.3], [0.3, -0.5]]\n"
         "    noise_atoms: [[1, 0], [0, 1]]\n    t: 0.4\nensemble_size: 10\niterations: 1\nseed: 1\n"
         "regularity:\n  pairs: 5000\n";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_regularity((dir / "exp.yaml").string(), {(dir / "res").string(), {}, {}, {}}, out, err), 0) << err.str();
  const auto r = io::read_json((dir / "res" / "report.json").string())["regularity"];
  EXPECT_EQ(r["bound"]["formula"], "forward_backward");
  EXPECT_GT(r["bound"]["epsilon"].get<double>(), 0.0);
  for (const auto& op : r["operators"])
    EXPECT_LE(op["epsilon_hat"].get<double>(), r["bound"]["epsilon"].get<double>() + 1e-6);
  EXPECT_EQ(r["within_bound"], true);
}

TEST(Commands, RateNeedsASeries) {
  const auto dir = scratch("rate_missing");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_rate(dir.string(), out, err), 2);
  EXPECT_NE(err.str().find("missing series"), std::string::npos);
}

TEST(Commands, RateFlagsSublinearSeries) {
  const auto dir = scratch("rate_sub");
  std::vector<io::SeriesRow> rows;
  for (std::size_t k = 0; k <= 200; ++k) rows.push_back({k, 1.0 / static_cast<double>(k + 1), std::nan(""), std::nan(""), std::nan("")});
  io::write_text((dir / "series.csv").string(), series_csv(rows));
  std::ostringstream out, err;
  ASSERT_EQ(cmd_rate(dir.string(), out, err), 0) << err.str();
  EXPECT_NE(out.str().find("nonlinear"), std::string::npos) << out.str();
  const auto r = io::read_json((dir / "report.json").string());
  EXPECT_EQ(r["rates"]["status"], "nonlinear");
  EXPECT_EQ(r["rates"]["r_rate"]["nonlinear"], true);
}

TEST(Commands, RateOnContractionRunPredictsRate) {
  const auto dir = scratch("rate_contraction");
  std::ofstream(dir / "exp.yaml") << "scenario:\n  name: contraction\n  params:\n    r: 0.5\n"
                                     "ensemble_size: 500\niterations: 25\nseed: 4\nregularity:\n  pairs: 1000\n";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run((dir / "exp.yaml").string(), {(dir / "res").string(), {}, {}, {}}, out, err), 0) << err.str();
  out.str("");
  ASSERT_EQ(cmd_rate((dir / "res").string(), out, err), 0) << err.str();
  EXPECT_NE(out.str().find("predicted rate c ="), std::string::npos) << out.str();
  const auto r = io::read_json((dir / "res" / "report.json").string())["rates"];
  EXPECT_EQ(r["status"], "linear");
  EXPECT_NEAR(r["q_rate"]["c"].get<double>(), 0.5, 0.1);
  EXPECT_LE(r["r_rate"]["c"].get<double>(), r["predicted_rate"]["c"].get<double>());
}

TEST(Commands, WassersteinBetweenFiles) {
  const auto dir = scratch("w2");
  io::write_text((dir / "a.csv").string(), "particle,x0,x1\n0,0,0\n1,1,0\n");
  io::write_text((dir / "b.csv").string(), "particle,x0,x1\n0,1,1\n1,0,1\n");
  io::write_text((dir / "c.csv").string(), "particle,x0\n0,0\n1,1\n");
  io::write_text((dir / "s.csv").string(), "particle,leg,radius\n0,0,1\n1,2,2\n");
  io::write_text((dir / "t.csv").string(), "particle,leg,radius\n0,1,1\n1,2,1\n");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_wasserstein((dir / "a.csv").string(), (dir / "b.csv").string(), 2.0, out, err), 0);
  EXPECT_EQ(out.str(), "1\n");
  out.str("");
  // legs 0 -> 1 cost 2, 2 -> 2 cost 1: W_2 = sqrt((4 + 1) / 2)
  EXPECT_EQ(cmd_wasserstein((dir / "s.csv").string(), (dir / "t.csv").string(), 2.0, out, err), 0);
  EXPECT_DOUBLE_EQ(std::stod(out.str()), std::sqrt(2.5));
  EXPECT_EQ(cmd_wasserstein((dir / "a.csv").string(), (dir / "c.csv").string(), 2.0, out, err), 2);
  EXPECT_EQ(cmd_wasserstein((dir / "a.csv").string(), (dir / "s.csv").string(), 2.0, out, err), 2);
  EXPECT_EQ(cmd_wasserstein((dir / "a.csv").string(), (dir / "nope.csv").string(), 2.0, out, err), 2);
}

TEST(Commands, InvalidConfigExitsWithTwo) {
  const auto dir = scratch("bad");
  std::ofstream(dir / "exp.yaml") << "scenario:\n  name: two_point\nensemble_size: 0\niterations: 1\nseed: 1\n";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run((dir / "exp.yaml").string(), {}, out, err), 2);
  EXPECT_NE(err.str().find("exp.yaml:3:"), std::string::npos) << err.str();
}
