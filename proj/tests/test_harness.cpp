#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cstdlib>
#include <sstream>

#include "dfw/harness/experiment.hpp"

using namespace dfw;
using namespace dfw::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dfw_harness_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig tiny(const fs::path& out) {
  RunConfig c;
  c.experiment = "tiny";
  c.instance.lasso.n_nodes = 4;
  c.instance.lasso.dim = 12;
  c.instance.lasso.rows_per_node = 5;
  c.instance.lasso.radius = 3.0;
  c.series = {{"p=0.9", {}}, {"p=0.6", {}}};
  c.series[0].topology.p = 0.9;
  c.series[1].topology.p = 0.6;
  c.iters = 60;
  c.n_trials = 2;
  c.output_dir = out.string();
  return c;
}

bool well_formed_xml(const std::string& text) {
  try {
    std::istringstream is(text);
    boost::property_tree::ptree pt;
    boost::property_tree::read_xml(is, pt);
    return pt.count("svg") == 1;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

TEST(TraceCsv, HeaderAndRoundTrip) {
  TraceRecord r{3, 1.0 / 3.0, 1e-300, 0.1, 0.2, std::numeric_limits<double>::infinity(), 4, 0.5};
  const std::string csv = trace_csv({r});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,objective,gap,consensus_err,tracking_err,theorem_bound,comm_rounds,lambda_t");
  EXPECT_NE(csv.find("0.33333333333333331"), std::string::npos);
  const auto back = parse_trace_csv(csv);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].objective, r.objective);
  EXPECT_EQ(back[0].gap, r.gap);
  EXPECT_EQ(back[0].theorem_bound, r.theorem_bound);
  EXPECT_EQ(back[0].comm_rounds, 4u);
  EXPECT_THROW(parse_trace_csv("t,gap\n"), std::invalid_argument);
}

TEST(Config, JsonRoundTripAndOverrides) {
  RunConfig c = preset("fig2-swap");
  c.tau.reset();
  RunConfig back;
  apply_json(to_json(c), back);
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_FALSE(back.tau.has_value());

  apply_json(json::parse(R"({"topology": {"seed": 5}, "iters": 10, "tau": 2})"), back);
  for (const auto& s : back.series) EXPECT_EQ(s.topology.seed, 5u);
  EXPECT_EQ(back.series[2].topology.swaps, 5u);
  EXPECT_EQ(back.iters, 10u);
  EXPECT_EQ(*back.tau, 2u);
}

TEST(Config, RejectsInvalidFields) {
  RunConfig c;
  EXPECT_THROW(apply_json(json::parse(R"({"iterations": 5})"), c), std::invalid_argument);
  EXPECT_THROW(apply_json(json::parse(R"({"tau": "many"})"), c), std::invalid_argument);
  EXPECT_THROW(apply_json(json::parse(R"({"schedule": {"kind": "armijo"}})"), c), std::invalid_argument);
  EXPECT_THROW(apply_json(json::parse(R"({"schedule": {"kind": "power", "alpha": 2}})"), c), std::invalid_argument);
  EXPECT_THROW(validate(c), std::invalid_argument);  // no series
  c = preset("fig1-n5");
  c.tau = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = preset("fig1-n5");
  c.schedule = StepSchedule::exact_line_search();
  EXPECT_THROW(validate(c), std::invalid_argument);
  EXPECT_THROW(preset("fig3"), std::invalid_argument);
  EXPECT_THROW(load_config("/nonexistent/cfg.json"), std::invalid_argument);
}

TEST(Config, Presets) {
  for (const auto& name : preset_names()) {
    const RunConfig c = preset(name);
    EXPECT_NO_THROW(validate(c));
    EXPECT_EQ(c.series.size(), 3u);
    EXPECT_EQ(c.iters, 2000u);
  }
  const RunConfig f1 = preset("fig1-n100");
  EXPECT_EQ(f1.instance.lasso.n_nodes, 100u);
  EXPECT_EQ(f1.series[0].topology.p, 0.95);
  EXPECT_EQ(f1.series[2].topology.p, 0.5);
  const RunConfig f2 = preset("fig2-swap");
  EXPECT_EQ(f2.series[0].topology.kind, SequenceKind::EdgeSwap);
  EXPECT_EQ(f2.series[0].topology.p, 0.5);
  EXPECT_EQ(f2.series[1].topology.swaps, 2u);
}

TEST(Config, PresetFilesMatchBuiltins) {
  for (const auto& name : preset_names()) {
    const fs::path file = fs::path(DFW_SOURCE_DIR) / "configs" / (name + ".json");
    ASSERT_TRUE(fs::exists(file)) << file;
    EXPECT_EQ(to_json(load_config(file)), to_json(preset(name))) << name;
  }
}

TEST(Config, OutputRootFromEnvironment) {
  RunConfig c;
  c.output_dir = "rel/dir";
  ::setenv(kOutputRootEnv, "/tmp/root", 1);
  EXPECT_EQ(resolve_output_dir(c), fs::path("/tmp/root/rel/dir"));
  c.output_dir = "/abs/dir";
  EXPECT_EQ(resolve_output_dir(c), fs::path("/abs/dir"));
  ::unsetenv(kOutputRootEnv);
  c.output_dir = "rel/dir";
  EXPECT_EQ(resolve_output_dir(c), fs::path("rel/dir"));
}

TEST(Validate, CompleteStaticGraph) {
  RunConfig c;
  c.instance.lasso.n_nodes = 5;
  c.series = {{"k5", {}}};
  c.series[0].topology.kind = SequenceKind::Static;
  c.series[0].topology.initial = "complete";
  const auto rep = validate_assumptions(c);
  ASSERT_EQ(rep.series.size(), 1u);
  EXPECT_NEAR(rep.series[0].max_lambda, 0.0, 1e-10);
  EXPECT_NEAR(rep.series[0].min_diagonal, 0.2, 1e-15);
  EXPECT_TRUE(rep.series[0].warnings.empty());
  EXPECT_TRUE(rep.ok());
}

TEST(Validate, SparseErdosRenyiWarns) {
  RunConfig c;
  c.instance.lasso.n_nodes = 5;
  c.series = {{"sparse", {}}};
  c.series[0].topology.p = 0.2;
  const auto rep = validate_assumptions(c);
  ASSERT_EQ(rep.series[0].warnings.size(), 1u);
  EXPECT_NE(rep.series[0].warnings[0].find("ln(N)/N"), std::string::npos);
  EXPECT_NEAR(rep.series[0].connectivity_threshold, std::log(5.0) / 5.0, 1e-15);
  EXPECT_EQ(rep.series[0].connectivity_failures, 0u);
  EXPECT_LE(rep.series[0].max_row_sum_error, 1e-12);
  EXPECT_LE(rep.series[0].max_col_sum_error, 1e-12);
}

TEST(Validate, DisconnectedSamplesAreReported) {
  RunConfig c;
  c.instance.lasso.n_nodes = 6;
  c.series = {{"loose", {}}};
  c.series[0].topology.p = 0.1;
  c.series[0].topology.require_connected = false;
  const auto rep = validate_assumptions(c);
  EXPECT_GT(rep.series[0].connectivity_failures, 0u);
  EXPECT_NEAR(rep.series[0].max_lambda, 1.0, 1e-9);
  EXPECT_FALSE(rep.ok());
  EXPECT_TRUE(to_json(rep).at("ok") == false);
}

TEST(Experiment, WritesArtifacts) {
  const fs::path out = scratch("artifacts");
  const auto res = run_experiment(tiny(out));
  for (const char* f : {"config.resolved.json", "reference.json", "summary.json", "gap.svg", "bound.svg",
                        "consensus.svg", "tracking.svg", "gap_vs_comm.svg", "instance/instance.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  for (const char* s : {"p_0.9", "p_0.6"}) {
    for (const char* f : {"trial_000.csv", "trial_001.csv"}) {
      const auto rows = parse_trace_csv(read_text(out / s / f));
      EXPECT_EQ(rows.size(), 61u);
      for (const auto& r : rows) EXPECT_GE(r.gap, -1e-9);
    }
    EXPECT_TRUE(fs::exists(out / s / "aggregate.csv"));
  }
  for (const char* f : {"gap.svg", "bound.svg", "consensus.svg", "tracking.svg", "gap_vs_comm.svg"}) {
    const std::string svg = read_text(out / f);
    EXPECT_TRUE(well_formed_xml(svg)) << f;
    EXPECT_EQ(svg.find("href"), std::string::npos) << f;
  }
  const json echo = json::parse(read_text(out / "config.resolved.json"));
  EXPECT_EQ(echo.at("series")[0].at("trial_seeds").size(), 2u);
  EXPECT_EQ(echo.at("instance").at("data_seed"), 1);
  EXPECT_EQ(echo.at("tau"), 1);
  const json summary = json::parse(read_text(out / "summary.json"));
  EXPECT_EQ(summary.at("series").size(), 2u);
  EXPECT_EQ(res.series[0].max_tracker_mean_dev <= 1e-9, true);
  fs::remove_all(out);
}

TEST(Experiment, ReplayIsByteIdentical) {
  const fs::path a = scratch("replay_a"), b = scratch("replay_b");
  RunConfig ca = tiny(a);
  ca.workers = 1;
  run_experiment(ca);
  // Replay the echoed config with a different worker count into another directory.
  RunConfig cb = load_config(a / "config.resolved.json");
  cb.output_dir = b.string();
  cb.workers = 4;
  run_experiment(cb);
  for (const char* f : {"p_0.9/trial_000.csv", "p_0.9/trial_001.csv", "p_0.6/trial_000.csv", "p_0.6/aggregate.csv",
                        "summary.json", "gap.svg", "reference.json", "instance/node_0.csv"})
    EXPECT_EQ(read_text(a / f), read_text(b / f)) << f;
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, ZeroIterationsWritesHeaderOnly) {
  const fs::path out = scratch("zero");
  RunConfig c = tiny(out);
  c.iters = 0;
  c.n_trials = 1;
  run_experiment(c);
  EXPECT_EQ(read_text(out / "p_0.9" / "trial_000.csv"), std::string(kTraceHeader) + "\n");
  EXPECT_FALSE(fs::exists(out / "gap.svg"));
  fs::remove_all(out);
}

TEST(Experiment, AutoTauUsesSampledLambda) {
  const fs::path out = scratch("auto_tau");
  RunConfig c = tiny(out);
  c.tau.reset();
  c.iters = 5;
  double lam = 0.0;
  for (const auto& s : validate_assumptions(c).series) lam = std::max(lam, s.max_lambda);
  const auto res = run_experiment(c);
  EXPECT_EQ(*res.config.tau, static_cast<std::size_t>(std::ceil(1.0 / (1.0 - lam))));
  EXPECT_EQ(res.series[0].trials[0].records[1].comm_rounds, 2 * *res.config.tau);
  fs::remove_all(out);
}

TEST(Experiment, ReferenceIsCachedByInstanceHash) {
  const fs::path out = scratch("cache");
  fs::create_directories(out);
  const auto inst = lasso_instance(tiny(out).instance.lasso);
  const auto first = cached_reference(inst, out);
  // A forged cache entry with the right hash is trusted; a wrong hash is recomputed.
  json j = json::parse(read_text(out / "reference.json"));
  j["f_star"] = -1.0;
  write_text(out / "reference.json", j.dump());
  EXPECT_EQ(cached_reference(inst, out).f_star, -1.0);
  j["instance_hash"] = instance_hash(inst) + 1;
  write_text(out / "reference.json", j.dump());
  EXPECT_EQ(cached_reference(inst, out).f_star, first.f_star);
  fs::remove_all(out);
}

TEST(Experiment, UnwritableOutputFails) {
  RunConfig c = tiny("/proc/dfw_cannot_write_here");
  EXPECT_ANY_THROW(run_experiment(c));
}

TEST(Svg, DropsNonPositivePointsAndEscapesText) {
  LogLogPlot p{"a < b & c", "t", "y", {{"s\"1", {0, 1, 10, 100}, {5, 1, -1, 0.01}, "#000000", false}}};
  const std::string svg = render_svg(p);
  EXPECT_TRUE(well_formed_xml(svg));
  EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_NE(svg.find("s&quot;1"), std::string::npos);
  const auto pts = svg.substr(svg.find("points=\""));
  EXPECT_EQ(std::count(pts.begin(), pts.begin() + static_cast<long>(pts.find("\"/>")), ','), 2);
}
