#pragma once

// Experiment configuration: a single JSON document, builtin presets, and the
// fully-resolved form echoed next to every run.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfw/problem.hpp"
#include "dfw/solver.hpp"
#include "dfw/topology.hpp"

namespace dfw::harness {

using nlohmann::json;

inline constexpr const char* kOutputRootEnv = "DFW_OUTPUT_ROOT";

struct InstanceConfig {
  LassoParams lasso;
};

struct TopologyConfig {
  SequenceKind kind = SequenceKind::ErdosRenyiPerRound;
  double p = 0.5;
  std::size_t swaps = 1;
  std::uint64_t seed = 1;
  bool require_connected = true;
  std::string initial = "random";  // random | complete | path | ring
};

struct SeriesConfig {
  std::string label;
  TopologyConfig topology;
};

struct RunConfig {
  std::string experiment = "custom";
  InstanceConfig instance;
  std::vector<SeriesConfig> series;  // at least one after resolution
  StepSchedule schedule = StepSchedule::power(1.0);
  std::size_t iters = 2000;
  std::optional<std::size_t> tau = 1;  // empty = auto: ceil(1 / (1 - sampled max lambda))
  std::size_t n_trials = 1;
  std::size_t workers = 0;
  std::string output_dir = "out";
};

inline Graph initial_graph_by_name(const std::string& name, std::size_t n) {
  if (name == "complete") return Graph::complete(n);
  if (name == "path") return Graph::path(n);
  if (name == "ring") return Graph::ring(n);
  throw std::invalid_argument("unknown initial graph '" + name + "'");
}

inline GraphSequenceSpec to_sequence_spec(const TopologyConfig& t, std::size_t n_nodes) {
  GraphSequenceSpec spec;
  spec.kind = t.kind;
  spec.n_nodes = n_nodes;
  spec.p = t.p;
  spec.swaps_per_round = t.swaps;
  spec.seed = t.seed;
  spec.require_connected = t.require_connected;
  if (t.initial != "random") spec.initial = initial_graph_by_name(t.initial, n_nodes);
  return spec;
}

// ---------------------------------------------------------------------------
// JSON <-> config

inline json to_json(const TopologyConfig& t) {
  return {{"kind", to_string(t.kind)}, {"p", t.p},           {"swaps", t.swaps},
          {"seed", t.seed},            {"require_connected", t.require_connected}, {"initial", t.initial}};
}

inline json to_json(const RunConfig& c) {
  const auto& l = c.instance.lasso;
  json series = json::array();
  for (const auto& s : c.series) series.push_back({{"label", s.label}, {"topology", to_json(s.topology)}});
  json j;
  j["experiment"] = c.experiment;
  j["instance"] = {{"n_nodes", l.n_nodes},     {"dim", l.dim},           {"rows_per_node", l.rows_per_node},
                   {"radius", l.radius},       {"noise_std", l.noise_std}, {"sparsity", l.sparsity},
                   {"planted_l1", l.planted_l1}, {"data_seed", l.seed}};
  j["series"] = series;
  j["schedule"] = {{"kind", to_string(c.schedule.kind)}, {"alpha", c.schedule.alpha}};
  j["iters"] = c.iters;
  j["tau"] = c.tau ? json(*c.tau) : json("auto");
  j["n_trials"] = c.n_trials;
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  return j;
}

namespace detail {

inline void apply_topology(const json& j, TopologyConfig& t) {
  if (j.contains("kind")) t.kind = sequence_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("p")) t.p = j.at("p").get<double>();
  if (j.contains("swaps")) t.swaps = j.at("swaps").get<std::size_t>();
  if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("require_connected")) t.require_connected = j.at("require_connected").get<bool>();
  if (j.contains("initial")) t.initial = j.at("initial").get<std::string>();
}

}  // namespace detail

/// Applies every key present in `j` on top of `c`. Unknown top-level keys are
/// rejected so typos do not silently fall back to defaults.
inline void apply_json(const json& j, RunConfig& c) {
  static const std::vector<std::string> known{"experiment", "instance", "topology", "series", "schedule", "iters",
                                              "tau",        "n_trials", "workers",  "output_dir"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("config: unknown key '" + key + "'");

  if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
  if (j.contains("instance")) {
    const auto& ji = j.at("instance");
    auto& l = c.instance.lasso;
    if (ji.contains("n_nodes")) l.n_nodes = ji.at("n_nodes").get<std::size_t>();
    if (ji.contains("dim")) l.dim = ji.at("dim").get<std::size_t>();
    if (ji.contains("rows_per_node")) l.rows_per_node = ji.at("rows_per_node").get<std::size_t>();
    if (ji.contains("radius")) l.radius = ji.at("radius").get<double>();
    if (ji.contains("noise_std")) l.noise_std = ji.at("noise_std").get<double>();
    if (ji.contains("sparsity")) l.sparsity = ji.at("sparsity").get<std::size_t>();
    if (ji.contains("planted_l1")) l.planted_l1 = ji.at("planted_l1").get<double>();
    if (ji.contains("data_seed")) l.seed = ji.at("data_seed").get<std::uint64_t>();
  }
  if (j.contains("series")) {
    c.series.clear();
    for (const auto& js : j.at("series")) {
      SeriesConfig s;
      s.label = js.value("label", "series" + std::to_string(c.series.size()));
      if (js.contains("topology")) detail::apply_topology(js.at("topology"), s.topology);
      c.series.push_back(std::move(s));
    }
  }
  if (j.contains("topology")) {
    // A bare topology block patches every series (or defines the only one).
    if (c.series.empty()) c.series.push_back({"default", {}});
    for (auto& s : c.series) detail::apply_topology(j.at("topology"), s.topology);
  }
  if (j.contains("schedule")) {
    const auto& js = j.at("schedule");
    const auto kind = schedule_kind_from_string(js.value("kind", to_string(c.schedule.kind)));
    const double alpha = js.value("alpha", c.schedule.alpha);
    c.schedule = kind == ScheduleKind::Classic  ? StepSchedule::classic()
                 : kind == ScheduleKind::Power ? StepSchedule::power(alpha)
                                               : StepSchedule::exact_line_search();
  }
  if (j.contains("iters")) c.iters = j.at("iters").get<std::size_t>();
  if (j.contains("tau")) {
    const auto& jt = j.at("tau");
    if (jt.is_string()) {
      if (jt.get<std::string>() != "auto") throw std::invalid_argument("config: tau must be a positive integer or \"auto\"");
      c.tau.reset();
    } else {
      c.tau = jt.get<std::size_t>();
    }
  }
  if (j.contains("n_trials")) c.n_trials = j.at("n_trials").get<std::size_t>();
  if (j.contains("workers")) c.workers = j.at("workers").get<std::size_t>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
}

inline void validate(const RunConfig& c) {
  const auto& l = c.instance.lasso;
  if (l.n_nodes == 0 || l.dim == 0 || l.rows_per_node == 0)
    throw std::invalid_argument("config: instance sizes must be positive");
  if (!(l.radius > 0.0)) throw std::invalid_argument("config: radius must be positive");
  if (l.noise_std < 0.0) throw std::invalid_argument("config: noise_std must be nonnegative");
  if (c.series.empty()) throw std::invalid_argument("config: no topology given");
  if (c.tau && *c.tau == 0) throw std::invalid_argument("config: tau must be >= 1");
  if (c.n_trials == 0) throw std::invalid_argument("config: n_trials must be >= 1");
  if (c.schedule.kind == ScheduleKind::ExactLineSearch)
    throw std::invalid_argument("config: the decentralized solver needs an open-loop schedule (classic or power)");
  for (const auto& s : c.series) {
    if (!(s.topology.p >= 0.0 && s.topology.p <= 1.0))
      throw std::invalid_argument("config: series '" + s.label + "' has p outside [0, 1]");
    if (s.label.empty()) throw std::invalid_argument("config: series labels must be non-empty");
  }
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: " + path.string() + ": " + e.what());
  }
  apply_json(j, base);
  return base;
}

// ---------------------------------------------------------------------------
// Presets reproducing the two figure layouts.

inline RunConfig preset(const std::string& name) {
  RunConfig c;
  c.experiment = name;
  c.output_dir = "out/" + name;
  c.iters = 2000;
  c.schedule = StepSchedule::power(1.0);
  auto er = [](double p, std::uint64_t seed) {
    TopologyConfig t;
    t.kind = SequenceKind::ErdosRenyiPerRound;
    t.p = p;
    t.seed = seed;
    return t;
  };
  if (name == "fig1-n5" || name == "fig1-n25" || name == "fig1-n100") {
    c.instance.lasso.n_nodes = std::stoul(name.substr(6));
    for (double p : {0.95, 0.8, 0.5}) {
      char label[16];
      std::snprintf(label, sizeof label, "p=%.2f", p);
      c.series.push_back({label, er(p, 11)});
    }
    return c;
  }
  if (name == "fig2-swap") {
    c.instance.lasso.n_nodes = 25;
    for (std::size_t swaps : {1, 2, 5}) {
      TopologyConfig t = er(0.5, 21);
      t.kind = SequenceKind::EdgeSwap;
      t.swaps = swaps;
      c.series.push_back({"swaps=" + std::to_string(swaps), t});
    }
    return c;
  }
  throw std::invalid_argument("unknown preset '" + name + "' (expected fig1-n5, fig1-n25, fig1-n100, fig2-swap)");
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig1-n5", "fig1-n25", "fig1-n100", "fig2-swap"};
  return names;
}

/// output_dir, resolved against $DFW_OUTPUT_ROOT when relative.
inline std::filesystem::path resolve_output_dir(const RunConfig& c) {
  std::filesystem::path out(c.output_dir);
  if (out.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) out = std::filesystem::path(root) / out;
  }
  return out;
}

}  // namespace dfw::harness
