#pragma once

// Experiment driver: assumption checks, cached reference optimum, the trial
// runs themselves, and everything written to the output directory.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfw/harness/config.hpp"
#include "dfw/harness/svg_plot.hpp"
#include "dfw/harness/trace_io.hpp"
#include "dfw/mixing.hpp"
#include "dfw/run.hpp"

namespace dfw::harness {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Assumption checks on sampled mixing matrices

struct SeriesValidation {
  std::string label;
  std::size_t samples = 0;
  double min_diagonal = std::numeric_limits<double>::infinity();
  double max_row_sum_error = 0.0;
  double max_col_sum_error = 0.0;
  double max_asymmetry = 0.0;
  double max_lambda = 0.0;
  std::size_t connectivity_failures = 0;
  double p = 0.0;
  double connectivity_threshold = 0.0;
  std::vector<std::string> warnings;
};

struct ValidationReport {
  std::vector<SeriesValidation> series;
  bool ok() const {
    for (const auto& s : series)
      if (s.max_lambda >= 1.0 || s.connectivity_failures > 0 || s.min_diagonal <= 0.0 || s.max_row_sum_error > 1e-12 ||
          s.max_col_sum_error > 1e-12)
        return false;
    return true;
  }
};

inline constexpr std::size_t kValidationSamples = 100;

inline ValidationReport validate_assumptions(const RunConfig& cfg, std::size_t samples = kValidationSamples) {
  validate(cfg);
  ValidationReport rep;
  const std::size_t n = cfg.instance.lasso.n_nodes;
  for (const auto& sc : cfg.series) {
    SeriesValidation v;
    v.label = sc.label;
    v.samples = samples;
    v.p = sc.topology.p;
    v.connectivity_threshold = connectivity_threshold(n);
    const auto spec = to_sequence_spec(sc.topology, n);
    GraphSequence seq(spec);
    for (std::size_t k = 0; k < samples; ++k) {
      const Graph& g = seq.next();
      if (!is_connected(g)) ++v.connectivity_failures;
      const MixingMatrix w = metropolis_weights(g);
      v.min_diagonal = std::min(v.min_diagonal, w.weights().diagonal().minCoeff());
      v.max_row_sum_error = std::max(v.max_row_sum_error, w.max_row_sum_error());
      v.max_col_sum_error = std::max(v.max_col_sum_error, w.max_col_sum_error());
      v.max_asymmetry = std::max(v.max_asymmetry, w.max_asymmetry());
      v.max_lambda = std::max(v.max_lambda, w.lambda());
    }
    const bool random_initial = sc.topology.kind == SequenceKind::ErdosRenyiPerRound || sc.topology.initial == "random";
    if (random_initial && n > 1 && !above_connectivity_threshold(spec))
      v.warnings.push_back("p = " + fmt_double(v.p) + " is at or below ln(N)/N = " +
                           fmt_double(v.connectivity_threshold) + "; connected draws will be rare");
    if (v.max_lambda >= 1.0) v.warnings.push_back("sampled lambda reached 1: the contraction assumption fails");
    if (v.connectivity_failures > 0)
      v.warnings.push_back(std::to_string(v.connectivity_failures) + " sampled graphs were disconnected");
    rep.series.push_back(std::move(v));
  }
  return rep;
}

inline json to_json(const ValidationReport& rep) {
  json arr = json::array();
  for (const auto& s : rep.series)
    arr.push_back({{"label", s.label},
                   {"samples", s.samples},
                   {"min_diagonal", s.min_diagonal},
                   {"max_row_sum_error", s.max_row_sum_error},
                   {"max_col_sum_error", s.max_col_sum_error},
                   {"max_asymmetry", s.max_asymmetry},
                   {"max_lambda", s.max_lambda},
                   {"connectivity_failures", s.connectivity_failures},
                   {"p", s.p},
                   {"connectivity_threshold", s.connectivity_threshold},
                   {"warnings", s.warnings}});
  return {{"ok", rep.ok()}, {"series", arr}};
}

/// ceil(1 / (1 - lambda)) from the largest sampled lambda over all series.
inline std::size_t auto_tau(const RunConfig& cfg) {
  double lam = 0.0;
  for (const auto& s : validate_assumptions(cfg).series) lam = std::max(lam, s.max_lambda);
  if (lam >= 1.0) throw DegenerateTopologyError("tau=auto: sampled lambda is 1, no finite number of rounds contracts");
  return static_cast<std::size_t>(std::ceil(1.0 / (1.0 - lam)));
}

// ---------------------------------------------------------------------------
// Reference optimum, cached per instance

inline json to_json(const ReferenceOptimum& ref, std::uint64_t hash) {
  return {{"instance_hash", hash},
          {"f_star", ref.f_star},
          {"fw_gap", ref.fw_gap},
          {"method", ref.method},
          {"iterations", ref.iterations}};
}

/// Loads out_dir/reference.json when it matches the instance hash, otherwise
/// computes the optimum and writes the file.
inline ReferenceOptimum cached_reference(const ProblemInstance& inst, const fs::path& out_dir) {
  const fs::path file = out_dir / "reference.json";
  const std::uint64_t hash = instance_hash(inst);
  if (fs::exists(file)) {
    try {
      const json j = json::parse(read_text(file));
      if (j.at("instance_hash").get<std::uint64_t>() == hash) {
        ReferenceOptimum ref;
        ref.f_star = j.at("f_star").get<double>();
        ref.fw_gap = j.at("fw_gap").get<double>();
        ref.method = j.at("method").get<std::string>();
        ref.iterations = j.at("iterations").get<std::size_t>();
        return ref;
      }
    } catch (const json::exception&) {
      // stale or malformed cache: recompute
    }
  }
  const ReferenceOptimum ref = reference_optimum(inst);
  write_text(file, to_json(ref, hash).dump(2) + "\n");
  return ref;
}

// ---------------------------------------------------------------------------
// Runs

struct SeriesResult {
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::vector<RunTrace> trials;
  Aggregate agg;
  double lambda_max = 0.0;  // over all trials
  std::optional<TheoryConstants> constants;
  std::size_t bound_violations = 0;
  std::size_t consensus_envelope_violations = 0;
  std::size_t tracking_envelope_violations = 0;
  double max_tracker_mean_dev = 0.0;
  bool feasible = true;
  double slope = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentResult {
  RunConfig config;  // as resolved (tau filled in)
  fs::path output_dir;
  ReferenceOptimum reference;
  std::uint64_t instance_hash = 0;
  std::vector<SeriesResult> series;
};

/// Trial seeds of a series: the topology seed itself for a single trial,
/// otherwise seeds derived from it.
inline std::vector<std::uint64_t> series_seeds(const SeriesConfig& s, std::size_t n_trials) {
  if (n_trials == 1) return {s.topology.seed};
  std::vector<std::uint64_t> out;
  for (std::size_t k = 0; k < n_trials; ++k) out.push_back(trial_seed(s.topology.seed, k));
  return out;
}

inline std::string slug(const std::string& label) {
  std::string out;
  for (char c : label) out += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ? c : '_';
  return out;
}

inline std::string trial_file(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%03zu.csv", k);
  return buf;
}

namespace detail {

inline void summarize(SeriesResult& sr, std::size_t iters) {
  // Constants from the worst lambda seen in any trial, so one envelope covers all of them.
  std::optional<TheoryConstants> tc;
  double lam_theory = 0.0;
  for (const auto& tr : sr.trials) {
    sr.lambda_max = std::max(sr.lambda_max, tr.lambda_max);
    if (tr.lambda_for_theory >= lam_theory) {
      lam_theory = tr.lambda_for_theory;
      tc = tr.constants;
    }
    for (double d : tr.tracker_mean_dev) sr.max_tracker_mean_dev = std::max(sr.max_tracker_mean_dev, d);
    sr.feasible = sr.feasible && tr.feasible;
  }
  for (const auto& tr : sr.trials)
    if (!tr.constants) tc.reset();
  sr.constants = tc;
  for (const auto& tr : sr.trials)
    for (const auto& r : tr.records) {
      if (r.t == 0) continue;
      if (r.gap > r.theorem_bound) ++sr.bound_violations;
      if (tc) {
        const double t = static_cast<double>(r.t);
        if (r.consensus_err > tc->c_p / t) ++sr.consensus_envelope_violations;
        if (r.tracking_err > tc->c_g / t) ++sr.tracking_envelope_violations;
      }
    }
  sr.agg = aggregate(sr.trials);
  if (iters >= 200) {
    std::vector<double> t(sr.agg.t.begin(), sr.agg.t.end());
    sr.slope = loglog_slope(t, sr.agg.gap_mean, 100.0, static_cast<double>(iters));
  }
}

inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json summary_json(const ExperimentResult& res) {
  json series = json::array();
  for (const auto& s : res.series) {
    json js{{"label", s.label},
            {"seeds", s.seeds},
            {"lambda_max", s.lambda_max},
            {"final_gap_mean", s.agg.gap_mean.empty() ? json(nullptr) : nullable(s.agg.gap_mean.back())},
            {"loglog_slope_gap", nullable(s.slope)},
            {"bound_violations", s.bound_violations},
            {"consensus_envelope_violations", s.consensus_envelope_violations},
            {"tracking_envelope_violations", s.tracking_envelope_violations},
            {"max_tracker_mean_deviation", s.max_tracker_mean_dev},
            {"feasible", s.feasible}};
    if (s.constants)
      js["constants"] = {{"lambda", s.constants->lambda}, {"alpha", s.constants->alpha}, {"t0", s.constants->t0},
                         {"c_p", s.constants->c_p},       {"c_g", s.constants->c_g},     {"rho_bar", s.constants->rho_bar},
                         {"smoothness", s.constants->smoothness}};
    else
      js["constants"] = nullptr;
    series.push_back(js);
  }
  return {{"experiment", res.config.experiment},
          {"instance_hash", res.instance_hash},
          {"f_star", res.reference.f_star},
          {"reference_fw_gap", res.reference.fw_gap},
          {"reference_method", res.reference.method},
          {"tau", *res.config.tau},
          {"iters", res.config.iters},
          {"n_trials", res.config.n_trials},
          {"series", series}};
}

inline void write_plots(const ExperimentResult& res) {
  const auto& pal = palette();
  auto times = [](const Aggregate& a) { return std::vector<double>(a.t.begin(), a.t.end()); };
  auto envelope = [](const Aggregate& a, double c) {
    std::vector<double> y;
    for (auto t : a.t) y.push_back(t == 0 ? std::numeric_limits<double>::quiet_NaN() : c / static_cast<double>(t));
    return y;
  };

  LogLogPlot gap{"Optimality gap", "iteration t", "F(mean x_t) - F*", {}};
  LogLogPlot bound{"Optimality gap and theoretical bound", "iteration t", "F(mean x_t) - F*", {}};
  LogLogPlot comm{"Optimality gap per communication", "communication rounds", "F(mean x_t) - F*", {}};
  LogLogPlot cons{"Consensus error", "iteration t", "max_i |x_bar_i - mean x|", {}};
  LogLogPlot track{"Gradient tracking error", "iteration t", "max_i |s_i - mean grad|", {}};
  for (std::size_t i = 0; i < res.series.size(); ++i) {
    const auto& s = res.series[i];
    const std::string& color = pal[i % pal.size()];
    const auto t = times(s.agg);
    gap.series.push_back({s.label, t, s.agg.gap_mean, color, false});
    bound.series.push_back({s.label, t, s.agg.gap_mean, color, false});
    bound.series.push_back({s.label + " bound", t, s.agg.bound, color, true});
    std::vector<double> rounds;
    for (const auto& r : s.trials.front().records) rounds.push_back(static_cast<double>(r.comm_rounds));
    comm.series.push_back({s.label, rounds, s.agg.gap_mean, color, false});
    cons.series.push_back({s.label, t, s.agg.cons_mean, color, false});
    track.series.push_back({s.label, t, s.agg.track_mean, color, false});
    if (s.constants) {
      cons.series.push_back({s.label + " C_p/t", t, envelope(s.agg, s.constants->c_p), color, true});
      track.series.push_back({s.label + " C_g/t", t, envelope(s.agg, s.constants->c_g), color, true});
    }
  }
  write_text(res.output_dir / "gap.svg", render_svg(gap));
  write_text(res.output_dir / "bound.svg", render_svg(bound));
  write_text(res.output_dir / "gap_vs_comm.svg", render_svg(comm));
  write_text(res.output_dir / "consensus.svg", render_svg(cons));
  write_text(res.output_dir / "tracking.svg", render_svg(track));
}

}  // namespace detail

/// Runs every (series, trial) pair and writes:
///   config.resolved.json, reference.json, summary.json, instance/,
///   <series>/trial_NNN.csv, <series>/aggregate.csv and, when iters > 0, the SVG plots
///   gap, bound, consensus, tracking and gap_vs_comm.
/// Output bytes depend only on the configuration.
inline ExperimentResult run_experiment(RunConfig cfg) {
  validate(cfg);
  if (!cfg.tau) cfg.tau = auto_tau(cfg);

  ExperimentResult res;
  res.output_dir = resolve_output_dir(cfg);
  fs::create_directories(res.output_dir);
  const ProblemInstance inst = lasso_instance(cfg.instance.lasso);
  res.instance_hash = instance_hash(inst);
  res.reference = cached_reference(inst, res.output_dir);
  save_instance(inst, res.output_dir / "instance");

  RunOptions opt;
  opt.schedule = cfg.schedule;
  opt.iters = cfg.iters;
  opt.tau = *cfg.tau;
  opt.f_star = res.reference.f_star;

  const std::size_t n_series = cfg.series.size(), n_trials = cfg.n_trials;
  res.series.resize(n_series);
  for (std::size_t s = 0; s < n_series; ++s) {
    res.series[s].label = cfg.series[s].label;
    res.series[s].seeds = series_seeds(cfg.series[s], n_trials);
    res.series[s].trials.resize(n_trials);
  }
  parallel_for(n_series * n_trials, cfg.workers, [&](std::size_t job) {
    const std::size_t s = job / n_trials, k = job % n_trials;
    GraphSequenceSpec spec = to_sequence_spec(cfg.series[s].topology, inst.n_nodes());
    spec.seed = res.series[s].seeds[k];
    res.series[s].trials[k] = run_decentralized(inst, spec, opt);
  });

  json echo = to_json(cfg);
  for (std::size_t s = 0; s < n_series; ++s) {
    auto& sr = res.series[s];
    detail::summarize(sr, cfg.iters);
    echo["series"][s]["trial_seeds"] = sr.seeds;
    const fs::path dir = res.output_dir / slug(sr.label);
    for (std::size_t k = 0; k < n_trials; ++k) {
      const auto& records = sr.trials[k].records;
      write_text(dir / trial_file(k), trace_csv(cfg.iters == 0 ? std::vector<TraceRecord>{} : records));
    }
    write_text(dir / "aggregate.csv", aggregate_csv(cfg.iters == 0 ? Aggregate{} : sr.agg));
  }
  res.config = cfg;
  write_text(res.output_dir / "config.resolved.json", echo.dump(2) + "\n");
  write_text(res.output_dir / "summary.json", detail::summary_json(res).dump(2) + "\n");
  if (cfg.iters > 0) detail::write_plots(res);
  return res;
}

}  // namespace dfw::harness
