// dfw: run decentralized Frank-Wolfe experiments from JSON configs.
//
//   dfw run --config cfg.json [--preset fig1-n5] [--out dir] [--trials K] [--seed S]
//   dfw validate --config cfg.json
//   dfw reference --config cfg.json

#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dfw/harness/experiment.hpp"

namespace {

using namespace dfw::harness;

struct Common {
  std::string config_path;
  std::string preset_name;
  std::string out;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iters;
  std::optional<std::size_t> workers;
};

RunConfig resolve(const Common& c) {
  if (c.config_path.empty() && c.preset_name.empty()) throw std::invalid_argument("need --config or --preset");
  RunConfig cfg = c.preset_name.empty() ? RunConfig{} : preset(c.preset_name);
  if (!c.config_path.empty()) cfg = load_config(c.config_path, cfg);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.trials) cfg.n_trials = *c.trials;
  if (c.iters) cfg.iters = *c.iters;
  if (c.workers) cfg.workers = *c.workers;
  if (c.seed)
    for (auto& s : cfg.series) s.topology.seed = *c.seed;
  validate(cfg);
  return cfg;
}

void add_common(CLI::App* sub, Common& c, bool run_flags) {
  sub->add_option("--config", c.config_path, "JSON configuration file");
  sub->add_option("--preset", c.preset_name, "builtin preset: fig1-n5, fig1-n25, fig1-n100, fig2-swap");
  sub->add_option("--out", c.out, "output directory (relative paths resolve under $DFW_OUTPUT_ROOT)");
  if (!run_flags) return;
  sub->add_option("--trials", c.trials, "number of trials per series");
  sub->add_option("--seed", c.seed, "topology seed for every series");
  sub->add_option("--iters", c.iters, "iterations per run");
  sub->add_option("--workers", c.workers, "worker threads (0 = all cores)");
}

int cmd_run(const Common& c) {
  const RunConfig cfg = resolve(c);
  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult res = run_experiment(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("experiment %s: %zu series x %zu trials, %zu iterations, tau=%zu, f*=%.12g\n", cfg.experiment.c_str(),
              res.series.size(), res.config.n_trials, cfg.iters, *res.config.tau, res.reference.f_star);
  for (const auto& s : res.series) {
    const double last = s.agg.gap_mean.empty() ? 0.0 : s.agg.gap_mean.back();
    std::printf("  %-12s lambda_max=%.4f final_gap=%.6g slope=%.4f bound_violations=%zu\n", s.label.c_str(),
                s.lambda_max, last, s.slope, s.bound_violations);
  }
  std::printf("wrote %s (%.2fs)\n", res.output_dir.string().c_str(), secs);
  return 0;
}

int cmd_validate(const Common& c) {
  const ValidationReport rep = validate_assumptions(resolve(c));
  std::cout << to_json(rep).dump(2) << '\n';
  for (const auto& s : rep.series)
    for (const auto& w : s.warnings) std::cerr << "warning: " << s.label << ": " << w << '\n';
  return rep.ok() ? 0 : 2;
}

int cmd_reference(const Common& c) {
  const RunConfig cfg = resolve(c);
  const auto out = resolve_output_dir(cfg);
  std::filesystem::create_directories(out);
  const auto inst = dfw::lasso_instance(cfg.instance.lasso);
  const auto ref = cached_reference(inst, out);
  std::cout << to_json(ref, dfw::instance_hash(inst)).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized Frank-Wolfe experiments"};
  app.require_subcommand(1);
  Common run_opts, validate_opts, reference_opts;
  auto* run = app.add_subcommand("run", "run an experiment and write traces, plots and a summary");
  add_common(run, run_opts, true);
  auto* val = app.add_subcommand("validate", "check mixing assumptions on 100 sampled graphs per series");
  add_common(val, validate_opts, false);
  auto* ref = app.add_subcommand("reference", "compute (or load cached) F* for the configured instance");
  add_common(ref, reference_opts, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (val->parsed()) return cmd_validate(validate_opts);
    if (ref->parsed()) return cmd_reference(reference_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
