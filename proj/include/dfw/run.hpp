#pragma once

// Full decentralized runs over a graph sequence, and Monte Carlo estimates of
// the expected metrics when the sequence is random.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "dfw/analysis.hpp"
#include "dfw/topology.hpp"

namespace dfw {

struct TraceRecord {
  std::size_t t = 0;
  double objective = 0.0;      // F(mean_i x^i_t)
  double gap = 0.0;            // objective - f*
  double consensus_err = 0.0;
  double tracking_err = 0.0;
  double theorem_bound = 0.0;
  std::size_t comm_rounds = 0;  // cumulative mixing rounds
  double lambda_t = 0.0;        // largest contraction factor among this iteration's matrices
};

struct RunOptions {
  StepSchedule schedule = StepSchedule::classic();
  std::size_t iters = 100;
  std::size_t tau = 1;
  std::optional<Vector> x0;   // shared start; default_start(set) when absent
  double f_star = 0.0;
  double lambda_padding = 1e-6;  // added to the sampled max lambda for random sequences
};

struct RunTrace {
  std::vector<TraceRecord> records;
  double lambda_max = 0.0;       // max lambda over all matrices used
  double lambda_for_theory = 0.0;
  std::optional<TheoryConstants> constants;  // absent when lambda_for_theory >= 1
  std::vector<double> tracker_mean_dev;
  bool feasible = true;
  std::vector<Vector> node_mean;  // mean_i x^i_t, kept only when requested
};

namespace detail {

inline double record_bound(const std::optional<TheoryConstants>& tc, std::size_t t) {
  if (!tc) return std::numeric_limits<double>::infinity();
  return t == 0 ? theorem_bound(*tc, 1) * 2.0 : theorem_bound(*tc, t);
}

}  // namespace detail

/// Runs decentralized FW with gradient tracking for `opt.iters` iterations and
/// returns iters + 1 trace rows (t = 0..iters). Each iteration consumes
/// opt.tau graphs from the sequence; both mixing stages apply all of them.
inline RunTrace run_decentralized(const ProblemInstance& inst, const GraphSequenceSpec& spec, const RunOptions& opt,
                                  bool keep_means = false) {
  if (opt.tau == 0) throw std::invalid_argument("run_decentralized: tau must be >= 1");
  if (opt.schedule.kind == ScheduleKind::ExactLineSearch)
    throw std::invalid_argument("run_decentralized: exact line search needs the global objective; use classic or power");
  if (spec.n_nodes != inst.n_nodes())
    throw std::invalid_argument("run_decentralized: graph and instance disagree on the node count");

  GraphSequence seq(spec);
  std::optional<MixingMatrix> fixed;
  auto draw = [&](std::vector<MixingMatrix>& out) {
    out.clear();
    for (std::size_t k = 0; k < opt.tau; ++k) {
      const Graph& g = seq.next();
      if (spec.kind == SequenceKind::Static) {
        if (!fixed) fixed = metropolis_weights(g);
        out.push_back(*fixed);
      } else {
        out.push_back(metropolis_weights(g));
      }
    }
  };
  auto round_lambda = [](const std::vector<MixingMatrix>& ms) {
    double l = 0.0;
    for (const auto& m : ms) l = std::max(l, m.lambda());
    return l;
  };

  RunTrace tr;
  tr.records.reserve(opt.iters + 1);
  std::vector<MixingMatrix> mats;
  draw(mats);

  const Vector x0 = opt.x0 ? *opt.x0 : default_start(inst.set);
  const Matrix start = x0.transpose().replicate(static_cast<Eigen::Index>(inst.n_nodes()), 1);
  NetworkState s = dfw_init(inst, start, mats);

  auto record = [&](double lambda_t) {
    TraceRecord r;
    r.t = s.t;
    const Vector mean = s.x.colwise().mean().transpose();
    r.objective = global_objective(inst, mean);
    r.gap = r.objective - opt.f_star;
    r.consensus_err = consensus_error(s);
    r.tracking_err = (s.tracker.rowwise() - s.grad.colwise().mean()).rowwise().norm().maxCoeff();
    r.comm_rounds = opt.tau * (s.t + 1);
    r.lambda_t = lambda_t;
    tr.records.push_back(r);
    tr.tracker_mean_dev.push_back(tracker_mean_deviation(s));
    tr.lambda_max = std::max(tr.lambda_max, lambda_t);
    if (!state_feasible(s, inst.set)) tr.feasible = false;
    if (keep_means) tr.node_mean.push_back(mean);
  };

  record(round_lambda(mats));
  for (std::size_t t = 0; t < opt.iters; ++t) {
    const double gamma = opt.schedule.gamma(t);
    draw(mats);
    dfw_step(s, inst, mats, gamma);
    record(round_lambda(mats));
  }

  tr.lambda_for_theory = tr.lambda_max + (spec.kind == SequenceKind::Static ? 0.0 : opt.lambda_padding);
  if (tr.lambda_for_theory < 1.0) {
    const double alpha = opt.schedule.kind == ScheduleKind::Power ? opt.schedule.alpha : 1.0;
    tr.constants = theory_constants(tr.lambda_for_theory, alpha, inst.n_nodes(), inst.set.diameter(), inst.smoothness);
  }
  for (auto& r : tr.records) r.theorem_bound = detail::record_bound(tr.constants, r.t);
  return tr;
}

// ---------------------------------------------------------------------------
// Monte Carlo over random graph sequences

struct MetricSeries {
  std::vector<double> mean;
  std::vector<double> stderr_;
};

struct ExpectedMetrics {
  std::vector<std::size_t> t;
  MetricSeries gap, consensus_err, tracking_err;
  double lambda_max = 0.0;  // over all trials
  std::vector<RunTrace> trials;
};

/// Calls body(k) for k in [0, n) on up to `workers` threads (0 = hardware
/// concurrency). The first exception thrown by any call is rethrown.
template <class Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body) {
  if (n == 0) return;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        body(k);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

/// Topology seed of trial k derived from a base seed.
inline std::uint64_t trial_seed(std::uint64_t base, std::size_t k) { return derive_seed(base, Stream::Trial, k); }

/// Sample mean and standard error (s / sqrt(n)) per t of the three metrics
/// over one run per topology seed. Trials execute on a worker pool; results
/// are reduced in seed order so they do not depend on scheduling.
inline ExpectedMetrics expected_metrics(const ProblemInstance& inst, const GraphSequenceSpec& base,
                                        const RunOptions& opt, const std::vector<std::uint64_t>& seeds,
                                        std::size_t workers = 0) {
  if (seeds.size() < 2) throw std::invalid_argument("expected_metrics: need at least two trials");
  ExpectedMetrics em;
  em.trials.resize(seeds.size());

  parallel_for(seeds.size(), workers, [&](std::size_t k) {
    GraphSequenceSpec spec = base;
    spec.seed = seeds[k];
    em.trials[k] = run_decentralized(inst, spec, opt);
  });

  const std::size_t rows = em.trials.front().records.size();
  const double n = static_cast<double>(seeds.size());
  auto reduce = [&](auto field, MetricSeries& out) {
    out.mean.assign(rows, 0.0);
    out.stderr_.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (const auto& tr : em.trials) sum += field(tr.records[r]);
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto& tr : em.trials) {
        const double dv = field(tr.records[r]) - mean;
        ss += dv * dv;
      }
      out.mean[r] = mean;
      out.stderr_[r] = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
  };
  reduce([](const TraceRecord& r) { return r.gap; }, em.gap);
  reduce([](const TraceRecord& r) { return r.consensus_err; }, em.consensus_err);
  reduce([](const TraceRecord& r) { return r.tracking_err; }, em.tracking_err);
  for (std::size_t r = 0; r < rows; ++r) em.t.push_back(em.trials.front().records[r].t);
  for (const auto& tr : em.trials) em.lambda_max = std::max(em.lambda_max, tr.lambda_max);
  return em;
}

inline ExpectedMetrics expected_metrics(const ProblemInstance& inst, const GraphSequenceSpec& base,
                                        const RunOptions& opt, std::size_t n_trials, std::size_t workers = 0) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < n_trials; ++k) seeds.push_back(trial_seed(base.seed, k));
  return expected_metrics(inst, base, opt, seeds, workers);
}

}  // namespace dfw
