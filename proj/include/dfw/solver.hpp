#pragma once

// Centralized Frank-Wolfe and decentralized Frank-Wolfe with gradient tracking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfw/errors.hpp"
#include "dfw/mixing.hpp"
#include "dfw/problem.hpp"

namespace dfw {

enum class ScheduleKind { Classic, Power, ExactLineSearch };

/// Step-size rule. Iterations are counted from t = 0:
///   Classic: 2 / (t + 2)
///   Power:   1 / (t + 1)^alpha   (the 1/s^alpha rule with s = t + 1 >= 1)
///   ExactLineSearch: exact minimizer of the quadratic along the FW segment,
///   available to the centralized solver only.
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::Classic;
  double alpha = 1.0;

  static StepSchedule classic() { return {ScheduleKind::Classic, 1.0}; }
  static StepSchedule power(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("StepSchedule: alpha must lie in (0, 1]");
    return {ScheduleKind::Power, alpha};
  }
  static StepSchedule exact_line_search() { return {ScheduleKind::ExactLineSearch, 1.0}; }

  double gamma(std::size_t t) const {
    const double s = static_cast<double>(t);
    switch (kind) {
      case ScheduleKind::Classic: return 2.0 / (s + 2.0);
      case ScheduleKind::Power: return 1.0 / std::pow(s + 1.0, alpha);
      case ScheduleKind::ExactLineSearch: break;
    }
    throw std::logic_error("StepSchedule: exact line search has no open-loop step");
  }
};

inline std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::Classic: return "classic";
    case ScheduleKind::Power: return "power";
    case ScheduleKind::ExactLineSearch: return "exact_line_search";
  }
  return "?";
}

inline ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "classic") return ScheduleKind::Classic;
  if (s == "power") return ScheduleKind::Power;
  if (s == "exact_line_search" || s == "line_search") return ScheduleKind::ExactLineSearch;
  throw std::invalid_argument("unknown schedule kind '" + s + "'");
}

/// A feasible starting point: the center of the l1 ball, the first simplex
/// vertex, or the lower corner of a box.
inline Vector default_start(const FeasibleSet& set) {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(set.dim()));
  switch (set.kind()) {
    case SetKind::L1Ball: break;
    case SetKind::Simplex: x(0) = set.scale(); break;
    case SetKind::Box: x = set.lower(); break;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Centralized solver

struct CentralizedTrace {
  std::vector<Vector> x;          // x_0 .. x_T
  std::vector<double> objective;  // F(x_t)
  std::vector<double> gamma;      // gamma_0 .. gamma_{T-1}
};

/// Exact minimizer over [0, 1] of F(x + g d) for the least-squares objective.
inline double line_search_step(double directional_derivative, double curvature_along) {
  if (curvature_along <= 0.0) return directional_derivative < 0.0 ? 1.0 : 0.0;
  return std::clamp(-directional_derivative / curvature_along, 0.0, 1.0);
}

/// Frank-Wolfe on F = (1/N) sum f_i with full gradients. Calls `observe(t, x_t)`
/// for t = 0..iters.
inline void centralized_fw_visit(const ProblemInstance& inst, const Vector& x0, const StepSchedule& schedule,
                                 std::size_t iters,
                                 const std::function<void(std::size_t, const Vector&, double gamma)>& observe) {
  if (!inst.set.contains(x0)) throw std::invalid_argument("centralized_fw: x0 is not feasible");
  Vector x = x0;
  for (std::size_t t = 0; t < iters; ++t) {
    const Vector g = global_grad(inst, x);
    const Vector s = inst.set.lmo(g);
    const Vector d = s - x;
    const double gamma = schedule.kind == ScheduleKind::ExactLineSearch ? line_search_step(g.dot(d), curvature(inst, d))
                                                                        : schedule.gamma(t);
    observe(t, x, gamma);
    x += gamma * d;
  }
  observe(iters, x, 0.0);
}

inline CentralizedTrace centralized_fw(const ProblemInstance& inst, const Vector& x0, const StepSchedule& schedule,
                                       std::size_t iters) {
  CentralizedTrace tr;
  centralized_fw_visit(inst, x0, schedule, iters, [&](std::size_t t, const Vector& x, double gamma) {
    tr.x.push_back(x);
    tr.objective.push_back(global_objective(inst, x));
    if (t < iters) tr.gamma.push_back(gamma);
  });
  return tr;
}

/// Reference optimum for gap reporting, with its Frank-Wolfe duality gap
/// max_v <grad F(x), x - v>, an upper bound on F(x) - F*.
struct ReferenceOptimum {
  Vector x;
  double f_star = 0.0;
  double fw_gap = 0.0;
  std::size_t iterations = 0;
  std::string method;  // "frank_wolfe" or "projected_gradient"
};

/// F written as 1/2 x^T Q x - c^T x + const, Q = (1/N) sum A_i^T A_i,
/// c = (1/N) sum A_i^T y_i.
struct AggregatedQuadratic {
  Matrix q;
  Vector c;

  explicit AggregatedQuadratic(const ProblemInstance& inst) {
    const auto d = static_cast<Eigen::Index>(inst.dim());
    q = Matrix::Zero(d, d);
    c = Vector::Zero(d);
    for (std::size_t i = 0; i < inst.n_nodes(); ++i) {
      q.noalias() += inst.a[i].transpose() * inst.a[i];
      c.noalias() += inst.a[i].transpose() * inst.y[i];
    }
    const double inv_n = 1.0 / static_cast<double>(inst.n_nodes());
    q *= inv_n;
    c *= inv_n;
  }

  Vector grad(const Vector& x) const { return q * x - c; }
};

inline double fw_duality_gap(const FeasibleSet& set, const Vector& x, const Vector& g) {
  return g.dot(x - set.lmo(g));
}

/// Exact-line-search Frank-Wolfe on the aggregated quadratic; O(d^2) per step.
inline Vector line_search_fw(const ProblemInstance& inst, const AggregatedQuadratic& quad, std::size_t iters) {
  Vector x = default_start(inst.set);
  Vector g = quad.grad(x);
  for (std::size_t t = 0; t < iters; ++t) {
    if (t % 1000 == 999) g = quad.grad(x);  // drop drift of the incremental update
    const Vector dir = inst.set.lmo(g) - x;
    const Vector qd = quad.q * dir;
    const double gamma = line_search_step(g.dot(dir), dir.dot(qd));
    if (gamma == 0.0) break;
    x += gamma * dir;
    g += gamma * qd;
  }
  return x;
}

/// Accelerated projected gradient (FISTA with gradient-based restart).
inline Vector projected_gradient(const ProblemInstance& inst, const AggregatedQuadratic& quad, std::size_t iters) {
  const double step = 1.0 / (1.01 * largest_eigenvalue_psd(quad.q, 1e-10));
  Vector x = default_start(inst.set);
  Vector y = x;
  double momentum = 1.0;
  for (std::size_t k = 0; k < iters; ++k) {
    const Vector next = inst.set.project(y - step * quad.grad(y));
    if ((y - next).dot(next - x) > 0.0) {
      momentum = 1.0;
      y = next;
    } else {
      const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = next + ((momentum - 1.0) / m_next) * (next - x);
      momentum = m_next;
    }
    x = next;
  }
  return x;
}

/// Reference optimum: a long exact-line-search FW run and an accelerated
/// projected-gradient run; the point with the lower objective is kept.
inline ReferenceOptimum reference_optimum(const ProblemInstance& inst, std::size_t fw_iters = 50000,
                                          std::size_t pg_iters = 20000) {
  const AggregatedQuadratic quad(inst);
  const Vector x_fw = line_search_fw(inst, quad, fw_iters);
  const Vector x_pg = projected_gradient(inst, quad, pg_iters);
  const double f_fw = global_objective(inst, x_fw);
  const double f_pg = global_objective(inst, x_pg);

  ReferenceOptimum ref;
  const bool pg_wins = inst.set.contains(x_pg, 1e-12) && f_pg < f_fw;
  ref.x = pg_wins ? x_pg : x_fw;
  ref.f_star = pg_wins ? f_pg : f_fw;
  ref.method = pg_wins ? "projected_gradient" : "frank_wolfe";
  ref.iterations = pg_wins ? pg_iters : fw_iters;
  ref.fw_gap = fw_duality_gap(inst.set, ref.x, quad.grad(ref.x));
  return ref;
}

// ---------------------------------------------------------------------------
// Decentralized solver

/// Per-node state at iteration t, one row per node:
///   x        node iterates x^i_t
///   x_bar    consensus values sum_j W_ij x^j_t
///   tracker  gradient trackers after aggregation
///   v        FW vertices lmo(tracker^i)
///   grad     local gradients grad f_i(x_bar^i_t), reused by the next tracking update
///   prev_x_bar consensus values of iteration t-1 (equal to x_bar at t = 0)
struct NetworkState {
  std::size_t t = 0;
  Matrix x;
  Matrix x_bar;
  Matrix tracker;
  Matrix v;
  Matrix grad;
  Matrix prev_x_bar;
};

namespace detail {

inline void require_finite(const Matrix& m, const char* stage) {
  if (m.allFinite()) return;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (!m.row(i).allFinite())
      throw NumericalError(std::string("decentralized FW: non-finite value at node ") + std::to_string(i) +
                           " in stage '" + stage + "'");
}

inline Matrix local_grads(const ProblemInstance& inst, const Matrix& points) {
  Matrix g(points.rows(), points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    g.row(i) = local_grad(inst, static_cast<std::size_t>(i), points.row(i).transpose()).transpose();
  return g;
}

inline Matrix lmo_rows(const FeasibleSet& set, const Matrix& trackers) {
  Matrix v(trackers.rows(), trackers.cols());
  for (Eigen::Index i = 0; i < trackers.rows(); ++i) v.row(i) = set.lmo(trackers.row(i).transpose()).transpose();
  return v;
}

inline void check_rounds(std::span<const MixingMatrix> ws, std::size_t n) {
  if (ws.empty()) throw std::invalid_argument("decentralized FW: need at least one mixing matrix");
  for (const auto& w : ws)
    if (w.n() != n) throw std::invalid_argument("decentralized FW: mixing matrix size does not match node count");
}

}  // namespace detail

/// Initial state from per-node starting points (one row each): consensus step,
/// tracker set to the local gradients at the consensus values followed by one
/// aggregate round, then the FW vertices. `ws` holds the tau round-0 matrices.
inline NetworkState dfw_init(const ProblemInstance& inst, const Matrix& x0, std::span<const MixingMatrix> ws) {
  const std::size_t n = inst.n_nodes();
  if (static_cast<std::size_t>(x0.rows()) != n || static_cast<std::size_t>(x0.cols()) != inst.dim())
    throw std::invalid_argument("dfw_init: starting points must be N x d");
  for (Eigen::Index i = 0; i < x0.rows(); ++i)
    if (!inst.set.contains(x0.row(i).transpose()))
      throw std::invalid_argument("dfw_init: starting point of node " + std::to_string(i) + " is not feasible");
  detail::check_rounds(ws, n);

  NetworkState s;
  s.x = x0;
  s.x_bar = multi_consensus(ws, s.x, ws.size());
  s.grad = detail::local_grads(inst, s.x_bar);
  s.tracker = multi_consensus(ws, s.grad, ws.size());
  detail::require_finite(s.tracker, "aggregate");
  s.v = detail::lmo_rows(inst.set, s.tracker);
  s.prev_x_bar = s.x_bar;
  return s;
}

inline NetworkState dfw_init(const ProblemInstance& inst, const Vector& x0, const MixingMatrix& w0) {
  Matrix rows = x0.transpose().replicate(static_cast<Eigen::Index>(inst.n_nodes()), 1);
  return dfw_init(inst, rows, std::span<const MixingMatrix>(&w0, 1));
}

/// Advances the state from t to t + 1:
///   move:       x^i_{t+1} = x_bar^i_t + gamma_t (v^i_t - x_bar^i_t)
///   consensus:  x_bar^i_{t+1} = sum_j W_ij x^j_{t+1}
///   tracking:   tracker^i += grad f_i(x_bar^i_{t+1}) - grad f_i(x_bar^i_t)
///   aggregate:  tracker^i = sum_j W_ij tracker^j
///   oracle:     v^i_{t+1} = lmo(tracker^i)
/// With several matrices in `ws` both mixing stages apply all of them in order.
inline void dfw_step(NetworkState& s, const ProblemInstance& inst, std::span<const MixingMatrix> ws, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("dfw_step: gamma must lie in (0, 1]");
  detail::check_rounds(ws, static_cast<std::size_t>(s.x.rows()));

  s.x = s.x_bar + gamma * (s.v - s.x_bar);
  s.prev_x_bar = s.x_bar;
  s.x_bar = multi_consensus(ws, s.x, ws.size());
  detail::require_finite(s.x_bar, "consensus");

  Matrix fresh = detail::local_grads(inst, s.x_bar);
  s.tracker += fresh - s.grad;
  s.grad = std::move(fresh);
  detail::require_finite(s.tracker, "tracking");

  s.tracker = multi_consensus(ws, s.tracker, ws.size());
  s.v = detail::lmo_rows(inst.set, s.tracker);
  ++s.t;
}

inline void dfw_step(NetworkState& s, const ProblemInstance& inst, const MixingMatrix& w, double gamma) {
  dfw_step(s, inst, std::span<const MixingMatrix>(&w, 1), gamma);
}

}  // namespace dfw
