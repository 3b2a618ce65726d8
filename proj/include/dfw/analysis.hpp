#pragma once

// Deviation metrics of a network state and the theoretical constants
// (t0, C_p, C_g) behind the O(1/t) bound.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfw/solver.hpp"

namespace dfw {

/// max_i ||x_bar^i_t - mean_j x^j_t||_2.
inline double consensus_error(const NetworkState& s) {
  const Eigen::RowVectorXd mean = s.x.colwise().mean();
  return (s.x_bar.rowwise() - mean).rowwise().norm().maxCoeff();
}

/// max_i ||tracker^i - (1/N) sum_j grad f_j(x_bar^j_t)||_2.
inline double tracking_error(const NetworkState& s, const ProblemInstance& inst) {
  const Matrix g = detail::local_grads(inst, s.x_bar);
  const Eigen::RowVectorXd mean = g.colwise().mean();
  return (s.tracker.rowwise() - mean).rowwise().norm().maxCoeff();
}

/// Largest coordinate of |mean_i tracker^i - mean_i grad f_i(x_bar^i_t)|.
/// Gradient tracking under doubly stochastic mixing keeps this at rounding level.
inline double tracker_mean_deviation(const NetworkState& s) {
  return (s.tracker.colwise().mean() - s.grad.colwise().mean()).cwiseAbs().maxCoeff();
}

/// True when every row of x and x_bar lies in the set (within tol).
inline bool state_feasible(const NetworkState& s, const FeasibleSet& set, double tol = 1e-9) {
  for (Eigen::Index i = 0; i < s.x.rows(); ++i)
    if (!set.contains(s.x.row(i).transpose(), tol) || !set.contains(s.x_bar.row(i).transpose(), tol)) return false;
  return true;
}

struct TheoryConstants {
  double lambda = 0.0;
  double alpha = 1.0;
  std::size_t t0 = 1;
  double c_p = 0.0;
  double c_g = 0.0;
  double rho_bar = 0.0;
  double smoothness = 0.0;
  std::size_t n_nodes = 1;
};

/// Right-hand side of the t0 condition: (t0/(t0+1))^alpha / (1 + t0^-alpha).
inline double t0_threshold(std::size_t t0, double alpha) {
  const double s = static_cast<double>(t0);
  return std::pow(s / (s + 1.0), alpha) / (1.0 + std::pow(s, -alpha));
}

/// Smallest positive integer t0 with lambda <= t0_threshold(t0, alpha).
inline std::size_t minimal_t0(double lambda, double alpha) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("minimal_t0: lambda must lie in [0, 1)");
  std::size_t t0 = 1;
  while (!(lambda <= t0_threshold(t0, alpha))) {
    ++t0;
    if (t0 > (std::size_t{1} << 40)) throw NumericalError("minimal_t0: lambda too close to 1");
  }
  return t0;
}

/// Sufficient closed form ceil(2 / (1 - lambda)) for alpha = 1. Quotients within
/// 1e-9 (relative) of an integer snap to it, so an estimated lambda a few ulps
/// above 2/3 still gives 6.
inline std::size_t closed_form_t0(double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("closed_form_t0: lambda must lie in [0, 1)");
  const double q = 2.0 / (1.0 - lambda);
  const double r = std::round(q);
  return static_cast<std::size_t>(std::abs(q - r) <= 1e-9 * r ? r : std::ceil(q));
}

enum class T0Rule { MinimalScan, ClosedForm };

inline TheoryConstants theory_constants_with_t0(std::size_t t0, double lambda, double alpha, std::size_t n_nodes,
                                                double rho_bar, double smoothness) {
  TheoryConstants tc;
  tc.lambda = lambda;
  tc.alpha = alpha;
  tc.t0 = t0;
  tc.rho_bar = rho_bar;
  tc.smoothness = smoothness;
  tc.n_nodes = n_nodes;
  const double t0a = std::pow(static_cast<double>(t0), alpha);
  const double sqrt_n = std::sqrt(static_cast<double>(n_nodes));
  tc.c_p = t0a * sqrt_n * rho_bar;
  tc.c_g = 2.0 * sqrt_n * t0a * (2.0 * tc.c_p + rho_bar) * smoothness;
  return tc;
}

inline TheoryConstants theory_constants(double lambda, double alpha, std::size_t n_nodes, double rho_bar,
                                        double smoothness, T0Rule rule = T0Rule::MinimalScan) {
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw std::invalid_argument("theory_constants: lambda = " + std::to_string(lambda) +
                                " violates the contraction assumption (need 0 <= lambda < 1)");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("theory_constants: alpha must lie in (0, 1]");
  if (rule == T0Rule::ClosedForm && alpha != 1.0)
    throw std::invalid_argument("theory_constants: the closed-form t0 holds for alpha = 1 only");
  const std::size_t t0 = rule == T0Rule::MinimalScan ? minimal_t0(lambda, alpha) : closed_form_t0(lambda);
  return theory_constants_with_t0(t0, lambda, alpha, n_nodes, rho_bar, smoothness);
}

/// (8 rho (C_g + L C_p) + 2 L rho^2) / (t + 1).
inline double theorem_bound(const TheoryConstants& tc, std::size_t t) {
  if (t < 1) throw std::invalid_argument("theorem_bound: defined for t >= 1");
  const double num = 8.0 * tc.rho_bar * (tc.c_g + tc.smoothness * tc.c_p) +
                     2.0 * tc.smoothness * tc.rho_bar * tc.rho_bar;
  return num / (static_cast<double>(t) + 1.0);
}

/// Least-squares slope of log(value) against log(t) over rows with t in
/// [t_lo, t_hi] and positive value. NaN when fewer than two usable points.
inline double loglog_slope(std::span<const double> t, std::span<const double> value, double t_lo, double t_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < t.size() && k < value.size(); ++k) {
    if (t[k] < t_lo || t[k] > t_hi || !(value[k] > 0.0) || !(t[k] > 0.0)) continue;
    const double lx = std::log(t[k]), ly = std::log(value[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace dfw
