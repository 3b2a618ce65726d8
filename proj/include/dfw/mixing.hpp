#pragma once

// Metropolis-weight communication matrices and consensus multiplications.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "dfw/errors.hpp"
#include "dfw/topology.hpp"

namespace dfw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct PowerIterationOptions {
  double rel_tol = 1e-10;
  std::size_t max_iters = 10000;
};

/// Spectral norm of W - (1/N) 1 1^T, by power iteration on B^T B restricted to
/// the mean-free subspace (B = W - J). Returns 0 when B vanishes.
inline double contraction_factor(const Matrix& w, const PowerIterationOptions& opt = {}) {
  const auto n = w.rows();
  if (n != w.cols()) throw std::invalid_argument("contraction_factor: matrix must be square");
  if (n <= 1) return 0.0;

  Matrix b = w.array() - 1.0 / static_cast<double>(n);
  if (b.cwiseAbs().maxCoeff() < 1e-15) return 0.0;

  // Fixed, mean-free, irregular start vector; deterministic for replay.
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = std::sin(1.0 + 1.7 * static_cast<double>(i)) + 0.01 * static_cast<double>(i);
  x.array() -= x.mean();
  x.normalize();

  double prev = -1.0;
  for (std::size_t it = 1; it <= opt.max_iters; ++it) {
    Vector y = b.transpose() * (b * x);
    y.array() -= y.mean();
    const double rayleigh = x.dot(y);  // estimate of sigma_max^2
    const double norm = y.norm();
    if (norm < 1e-300) return 0.0;
    x = y / norm;
    const double est = std::sqrt(std::max(rayleigh, 0.0));
    if (prev >= 0.0 && std::abs(est - prev) <= opt.rel_tol * std::max(est, 1e-300)) return est;
    if (est < 1e-14 && it > 2) return 0.0;
    prev = est;
  }
  throw NumericalError("contraction_factor: power iteration did not converge in " + std::to_string(opt.max_iters) +
                       " iterations");
}

/// Doubly stochastic mixing matrix W^t. The contraction factor is computed on
/// first request and shared between copies.
class MixingMatrix {
 public:
  explicit MixingMatrix(Matrix w) : w_(std::move(w)), cache_(std::make_shared<LambdaCache>()) {
    if (w_.rows() != w_.cols() || w_.rows() == 0) throw std::invalid_argument("MixingMatrix: must be square and non-empty");
  }

  std::size_t n() const { return static_cast<std::size_t>(w_.rows()); }
  const Matrix& weights() const { return w_; }
  double operator()(std::size_t i, std::size_t j) const {
    return w_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  double lambda() const {
    std::call_once(cache_->once, [this] { cache_->value = contraction_factor(w_); });
    return cache_->value;
  }

  double max_row_sum_error() const { return (w_.rowwise().sum().array() - 1.0).abs().maxCoeff(); }
  double max_col_sum_error() const { return (w_.colwise().sum().array() - 1.0).abs().maxCoeff(); }
  double max_asymmetry() const { return (w_ - w_.transpose()).cwiseAbs().maxCoeff(); }

 private:
  struct LambdaCache {
    std::once_flag once;
    double value = 0.0;
  };
  Matrix w_;
  std::shared_ptr<LambdaCache> cache_;
};

/// Metropolis weights: 1/(max(deg i, deg j) + 1) on edges, zero off the graph,
/// diagonal completing each row to one.
inline MixingMatrix metropolis_weights(const Graph& g) {
  const std::size_t n = g.n_nodes();
  const auto deg = g.degrees();
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& [i, j] : g.edges()) {
    const double wij = 1.0 / static_cast<double>(std::max(deg[i], deg[j]) + 1);
    w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wij;
    w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = wij;
  }
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      if (j != i) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return MixingMatrix(std::move(w));
}

inline double contraction_factor(const MixingMatrix& m) { return m.lambda(); }

/// Row i of the result is sum_j w_ij z_j; z stacks one node state per row.
inline Matrix consensus_round(const MixingMatrix& m, const Matrix& z) {
  if (static_cast<std::size_t>(z.rows()) != m.n())
    throw std::invalid_argument("consensus_round: state has " + std::to_string(z.rows()) + " rows, matrix is " +
                                std::to_string(m.n()) + "x" + std::to_string(m.n()));
  return m.weights() * z;
}

/// Applies ms[0], ms[1], ..., ms[tau-1] in order.
inline Matrix multi_consensus(std::span<const MixingMatrix> ms, const Matrix& z, std::size_t tau) {
  if (tau == 0) throw std::invalid_argument("multi_consensus: tau must be positive");
  if (ms.size() < tau) throw std::invalid_argument("multi_consensus: fewer matrices than rounds");
  Matrix out = z;
  for (std::size_t k = 0; k < tau; ++k) out = consensus_round(ms[k], out);
  return out;
}

inline std::string to_csv(const MixingMatrix& m) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < m.n(); ++i) {
    for (std::size_t j = 0; j < m.n(); ++j) os << (j ? "," : "") << m(i, j);
    os << '\n';
  }
  return os.str();
}

}  // namespace dfw
