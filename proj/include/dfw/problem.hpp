#pragma once

// Feasible sets with exact linear minimization oracles, and the distributed
// least-squares (constrained LASSO) objective F(x) = (1/N) sum_i 1/2 ||y_i - A_i x||^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dfw/errors.hpp"
#include "dfw/mixing.hpp"
#include "dfw/rng.hpp"

namespace dfw {

enum class SetKind { L1Ball, Simplex, Box };

/// Compact convex set D with an exact LMO. L1Ball and Simplex use `scale`
/// (radius r / simplex scale s); Box uses `lower` and `upper`.
class FeasibleSet {
 public:
  static FeasibleSet l1_ball(std::size_t dim, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("L1Ball: radius must be positive");
    return FeasibleSet(SetKind::L1Ball, dim, radius, {}, {});
  }
  static FeasibleSet simplex(std::size_t dim, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("Simplex: scale must be positive");
    return FeasibleSet(SetKind::Simplex, dim, scale, {}, {});
  }
  static FeasibleSet box(Vector lower, Vector upper) {
    if (lower.size() != upper.size()) throw std::invalid_argument("Box: bound sizes differ");
    if ((upper.array() < lower.array()).any()) throw std::invalid_argument("Box: lower exceeds upper");
    const auto d = static_cast<std::size_t>(lower.size());
    return FeasibleSet(SetKind::Box, d, 0.0, std::move(lower), std::move(upper));
  }

  SetKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  double scale() const { return scale_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  /// Exact l2 diameter.
  double diameter() const {
    switch (kind_) {
      case SetKind::L1Ball: return 2.0 * scale_;
      case SetKind::Simplex: return dim_ >= 2 ? scale_ * std::sqrt(2.0) : 0.0;
      case SetKind::Box: return (upper_ - lower_).norm();
    }
    return 0.0;
  }

  bool contains(const Vector& x, double tol = 1e-9) const {
    if (static_cast<std::size_t>(x.size()) != dim_ || !x.allFinite()) return false;
    switch (kind_) {
      case SetKind::L1Ball: return x.lpNorm<1>() <= scale_ + tol;
      case SetKind::Simplex: return x.minCoeff() >= -tol && std::abs(x.sum() - scale_) <= tol;
      case SetKind::Box:
        return ((x - lower_).array() >= -tol).all() && ((upper_ - x).array() >= -tol).all();
    }
    return false;
  }

  /// Vertex minimizing <g, v>. Ties go to the smallest index; sign(0) counts
  /// as +1, so the L1Ball vertex for g_k = 0 is -r e_k and the Box coordinate
  /// for g_k = 0 is the lower bound.
  Vector lmo(const Vector& g) const {
    if (static_cast<std::size_t>(g.size()) != dim_)
      throw std::invalid_argument("lmo: gradient has dim " + std::to_string(g.size()) + ", set has " +
                                  std::to_string(dim_));
    if (!g.allFinite()) throw std::invalid_argument("lmo: non-finite gradient");
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim_));
    switch (kind_) {
      case SetKind::L1Ball: {
        Eigen::Index k = 0;
        for (Eigen::Index i = 1; i < g.size(); ++i)
          if (std::abs(g(i)) > std::abs(g(k))) k = i;
        v(k) = g(k) >= 0.0 ? -scale_ : scale_;
        break;
      }
      case SetKind::Simplex: {
        Eigen::Index k = 0;
        for (Eigen::Index i = 1; i < g.size(); ++i)
          if (g(i) < g(k)) k = i;
        v(k) = scale_;
        break;
      }
      case SetKind::Box:
        for (Eigen::Index i = 0; i < g.size(); ++i) v(i) = g(i) >= 0.0 ? lower_(i) : upper_(i);
        break;
    }
    return v;
  }

  /// Euclidean projection onto the set.
  Vector project(const Vector& v) const {
    if (static_cast<std::size_t>(v.size()) != dim_) throw std::invalid_argument("project: dimension mismatch");
    switch (kind_) {
      case SetKind::L1Ball: {
        if (v.lpNorm<1>() <= scale_) return v;
        const Vector mag = project_simplex(v.cwiseAbs(), scale_);
        return mag.cwiseProduct(v.unaryExpr([](double a) { return a >= 0.0 ? 1.0 : -1.0; }));
      }
      case SetKind::Simplex: return project_simplex(v, scale_);
      case SetKind::Box: return v.cwiseMax(lower_).cwiseMin(upper_);
    }
    return v;
  }

  /// Enumerates every vertex (2d for L1Ball, d for Simplex, 2^d for Box).
  std::vector<Vector> vertices() const {
    std::vector<Vector> out;
    const auto d = static_cast<Eigen::Index>(dim_);
    switch (kind_) {
      case SetKind::L1Ball:
        for (Eigen::Index k = 0; k < d; ++k)
          for (double s : {scale_, -scale_}) {
            Vector v = Vector::Zero(d);
            v(k) = s;
            out.push_back(v);
          }
        break;
      case SetKind::Simplex:
        for (Eigen::Index k = 0; k < d; ++k) {
          Vector v = Vector::Zero(d);
          v(k) = scale_;
          out.push_back(v);
        }
        break;
      case SetKind::Box:
        if (dim_ > 20) throw std::invalid_argument("vertices: box dimension too large to enumerate");
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << dim_); ++mask) {
          Vector v(d);
          for (Eigen::Index k = 0; k < d; ++k) v(k) = (mask >> k) & 1U ? upper_(k) : lower_(k);
          out.push_back(v);
        }
        break;
    }
    return out;
  }

 private:
  // Sort-based projection onto {w >= 0, sum w = s}.
  static Vector project_simplex(const Vector& v, double s) {
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      cumsum += u[j];
      const double candidate = (cumsum - s) / static_cast<double>(j + 1);
      if (u[j] - candidate > 0.0) theta = candidate;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
  }

  FeasibleSet(SetKind kind, std::size_t dim, double scale, Vector lower, Vector upper)
      : kind_(kind), dim_(dim), scale_(scale), lower_(std::move(lower)), upper_(std::move(upper)) {
    if (dim_ == 0) throw std::invalid_argument("FeasibleSet: dim must be positive");
  }

  SetKind kind_;
  std::size_t dim_;
  double scale_;
  Vector lower_, upper_;
};

inline Vector lmo(const FeasibleSet& set, const Vector& g) { return set.lmo(g); }
inline double diameter(const FeasibleSet& set) { return set.diameter(); }

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration, to relative tolerance `rel_tol`.
inline double largest_eigenvalue_psd(const Matrix& s, double rel_tol = 1e-8, std::size_t max_iters = 100000) {
  const auto n = s.rows();
  if (n == 0) return 0.0;
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.5 * std::cos(0.7 * static_cast<double>(i) + 0.3);
  x.normalize();
  double prev = -1.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    Vector y = s * x;
    const double est = x.dot(y);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    x = y / norm;
    if (prev >= 0.0 && std::abs(est - prev) <= rel_tol * std::abs(est)) return est;
    prev = est;
  }
  throw NumericalError("largest_eigenvalue_psd: no convergence in " + std::to_string(max_iters) + " iterations");
}

/// Per-node least-squares blocks f_i(x) = 1/2 ||y_i - A_i x||^2 over a feasible set.
struct ProblemInstance {
  std::vector<Matrix> a;
  std::vector<Vector> y;
  FeasibleSet set = FeasibleSet::l1_ball(1, 1.0);
  double smoothness = 0.0;

  // Generation metadata (informational).
  Vector planted;
  std::uint64_t seed = 0;
  double noise_std = 0.0;

  std::size_t n_nodes() const { return a.size(); }
  std::size_t dim() const { return set.dim(); }
};

/// max_i lambda_max(A_i^T A_i).
inline double smoothness_constant(const ProblemInstance& inst) {
  double l = 0.0;
  for (const auto& ai : inst.a) l = std::max(l, largest_eigenvalue_psd(ai.transpose() * ai, 1e-8));
  return l;
}

/// Builds an instance from explicit blocks, validating shapes and computing L.
inline ProblemInstance make_instance(std::vector<Matrix> a, std::vector<Vector> y, FeasibleSet set) {
  if (a.empty() || a.size() != y.size()) throw std::invalid_argument("make_instance: need one (A_i, y_i) per node");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (static_cast<std::size_t>(a[i].cols()) != set.dim() || a[i].rows() != y[i].size())
      throw std::invalid_argument("make_instance: block " + std::to_string(i) + " has inconsistent shape");
  }
  ProblemInstance inst;
  inst.a = std::move(a);
  inst.y = std::move(y);
  inst.set = std::move(set);
  inst.smoothness = smoothness_constant(inst);
  return inst;
}

struct LassoParams {
  std::size_t n_nodes = 5;
  std::size_t dim = 50;
  std::size_t rows_per_node = 20;
  double radius = 10.0;
  double noise_std = 0.1;
  std::size_t sparsity = 5;  // nonzeros in the planted signal
  // ||x_planted||_1 / radius. Above 1 the l1 constraint is active at the optimum.
  double planted_l1 = 1.5;
  std::uint64_t seed = 1;
};

/// Random constrained LASSO instance: standard normal A_i, a planted sparse
/// signal with ||x||_1 = planted_l1 * radius, y_i = A_i x + noise.
/// Deterministic in `p.seed`.
inline ProblemInstance lasso_instance(const LassoParams& p) {
  if (p.n_nodes == 0 || p.dim == 0 || p.rows_per_node == 0)
    throw std::invalid_argument("lasso_instance: sizes must be positive");
  if (!(p.radius > 0.0) || p.noise_std < 0.0 || !(p.planted_l1 > 0.0))
    throw std::invalid_argument("lasso_instance: invalid radius, noise or planted_l1");
  Rng rng = make_rng(p.seed, Stream::Data);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(p.dim);

  // Planted signal: `sparsity` distinct coordinates with random signs/magnitudes.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t k = std::clamp<std::size_t>(p.sparsity, 1, p.dim);
  Vector planted = Vector::Zero(d);
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  for (std::size_t j = 0; j < k; ++j) planted(idx[j]) = (gauss(rng) >= 0.0 ? 1.0 : -1.0) * mag(rng);
  planted *= p.planted_l1 * p.radius / planted.lpNorm<1>();

  std::vector<Matrix> a;
  std::vector<Vector> y;
  const auto m = static_cast<Eigen::Index>(p.rows_per_node);
  for (std::size_t i = 0; i < p.n_nodes; ++i) {
    Matrix ai(m, d);
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index c = 0; c < d; ++c) ai(r, c) = gauss(rng);
    Vector yi = ai * planted;
    for (Eigen::Index r = 0; r < m; ++r) yi(r) += p.noise_std * gauss(rng);
    a.push_back(std::move(ai));
    y.push_back(std::move(yi));
  }
  ProblemInstance inst = make_instance(std::move(a), std::move(y), FeasibleSet::l1_ball(p.dim, p.radius));
  inst.planted = std::move(planted);
  inst.seed = p.seed;
  inst.noise_std = p.noise_std;
  return inst;
}

inline void check_node(const ProblemInstance& inst, std::size_t i, const Vector& x) {
  if (i >= inst.n_nodes()) throw std::invalid_argument("node index " + std::to_string(i) + " out of range");
  if (static_cast<std::size_t>(x.size()) != inst.dim())
    throw std::invalid_argument("point has dim " + std::to_string(x.size()) + ", instance has " +
                                std::to_string(inst.dim()));
}

inline double local_objective(const ProblemInstance& inst, std::size_t i, const Vector& x) {
  check_node(inst, i, x);
  return 0.5 * (inst.y[i] - inst.a[i] * x).squaredNorm();
}

/// grad f_i(x) = A_i^T (A_i x - y_i).
inline Vector local_grad(const ProblemInstance& inst, std::size_t i, const Vector& x) {
  check_node(inst, i, x);
  return inst.a[i].transpose() * (inst.a[i] * x - inst.y[i]);
}

inline double global_objective(const ProblemInstance& inst, const Vector& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < inst.n_nodes(); ++i) s += local_objective(inst, i, x);
  return s / static_cast<double>(inst.n_nodes());
}

inline Vector global_grad(const ProblemInstance& inst, const Vector& x) {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(inst.dim()));
  for (std::size_t i = 0; i < inst.n_nodes(); ++i) g += local_grad(inst, i, x);
  return g / static_cast<double>(inst.n_nodes());
}

/// Curvature of F along direction d: (1/N) sum_i ||A_i d||^2.
inline double curvature(const ProblemInstance& inst, const Vector& d) {
  double s = 0.0;
  for (const auto& ai : inst.a) s += (ai * d).squaredNorm();
  return s / static_cast<double>(inst.n_nodes());
}

/// Order-sensitive FNV-1a hash over the raw bytes of every block and the set.
inline std::uint64_t instance_hash(const ProblemInstance& inst) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < bytes; ++k) {
      h ^= p[k];
      h *= 0x100000001b3ULL;
    }
  };
  for (std::size_t i = 0; i < inst.n_nodes(); ++i) {
    mix(inst.a[i].data(), sizeof(double) * static_cast<std::size_t>(inst.a[i].size()));
    mix(inst.y[i].data(), sizeof(double) * static_cast<std::size_t>(inst.y[i].size()));
  }
  const auto kind = static_cast<int>(inst.set.kind());
  const double scale = inst.set.scale();
  mix(&kind, sizeof kind);
  mix(&scale, sizeof scale);
  return h;
}

// ---------------------------------------------------------------------------
// Replayable on-disk form: <dir>/instance.json header plus <dir>/node_<i>.csv,
// one row per observation holding a_1,...,a_d,y.

inline void save_instance(const ProblemInstance& inst, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json header;
  header["n_nodes"] = inst.n_nodes();
  header["dim"] = inst.dim();
  header["seed"] = inst.seed;
  header["noise_std"] = inst.noise_std;
  header["smoothness"] = inst.smoothness;
  header["hash"] = instance_hash(inst);
  switch (inst.set.kind()) {
    case SetKind::L1Ball: header["set"] = {{"kind", "l1_ball"}, {"radius", inst.set.scale()}}; break;
    case SetKind::Simplex: header["set"] = {{"kind", "simplex"}, {"scale", inst.set.scale()}}; break;
    case SetKind::Box: {
      std::vector<double> lo(inst.set.lower().begin(), inst.set.lower().end());
      std::vector<double> hi(inst.set.upper().begin(), inst.set.upper().end());
      header["set"] = {{"kind", "box"}, {"lower", lo}, {"upper", hi}};
      break;
    }
  }
  if (inst.planted.size() > 0) header["planted"] = std::vector<double>(inst.planted.begin(), inst.planted.end());
  std::ofstream(dir / "instance.json") << header.dump(2) << '\n';

  for (std::size_t i = 0; i < inst.n_nodes(); ++i) {
    std::ofstream os(dir / ("node_" + std::to_string(i) + ".csv"));
    os << std::setprecision(17);
    for (Eigen::Index r = 0; r < inst.a[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < inst.a[i].cols(); ++c) os << inst.a[i](r, c) << ',';
      os << inst.y[i](r) << '\n';
    }
    if (!os) throw std::runtime_error("save_instance: cannot write " + (dir / ("node_" + std::to_string(i) + ".csv")).string());
  }
}

inline ProblemInstance load_instance(const std::filesystem::path& dir) {
  std::ifstream hs(dir / "instance.json");
  if (!hs) throw std::runtime_error("load_instance: missing " + (dir / "instance.json").string());
  const auto header = nlohmann::json::parse(hs);
  const std::size_t n = header.at("n_nodes");
  const std::size_t d = header.at("dim");
  const auto& js = header.at("set");
  const std::string kind = js.at("kind");
  auto to_vector = [](const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  FeasibleSet set = kind == "l1_ball"   ? FeasibleSet::l1_ball(d, js.at("radius"))
                    : kind == "simplex" ? FeasibleSet::simplex(d, js.at("scale"))
                                        : FeasibleSet::box(to_vector(js.at("lower")), to_vector(js.at("upper")));
  std::vector<Matrix> a;
  std::vector<Vector> y;
  for (std::size_t i = 0; i < n; ++i) {
    std::ifstream is(dir / ("node_" + std::to_string(i) + ".csv"));
    if (!is) throw std::runtime_error("load_instance: missing block for node " + std::to_string(i));
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
      if (row.size() != d + 1) throw std::runtime_error("load_instance: bad row width in node " + std::to_string(i));
      rows.push_back(std::move(row));
    }
    Matrix ai(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    Vector yi(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < d; ++c) ai(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      yi(static_cast<Eigen::Index>(r)) = rows[r][d];
    }
    a.push_back(std::move(ai));
    y.push_back(std::move(yi));
  }
  ProblemInstance inst = make_instance(std::move(a), std::move(y), std::move(set));
  inst.seed = header.value("seed", std::uint64_t{0});
  inst.noise_std = header.value("noise_std", 0.0);
  if (header.contains("planted")) inst.planted = to_vector(header["planted"]);
  return inst;
}

}  // namespace dfw
