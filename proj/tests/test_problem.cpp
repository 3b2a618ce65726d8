#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <random>

#include "dfw/problem.hpp"

using namespace dfw;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

Vector random_vector(Eigen::Index d, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Vector v(d);
  for (auto& c : v) c = gauss(rng);
  return v;
}

double brute_min(const FeasibleSet& set, const Vector& g) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : set.vertices()) best = std::min(best, g.dot(v));
  return best;
}

double brute_diameter(const FeasibleSet& set) {
  const auto vs = set.vertices();
  double best = 0.0;
  for (const auto& a : vs)
    for (const auto& b : vs) best = std::max(best, (a - b).norm());
  return best;
}

ProblemInstance small_instance(std::uint64_t seed, std::size_t n = 3, std::size_t d = 6) {
  LassoParams p;
  p.n_nodes = n;
  p.dim = d;
  p.rows_per_node = 4;
  p.radius = 2.0;
  p.sparsity = 2;
  p.seed = seed;
  return lasso_instance(p);
}

}  // namespace

TEST(Lmo, Examples) {
  EXPECT_EQ(FeasibleSet::l1_ball(3, 2.0).lmo(Vector3d(3, -5, 1)), Vector3d(0, 2, 0));
  EXPECT_EQ(FeasibleSet::l1_ball(3, 1.0).lmo(Vector3d(1, 0, 0)), Vector3d(-1, 0, 0));
  EXPECT_EQ(FeasibleSet::simplex(3, 1.0).lmo(Vector3d(0.3, -0.2, 0.1)), Vector3d(0, 1, 0));
}

TEST(Lmo, TieBreakingIsDeterministic) {
  // Smallest index wins; a zero coordinate counts as positive.
  EXPECT_EQ(FeasibleSet::l1_ball(3, 1.0).lmo(Vector3d(2, -2, 2)), Vector3d(-1, 0, 0));
  EXPECT_EQ(FeasibleSet::l1_ball(3, 1.0).lmo(Vector3d(0, 0, 0)), Vector3d(-1, 0, 0));
  EXPECT_EQ(FeasibleSet::simplex(3, 1.0).lmo(Vector3d(1, 1, 1)), Vector3d(1, 0, 0));
  const auto box = FeasibleSet::box(Vector3d(-1, 0, 2), Vector3d(1, 3, 5));
  EXPECT_EQ(box.lmo(Vector3d(0, -1, 4)), Vector3d(-1, 3, 2));
}

TEST(Lmo, RejectsNonFiniteAndMismatchedGradients) {
  const auto set = FeasibleSet::l1_ball(3, 1.0);
  EXPECT_THROW(set.lmo(Vector3d(1, std::nan(""), 0)), std::invalid_argument);
  EXPECT_THROW(set.lmo(Vector3d(1, std::numeric_limits<double>::infinity(), 0)), std::invalid_argument);
  EXPECT_THROW(set.lmo(Vector2d(1, 0)), std::invalid_argument);
}

TEST(Lmo, BruteForceOptimalityAndFeasibility) {
  Rng rng = make_rng(21, Stream::Probe);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (Eigen::Index d = 1; d <= 8; ++d) {
    Vector lo(d), hi(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      lo(k) = u(rng);
      hi(k) = lo(k) + 0.1 + std::abs(u(rng));
    }
    const std::vector<FeasibleSet> sets{FeasibleSet::l1_ball(static_cast<std::size_t>(d), 1.7),
                                        FeasibleSet::simplex(static_cast<std::size_t>(d), 2.5),
                                        FeasibleSet::box(lo, hi)};
    for (const auto& set : sets)
      for (int k = 0; k < 100; ++k) {
        const Vector g = random_vector(d, rng);
        const Vector v = set.lmo(g);
        EXPECT_LE(g.dot(v), brute_min(set, g));
        EXPECT_TRUE(set.contains(v, 1e-12));
      }
  }
}

TEST(Diameter, Examples) {
  EXPECT_EQ(FeasibleSet::l1_ball(5, 2.0).diameter(), 4.0);
  EXPECT_NEAR(FeasibleSet::simplex(3, 1.0).diameter(), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(FeasibleSet::box(Vector3d::Zero(), Vector3d::Ones()).diameter(), std::sqrt(3.0), 1e-15);
  EXPECT_EQ(diameter(FeasibleSet::simplex(1, 3.0)), 0.0);
}

TEST(Diameter, MatchesVertexPairsUpToDimSix) {
  Rng rng = make_rng(22, Stream::Probe);
  for (std::size_t d = 1; d <= 6; ++d) {
    const auto e = static_cast<Eigen::Index>(d);
    const Vector lo = random_vector(e, rng);
    const Vector hi = lo + random_vector(e, rng).cwiseAbs();
    for (const auto& set : {FeasibleSet::l1_ball(d, 1.3), FeasibleSet::simplex(d, 0.7), FeasibleSet::box(lo, hi)})
      EXPECT_NEAR(set.diameter(), brute_diameter(set), 1e-12);
  }
}

TEST(FeasibleSetFactories, RejectInvalidParameters) {
  EXPECT_THROW(FeasibleSet::l1_ball(3, 0.0), std::invalid_argument);
  EXPECT_THROW(FeasibleSet::simplex(3, -1.0), std::invalid_argument);
  EXPECT_THROW(FeasibleSet::box(Vector3d(0, 0, 1), Vector3d(1, 1, 0)), std::invalid_argument);
  EXPECT_THROW(FeasibleSet::l1_ball(0, 1.0), std::invalid_argument);
}

TEST(Projection, LandsInSetAndIsClosest) {
  Rng rng = make_rng(23, Stream::Probe);
  for (const auto& set : {FeasibleSet::l1_ball(5, 1.0), FeasibleSet::simplex(5, 2.0),
                          FeasibleSet::box(Vector::Constant(5, -0.5), Vector::Constant(5, 0.5))}) {
    for (int k = 0; k < 200; ++k) {
      const Vector v = random_vector(5, rng, 2.0);
      const Vector p = set.project(v);
      ASSERT_TRUE(set.contains(p, 1e-12));
      // Variational inequality <v - p, u - p> <= 0 for every vertex u.
      for (const auto& u : set.vertices()) EXPECT_LE((v - p).dot(u - p), 1e-10);
    }
  }
}

TEST(Smoothness, Examples) {
  const auto set3 = FeasibleSet::l1_ball(3, 1.0);
  EXPECT_NEAR(make_instance({Matrix::Identity(3, 3)}, {Vector::Zero(3)}, set3).smoothness, 1.0, 1e-8);
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 2, 1;
  EXPECT_NEAR(make_instance({a}, {Vector::Zero(2)}, FeasibleSet::l1_ball(2, 1.0)).smoothness, 4.0, 4e-8);
}

TEST(Smoothness, DominatesEveryBlockAndSatisfiesDescentInequality) {
  Rng rng = make_rng(24, Stream::Probe);
  const ProblemInstance inst = small_instance(5, 4, 8);
  for (std::size_t i = 0; i < inst.n_nodes(); ++i) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(inst.a[i].transpose() * inst.a[i]);
    EXPECT_GE(inst.smoothness, es.eigenvalues().maxCoeff() * (1 - 1e-8));
  }
  for (int k = 0; k < 1000; ++k) {
    const std::size_t i = static_cast<std::size_t>(k) % inst.n_nodes();
    const Vector x = random_vector(8, rng), y = random_vector(8, rng);
    const double lin = local_objective(inst, i, y) - local_objective(inst, i, x) - local_grad(inst, i, x).dot(y - x);
    const double scale = 1.0 + std::abs(local_objective(inst, i, y));
    EXPECT_LE(lin, 0.5 * inst.smoothness * (y - x).squaredNorm() + 1e-10 * scale);
    EXPECT_GE(lin, -1e-10 * scale);  // convexity side
  }
}

TEST(Objective, TwoNodeExample) {
  Matrix one = Matrix::Ones(1, 1);
  Vector y0 = Vector::Zero(1), y1 = Vector::Constant(1, 2.0);
  const auto inst = make_instance({one, one}, {y0, y1}, FeasibleSet::l1_ball(1, 5.0));
  EXPECT_DOUBLE_EQ(global_objective(inst, Vector::Constant(1, 1.0)), 0.5);
  EXPECT_NEAR(global_grad(inst, Vector::Constant(1, 1.0))(0), 0.0, 1e-15);
}

TEST(Gradient, Examples) {
  const auto inst = make_instance({Matrix::Identity(2, 2)}, {Vector::Zero(2)}, FeasibleSet::l1_ball(2, 5.0));
  EXPECT_EQ(local_grad(inst, 0, Vector2d(1, 2)), Vector2d(1, 2));
  const ProblemInstance lasso = small_instance(6);
  // A point solving A_0 x = y_0 exactly (least-norm) has zero gradient.
  const Vector x = lasso.a[0].completeOrthogonalDecomposition().solve(lasso.y[0]);
  EXPECT_LE(local_grad(lasso, 0, x).norm(), 1e-9);
  EXPECT_THROW(local_grad(inst, 0, Vector3d::Zero()), std::invalid_argument);
  EXPECT_THROW(local_grad(inst, 1, Vector2d::Zero()), std::invalid_argument);
}

TEST(Gradient, CentralFiniteDifferences) {
  Rng rng = make_rng(25, Stream::Probe);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ProblemInstance inst = small_instance(seed);
    for (std::size_t i = 0; i < inst.n_nodes(); ++i) {
      const Vector x = random_vector(6, rng);
      const Vector g = local_grad(inst, i, x);
      Vector fd(6);
      const double h = 1e-6;
      for (Eigen::Index k = 0; k < 6; ++k) {
        Vector xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        fd(k) = (local_objective(inst, i, xp) - local_objective(inst, i, xm)) / (2 * h);
      }
      EXPECT_LT((fd - g).norm() / std::max(g.norm(), 1e-12), 1e-5);
    }
  }
}

TEST(Objective, ConvexAlongSegments) {
  Rng rng = make_rng(26, Stream::Probe);
  const ProblemInstance inst = small_instance(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const Vector x = random_vector(6, rng), y = random_vector(6, rng);
    const double th = u(rng);
    const std::size_t i = static_cast<std::size_t>(k) % inst.n_nodes();
    const double lhs = local_objective(inst, i, th * x + (1 - th) * y);
    const double rhs = th * local_objective(inst, i, x) + (1 - th) * local_objective(inst, i, y);
    EXPECT_LE(lhs, rhs + 1e-10 * (1 + rhs));
  }
}

TEST(Lasso, NoiselessInstanceInterpolatesPlantedSignal) {
  LassoParams p;
  p.noise_std = 0.0;
  p.planted_l1 = 0.8;  // planted signal strictly inside the ball
  const ProblemInstance inst = lasso_instance(p);
  EXPECT_TRUE(inst.set.contains(inst.planted));
  EXPECT_NEAR(inst.planted.lpNorm<1>(), 0.8 * p.radius, 1e-12);
  EXPECT_LE(global_objective(inst, inst.planted), 1e-20);
  EXPECT_EQ(std::count_if(inst.planted.begin(), inst.planted.end(), [](double v) { return v != 0.0; }),
            static_cast<long>(p.sparsity));
}

TEST(Lasso, DeterministicPerSeed) {
  LassoParams p;
  p.seed = 42;
  const auto a = lasso_instance(p), b = lasso_instance(p);
  EXPECT_EQ(instance_hash(a), instance_hash(b));
  p.seed = 43;
  EXPECT_NE(instance_hash(a), instance_hash(lasso_instance(p)));
}

TEST(Lasso, ShapesAndValidation) {
  LassoParams p;
  p.n_nodes = 4;
  p.dim = 9;
  p.rows_per_node = 3;
  const auto inst = lasso_instance(p);
  EXPECT_EQ(inst.n_nodes(), 4u);
  EXPECT_EQ(inst.dim(), 9u);
  EXPECT_EQ(inst.a[0].rows(), 3);
  p.dim = 0;
  EXPECT_THROW(lasso_instance(p), std::invalid_argument);
  EXPECT_THROW(make_instance({Matrix::Ones(2, 3)}, {Vector::Ones(3)}, FeasibleSet::l1_ball(3, 1.0)),
               std::invalid_argument);
}

TEST(Instance, SaveLoadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "dfw_instance_roundtrip";
  std::filesystem::remove_all(dir);
  const ProblemInstance inst = small_instance(8, 3, 5);
  save_instance(inst, dir);
  const ProblemInstance back = load_instance(dir);
  EXPECT_EQ(instance_hash(back), instance_hash(inst));
  EXPECT_EQ(back.smoothness, inst.smoothness);
  EXPECT_EQ(back.planted, inst.planted);
  EXPECT_EQ(back.seed, inst.seed);

  const auto box = make_instance({Matrix::Identity(2, 2)}, {Vector2d(0.1, 0.2)},
                                 FeasibleSet::box(Vector2d(-1, 0), Vector2d(1, 2)));
  save_instance(box, dir / "box");
  const auto box_back = load_instance(dir / "box");
  EXPECT_EQ(box_back.set.kind(), SetKind::Box);
  EXPECT_EQ(box_back.set.upper(), Vector2d(1, 2));
  std::filesystem::remove_all(dir);
}
