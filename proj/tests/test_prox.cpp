#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "grpadmm/prox.hpp"
#include "grpadmm/random.hpp"

using namespace grpadmm;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

struct Case {
  std::string label;
  ProxTerm term;
  Index dim;
};

std::vector<Case> all_terms() {
  Rng rng(31);
  const Index n = 12;
  const ImageShape img{4, 5};
  return {
      {"zero", ProxTerm::zero(), n},
      {"l1", ProxTerm::l1(0.3), n},
      {"sql2-shift", ProxTerm::sql2_shift(rng.normal_vector(n), 1.7), n},
      {"sql2", ProxTerm::sql2(0.6), n},
      {"group-l21", ProxTerm::group_l21(0.8), n},
      {"group-l21-3", ProxTerm::group_l21(0.5, 3), n},
      {"linear-plus-nonneg", ProxTerm::linear_plus_nonneg(rng.normal_vector(n).cwiseAbs()), n},
      {"quad-data-dense", ProxTerm::quad_data(LinearMap::dense(random_matrix(8, n, 5)), rng.normal_vector(8), 1.3),
       n},
      {"quad-data-blur",
       ProxTerm::quad_data(LinearMap::blur(img, gaussian_kernel(3, 0.8)), rng.normal_vector(img.size()), 1.0),
       img.size()},
  };
}

double prox_objective(const ProxTerm& term, const Vector& z, const Vector& v, double t) {
  return term.eval(z) + (z - v).squaredNorm() / (2.0 * t);
}

}  // namespace

TEST(ProxEval, Examples) {
  EXPECT_NEAR(ProxTerm::l1(0.1).eval((Vector(2) << 1, -2).finished()), 0.3, 1e-15);
  EXPECT_EQ(ProxTerm::group_l21(1.0).eval((Vector(2) << 3, 4).finished()), 5.0);
  EXPECT_EQ(ProxTerm::linear_plus_nonneg(Vector::Ones(2)).eval((Vector(2) << 2, -1).finished()), kInf);
  EXPECT_EQ(ProxTerm::linear_plus_nonneg(Vector::Ones(2)).eval((Vector(2) << 2, 1).finished()), 3.0);
  EXPECT_EQ(ProxTerm::sql2_shift((Vector(1) << 1).finished(), 2.0).eval((Vector(1) << 4).finished()), 9.0);
}

TEST(ProxMap, Examples) {
  EXPECT_EQ(ProxTerm::l1(1.0).prox((Vector(2) << 2, -0.5).finished(), 1.0), (Vector(2) << 1, 0).finished());
  EXPECT_EQ(ProxTerm::sql2_shift(Vector::Zero(1)).prox((Vector(1) << 3).finished(), 1.0)[0], 1.5);
  EXPECT_EQ(ProxTerm::linear_plus_nonneg(Vector::Ones(2)).prox((Vector(2) << 0.5, 2).finished(), 1.0),
            (Vector(2) << 0, 1).finished());
  const Vector g = ProxTerm::group_l21(1.0).prox((Vector(2) << 3, 4).finished(), 1.0);
  EXPECT_NEAR(g[0], 2.4, 1e-15);
  EXPECT_NEAR(g[1], 3.2, 1e-15);
}

TEST(ProxMap, GroupExampleMatchesSampling) {
  const auto term = ProxTerm::group_l21(1.0);
  const Vector v = (Vector(2) << 3, 4).finished();
  const Vector p = (Vector(2) << 2.4, 3.2).finished();
  Rng rng(2);
  const double best = prox_objective(term, p, v, 1.0);
  for (int i = 0; i < 200; ++i) {
    EXPECT_LE(best, prox_objective(term, p + rng.normal_vector(2, 0.1), v, 1.0) + 1e-12);
  }
}

TEST(ProxMap, GroupsAreInterleavedPlanes) {
  // Two groups of size 2: group 0 = (v[0], v[2]), group 1 = (v[1], v[3]).
  const Vector v = (Vector(4) << 3, 0.1, 4, 0.1).finished();
  const Vector z = ProxTerm::group_l21(1.0).prox(v, 1.0);
  EXPECT_NEAR(z[0], 2.4, 1e-15);
  EXPECT_NEAR(z[2], 3.2, 1e-15);
  EXPECT_EQ(z[1], 0.0);
  EXPECT_EQ(z[3], 0.0);
}

TEST(ProxMap, RejectsNonpositiveStep) {
  for (const auto& c : all_terms()) {
    EXPECT_THROW(c.term.prox(Vector::Ones(c.dim), 0.0), std::invalid_argument) << c.label;
    EXPECT_THROW(c.term.prox(Vector::Ones(c.dim), -1.0), std::invalid_argument) << c.label;
  }
}

TEST(ProxMap, DimensionChecks) {
  EXPECT_THROW(ProxTerm::sql2_shift(Vector::Zero(3)).prox(Vector::Ones(4), 1.0), DimensionError);
  EXPECT_THROW(ProxTerm::group_l21(1.0).eval(Vector::Ones(5)), DimensionError);
}

TEST(ProxMap, OptimalityBySampling) {
  Rng rng(77);
  for (const auto& c : all_terms()) {
    for (double t : {0.05, 0.7, 4.0}) {
      const Vector v = rng.normal_vector(c.dim, 2.0);
      const Vector p = c.term.prox(v, t);
      const double best = prox_objective(c.term, p, v, t);
      ASSERT_TRUE(std::isfinite(best)) << c.label;
      for (int i = 0; i < 50; ++i) {
        const double scale = std::pow(10.0, rng.uniform(-4.0, 0.0));
        const Vector z = p + rng.normal_vector(c.dim, scale);
        EXPECT_LE(best, prox_objective(c.term, z, v, t) + 1e-9) << c.label << " t=" << t;
      }
    }
  }
}

TEST(ProxMap, Nonexpansive) {
  Rng rng(78);
  for (const auto& c : all_terms()) {
    for (int i = 0; i < 30; ++i) {
      const double t = rng.uniform(0.01, 3.0);
      const Vector a = rng.normal_vector(c.dim, 2.0);
      const Vector b = rng.normal_vector(c.dim, 2.0);
      EXPECT_LE((c.term.prox(a, t) - c.term.prox(b, t)).norm(), (a - b).norm() * (1.0 + 1e-9)) << c.label;
    }
  }
}

TEST(ProxEval, ConvexAlongSegments) {
  Rng rng(79);
  for (const auto& c : all_terms()) {
    for (int i = 0; i < 50; ++i) {
      Vector u = rng.normal_vector(c.dim);
      Vector v = rng.normal_vector(c.dim);
      if (c.term.kind() == ProxKind::linear_plus_nonneg) {
        u = u.cwiseAbs();
        v = v.cwiseAbs();
      }
      const double mid = c.term.eval(0.5 * u + 0.5 * v);
      EXPECT_LE(mid, 0.5 * c.term.eval(u) + 0.5 * c.term.eval(v) + 1e-9) << c.label;
    }
  }
}

TEST(ProxMap, SmallStepApproachesIdentity) {
  Rng rng(80);
  for (const auto& c : all_terms()) {
    Vector v = rng.normal_vector(c.dim);
    if (c.term.kind() == ProxKind::linear_plus_nonneg) v = v.cwiseAbs().array() + 0.1;
    const double d1 = (c.term.prox(v, 1e-4) - v).norm();
    const double d2 = (c.term.prox(v, 1e-8) - v).norm();
    EXPECT_LE(d2, 1e-6) << c.label;
    EXPECT_LE(d2, d1 + 1e-15) << c.label;
  }
}

TEST(ProxMap, SoftThresholdTieGoesToZero) {
  EXPECT_EQ(ProxTerm::l1(0.5).prox((Vector(2) << 1.0, -1.0).finished(), 2.0), Vector::Zero(2));
}

TEST(QuadData, NormalEquationResidual) {
  Rng rng(81);
  const Matrix k = random_matrix(30, 20, 9);
  const Vector data = rng.normal_vector(30);
  const double weight = 2.5;
  const auto term = ProxTerm::quad_data(LinearMap::dense(k), data, weight);
  for (double t : {0.01, 1.0, 50.0}) {
    ProxWorkspace ws;
    const Vector v = rng.normal_vector(20);
    const Vector z = term.prox(v, t, &ws);
    const Vector rhs = v + t * weight * k.transpose() * data;
    const Vector lhs = z + t * weight * k.transpose() * (k * z);
    EXPECT_LE((lhs - rhs).norm(), 1e-9 * rhs.norm()) << "t=" << t;
    EXPECT_LE(ws.last_relative_residual, 1e-10);
    // Independent dense solve.
    const Matrix normal = Matrix::Identity(20, 20) + t * weight * k.transpose() * k;
    EXPECT_LE((z - normal.ldlt().solve(rhs)).norm(), 1e-8 * (1.0 + z.norm()));
  }
}

TEST(QuadData, BlurPreconditionerSolvesInOneIteration) {
  const ImageShape s{16, 16};
  Rng rng(82);
  const auto op = LinearMap::blur(s, gaussian_kernel(7, 1.5));
  const Vector data = rng.normal_vector(s.size());
  const auto term = ProxTerm::quad_data(op, data, 1.0);
  ProxWorkspace ws;
  const Vector v = rng.normal_vector(s.size());
  const Vector z = term.prox(v, 0.8, &ws);
  EXPECT_LE(ws.last_iterations, 2);
  const Vector rhs = v + 0.8 * op.adjoint(data);
  EXPECT_LE((z + 0.8 * op.adjoint(op.apply(z)) - rhs).norm(), 1e-9 * rhs.norm());
}

TEST(QuadData, WarmStartAtSolutionNeedsNoIterations) {
  Rng rng(83);
  const auto term = ProxTerm::quad_data(LinearMap::dense(random_matrix(10, 6, 4)), rng.normal_vector(10), 1.0);
  ProxWorkspace ws;
  const Vector v = rng.normal_vector(6);
  term.prox(v, 1.0, &ws);
  EXPECT_GT(ws.last_iterations, 0);
  term.prox(v, 1.0, &ws);
  EXPECT_EQ(ws.last_iterations, 0);
}

TEST(QuadData, FailureCarriesResidual) {
  Rng rng(84);
  CgOptions cg;
  cg.max_iterations = 1;
  const auto term = ProxTerm::quad_data(LinearMap::dense(random_matrix(40, 30, 6)), rng.normal_vector(40), 5.0, cg);
  try {
    term.prox(rng.normal_vector(30), 10.0);
    FAIL() << "expected ProxSolveError";
  } catch (const ProxSolveError& e) {
    EXPECT_GT(e.residual(), 1e-10);
    EXPECT_EQ(e.iterations(), 1);
  }
}

TEST(QuadData, IdentityOperatorMatchesShiftedSquare) {
  Rng rng(85);
  const Vector c = rng.normal_vector(9);
  const Vector v = rng.normal_vector(9);
  const Vector a = ProxTerm::quad_data(LinearMap::identity(9), c, 1.0).prox(v, 0.4);
  const Vector b = ProxTerm::sql2_shift(c, 1.0).prox(v, 0.4);
  EXPECT_LE((a - b).norm(), 1e-12);
}
