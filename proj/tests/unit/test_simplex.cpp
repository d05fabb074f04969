#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "varimix/simplex.hpp"

using namespace varimix;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

double objective(const Matrix& g, const Vector& c, const Vector& x) { return 0.5 * x.dot(g * x) - c.dot(x); }

}  // namespace

TEST(ProjectToSimplex, FeasibleAndIdempotent) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int t = 0; t < 200; ++t) {
    Vector v(6);
    for (auto& x : v) x = n(rng);
    const Vector p = project_to_simplex(v);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_NEAR((project_to_simplex(p) - p).norm(), 0.0, 1e-12);
    // variational inequality of a Euclidean projection
    for (int k = 0; k < 6; ++k) {
      Vector e = Vector::Zero(6);
      e(k) = 1.0;
      EXPECT_LE((v - p).dot(e - p), 1e-10);
    }
  }
}

TEST(ProjectToSimplex, KnownValues) {
  Vector v(3);
  v << 0.5, 0.5, 0.5;
  EXPECT_NEAR((project_to_simplex(v) - Vector::Constant(3, 1.0 / 3.0)).norm(), 0.0, 1e-15);
  v << 2.0, 0.0, 0.0;
  EXPECT_NEAR((project_to_simplex(v) - Vector::Unit(3, 0)).norm(), 0.0, 1e-15);
  v << 0.2, 0.3, 0.4;
  EXPECT_NEAR(project_to_simplex(v, 2.0).sum(), 2.0, 1e-12);
}

TEST(ActiveSetQp, MatchesEnumerationOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 300; ++t) {
    const Eigen::Index p = 2 + t % 6;
    const Matrix m = random_matrix(rng, 20, p);
    const Vector y = random_matrix(rng, 20, 1).col(0) * 1.5 - Vector::Constant(20, 0.2);
    const Matrix g = m.transpose() * m;
    const Vector c = m.transpose() * y;
    for (const bool sto : {true, false}) {
      const QpResult r = solve_nonneg_qp(g, c, sto);
      const Vector ref = oracle::qp_enumerate(g, c, sto);
      EXPECT_TRUE(r.converged);
      EXPECT_LE(objective(g, c, r.x), objective(g, c, ref) + 1e-10 * (1 + std::abs(objective(g, c, ref))));
      EXPECT_LE(qp_kkt_residual(g, c, r.x, sto), 1e-8);
      EXPECT_GE(r.x.minCoeff(), 0.0);
      if (sto) EXPECT_NEAR(r.x.sum(), 1.0, 1e-12);
    }
  }
}

TEST(ActiveSetQp, RankDeficientGram) {
  Matrix m(4, 3);
  m << 1, 2, 3, 0, 1, 1, 1, 0, 1, 2, 1, 3;  // third column = first + second
  Vector y(4);
  y << 2, 0.5, 1, 1.5;
  const Matrix g = m.transpose() * m;
  const Vector c = m.transpose() * y;
  const QpResult r = solve_nonneg_qp(g, c, true);
  const Vector ref = oracle::qp_enumerate(g, c, true);
  EXPECT_NEAR(objective(g, c, r.x), objective(g, c, ref), 1e-10);
  EXPECT_NEAR(r.x.sum(), 1.0, 1e-12);
}

TEST(AdmmQp, AgreesWithActiveSet) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const Matrix m = random_matrix(rng, 30, 4) + Matrix::Identity(30, 4);
    const Vector y = m * project_to_simplex(random_matrix(rng, 4, 1).col(0)) + 0.01 * random_matrix(rng, 30, 1).col(0);
    const Matrix g = m.transpose() * m;
    const Vector c = m.transpose() * y;
    const QpResult admm = solve_simplex_qp_admm(g, c);
    const Vector exact = solve_nonneg_qp(g, c, true).x;
    EXPECT_NEAR(admm.x.sum(), 1.0, 1e-12);
    EXPECT_GE(admm.x.minCoeff(), 0.0);
    EXPECT_LE((admm.x - exact).lpNorm<Eigen::Infinity>(), 1e-5);
  }
}

TEST(KktResidual, DetectsSuboptimalPoint) {
  Matrix g = Matrix::Identity(2, 2);
  Vector c(2);
  c << 1.0, 0.0;
  Vector opt(2), bad(2);
  opt << 1.0, 0.0;
  bad << 0.5, 0.5;
  EXPECT_LE(qp_kkt_residual(g, c, opt, true), 1e-15);
  EXPECT_GT(qp_kkt_residual(g, c, bad, true), 0.1);
}
