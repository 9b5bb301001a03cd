#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "incexpm/dense.hpp"
#include "oracles.hpp"

using namespace incexpm;

TEST(DenseMatrix, RejectsBadExternalData) {
  EXPECT_THROW(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW(DenseMatrix(1, 2, std::vector<double>{1, NAN}), InvalidArgument);
  EXPECT_THROW(DenseMatrix(1, 1, std::vector<double>{INFINITY}), InvalidArgument);
  EXPECT_THROW((DenseMatrix{{1, 2}, {3}}), DimensionError);
}

TEST(DenseMatrix, ViewsAreBoundsChecked) {
  DenseMatrix m(3, 3);
  EXPECT_NO_THROW(m.view(1, 1, 2, 2));
  EXPECT_THROW(m.view(2, 2, 2, 1), OutOfRange);
  EXPECT_THROW(m.block(0, 0, 4, 1), OutOfRange);
}

TEST(DenseMatrix, GrowKeepsLeadingEntries) {
  std::mt19937_64 rng(3);
  const DenseMatrix a = oracle::random_dense(rng, 4, 4);
  for (bool reserved : {false, true}) {
    DenseMatrix m = a;
    if (reserved) m.reserve(9, 9);
    const double* before = m.data();
    m.grow(7, 9);
    if (reserved) EXPECT_EQ(before, m.data());
    ASSERT_EQ(m.rows(), 7u);
    ASSERT_EQ(m.cols(), 9u);
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 9; ++j) EXPECT_EQ(m(i, j), (i < 4 && j < 4) ? a(i, j) : 0.0);
  }
  DenseMatrix m = a;
  EXPECT_THROW(m.grow(3, 4), DimensionError);
}

TEST(Matmul, IdentityAndSwap) {
  std::mt19937_64 rng(1);
  const DenseMatrix a = oracle::random_dense(rng, 3, 3);
  EXPECT_EQ(matmul(DenseMatrix::identity(3), a), a);
  const DenseMatrix swapped = matmul(DenseMatrix{{1, 2}, {3, 4}}, DenseMatrix{{0, 1}, {1, 0}});
  EXPECT_EQ(swapped, (DenseMatrix{{2, 1}, {4, 3}}));
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix a = oracle::random_dense(rng, 5, 5);
    const DenseMatrix b = oracle::random_dense(rng, 5, 5);
    const DenseMatrix c = matmul(a, b);
    const DenseMatrix ref = oracle::matmul(a, b);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(c(i, j), ref(i, j), 1e-14);
  }
}

TEST(Matmul, MismatchNamesBothShapes) {
  try {
    matmul(DenseMatrix(2, 3), DenseMatrix(2, 3));
    FAIL();
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos);
    EXPECT_NE(what.find("2x3", what.find("2x3") + 1), std::string::npos);
  }
}

TEST(Matmul, AssociativeOnRandomTriples) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    const DenseMatrix a = oracle::random_dense(rng, 6, 4);
    const DenseMatrix b = oracle::random_dense(rng, 4, 7);
    const DenseMatrix c = oracle::random_dense(rng, 7, 5);
    EXPECT_LE(oracle::frobenius_rel(matmul(matmul(a, b), c), matmul(a, matmul(b, c))), 1e-12);
  }
}

TEST(LuFactor, Identity) {
  const LuFactors f = lu_factor(DenseMatrix::identity(4));
  EXPECT_EQ(f.lower(), DenseMatrix::identity(4));
  EXPECT_EQ(f.upper(), DenseMatrix::identity(4));
  EXPECT_EQ(f.perm, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_FALSE(f.ill_conditioned);
}

TEST(LuFactor, ForcedPivot) {
  const LuFactors f = lu_factor(DenseMatrix{{0, 1}, {1, 0}});
  EXPECT_EQ(f.perm, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(f.lower(), DenseMatrix::identity(2));
  EXPECT_EQ(f.upper(), DenseMatrix::identity(2));
}

TEST(LuFactor, ReconstructsDiagonallyDominant) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    DenseMatrix a = oracle::random_dense(rng, 6, 6);
    for (std::size_t i = 0; i < 6; ++i) a(i, i) += 7.0;
    const LuFactors f = lu_factor(a);
    std::vector<std::size_t> sorted = f.perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(sorted[i], i);
    DenseMatrix diff = f.permute_rows(a) - oracle::matmul(f.lower(), f.upper());
    EXPECT_LE(diff.frobenius_norm(), 1e-13 * a.frobenius_norm());
  }
}

TEST(LuFactor, GeneralMatrixNeedsPivoting) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix a = oracle::random_dense(rng, 9, 9);
    const LuFactors f = lu_factor(a);
    DenseMatrix diff = f.permute_rows(a) - oracle::matmul(f.lower(), f.upper());
    EXPECT_LE(diff.frobenius_norm(), 1e-13 * a.frobenius_norm());
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t j = 0; j < i; ++j) EXPECT_LE(std::abs(f.lu(i, j)), 1.0);
  }
}

TEST(LuFactor, SingularAndIllConditioned) {
  try {
    lu_factor(DenseMatrix{{1, 2}, {2, 4}});
    FAIL();
  } catch (const SingularMatrixError& e) {
    EXPECT_EQ(e.pivot(), 0.0);
  }
  const LuFactors f = lu_factor(DenseMatrix{{1, 1}, {1, 1 + 1e-15}});
  EXPECT_TRUE(f.ill_conditioned);
  EXPECT_LT(f.min_pivot, 1e-14);
  EXPECT_THROW(lu_factor(DenseMatrix(2, 3)), DimensionError);
}

TEST(LuSolve, IdentityAndDiagonal) {
  std::mt19937_64 rng(7);
  const DenseMatrix b = oracle::random_dense(rng, 3, 2);
  EXPECT_EQ(lu_solve(lu_factor(DenseMatrix::identity(3)), b), b);
  const DenseMatrix x = lu_solve(lu_factor(DenseMatrix{{2, 0}, {0, 4}}), DenseMatrix{{2}, {8}});
  EXPECT_EQ(x, (DenseMatrix{{1}, {2}}));
}

TEST(LuSolve, ResidualIsSmall) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    DenseMatrix a = oracle::random_dense(rng, 8, 8);
    for (std::size_t i = 0; i < 8; ++i) a(i, i) += 3.0;
    const DenseMatrix b = oracle::random_dense(rng, 8, 3);
    const DenseMatrix x = lu_solve(lu_factor(a), b);
    EXPECT_LE((oracle::matmul(a, x) - b).frobenius_norm(), 1e-12 * b.frobenius_norm());
  }
}

TEST(LuSolve, RecoversKnownSolution) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    // Condition number at most 1e6 by construction: upper triangular with
    // controlled diagonal, mixed by a permutation.
    const std::size_t n = 7;
    DenseMatrix a = oracle::random_dense(rng, n, n, 0.1);
    for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0 + i;
    const DenseMatrix x0 = oracle::random_dense(rng, n, 2);
    const DenseMatrix x = lu_solve(lu_factor(a), oracle::matmul(a, x0));
    EXPECT_LE(oracle::frobenius_rel(x0, x), 1e-10);
  }
}

TEST(LuSolve, DimensionMismatch) {
  EXPECT_THROW(lu_solve(lu_factor(DenseMatrix::identity(3)), DenseMatrix(2, 1)), DimensionError);
}

TEST(OneNorm, Examples) {
  EXPECT_EQ(one_norm(DenseMatrix(3, 4)), 0.0);
  EXPECT_EQ(one_norm(DenseMatrix{{1, -3}, {2, 1}}), 4.0);
  std::mt19937_64 rng(10);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix a = oracle::random_dense(rng, 5, 8);
    EXPECT_DOUBLE_EQ(one_norm(a), oracle::max_column_sum(a));
  }
}

TEST(OneNorm, Submultiplicative) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const DenseMatrix a = oracle::random_dense(rng, 6, 6);
    const DenseMatrix b = oracle::random_dense(rng, 6, 6);
    EXPECT_LE(one_norm(matmul(a, b)), one_norm(a) * one_norm(b) + 1e-14);
  }
}

TEST(RelErrorFrobenius, Examples) {
  std::mt19937_64 rng(12);
  const DenseMatrix a = oracle::random_dense(rng, 4, 4);
  EXPECT_EQ(rel_error_frobenius(a, a), 0.0);
  EXPECT_DOUBLE_EQ(rel_error_frobenius(DenseMatrix::identity(2), 2.0 * DenseMatrix::identity(2)), 1.0);
  EXPECT_EQ(rel_error_frobenius(DenseMatrix(2, 2), DenseMatrix(2, 2)), 0.0);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix x = oracle::random_dense(rng, 3, 5);
    const DenseMatrix y = oracle::random_dense(rng, 3, 5);
    EXPECT_NEAR(rel_error_frobenius(x, y), oracle::frobenius_rel(x, y), 1e-15);
  }
  EXPECT_THROW(rel_error_frobenius(DenseMatrix(2, 2), DenseMatrix(2, 3)), DimensionError);
}
