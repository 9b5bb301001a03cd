#include <gtest/gtest.h>

#include <random>

#include "incexpm/block.hpp"
#include "incexpm/generators.hpp"
#include "oracles.hpp"

using namespace incexpm;

TEST(Partition, OffsetsAndValidation) {
  Partition p({1, 2, 3});
  EXPECT_EQ(p.num_blocks(), 3u);
  EXPECT_EQ(p.begin(2), 3u);
  EXPECT_EQ(p.end(2), 6u);
  EXPECT_EQ(p.dimension(), 6u);
  EXPECT_THROW(Partition({2, 0}), InvalidArgument);
  EXPECT_THROW(p.size(3), std::out_of_range);
}

TEST(BlockTriangularMatrix, ConstructorChecksStructure) {
  EXPECT_THROW(BlockTriangularMatrix(DenseMatrix{{1, 2}, {3, 4}}, Partition({1, 1})), InvalidArgument);
  EXPECT_NO_THROW(BlockTriangularMatrix(DenseMatrix{{1, 2}, {3, 4}}, Partition({2})));
  EXPECT_THROW(BlockTriangularMatrix(DenseMatrix(3, 3), Partition({1, 1})), DimensionError);
  EXPECT_THROW(BlockTriangularMatrix(DenseMatrix(2, 3)), DimensionError);
  EXPECT_EQ(BlockTriangularMatrix(DenseMatrix(3, 3)).num_blocks(), 1u);
}

TEST(AppendBlockColumn, ToEmpty) {
  const BlockTriangularMatrix m =
      append_block_column(BlockTriangularMatrix(), BlockColumn(DenseMatrix(0, 1), DenseMatrix{{7}}));
  EXPECT_EQ(m.data(), (DenseMatrix{{7}}));
  EXPECT_EQ(m.partition(), Partition({1}));
}

TEST(AppendBlockColumn, DirectConstruction) {
  const BlockTriangularMatrix m(DenseMatrix{{1, 5}, {0, 6}}, Partition({1, 1}));
  const BlockTriangularMatrix grown =
      append_block_column(m, BlockColumn(DenseMatrix{{2}, {3}}, DenseMatrix{{4}}));
  EXPECT_EQ(grown.data(), (DenseMatrix{{1, 5, 2}, {0, 6, 3}, {0, 0, 4}}));
  EXPECT_EQ(grown.partition(), Partition({1, 1, 1}));
  EXPECT_TRUE(grown.is_block_upper_triangular());
}

TEST(AppendBlockColumn, RowCountMismatch) {
  const BlockTriangularMatrix m(DenseMatrix::identity(2));
  EXPECT_THROW(append_block_column(m, BlockColumn(DenseMatrix(3, 1), DenseMatrix{{1}})), DimensionError);
  EXPECT_THROW(BlockColumn(DenseMatrix(2, 2), DenseMatrix(1, 1)), DimensionError);
  EXPECT_THROW(BlockColumn(DenseMatrix(2, 1), DenseMatrix(1, 2)), DimensionError);
}

TEST(AppendBlockColumn, GeneratorColumnExtendsGenerator) {
  const PolynomialOperatorSpec spec = jacobi_spec(oracle::reference_jacobi());
  const BlockTriangularMatrix g1 = build_generator_matrix(spec, 1);
  const BlockTriangularMatrix g2 = append_block_column(g1, generator_block_column(spec, 2));
  EXPECT_EQ(g2, build_generator_matrix(spec, 2));
}

TEST(Block, Access) {
  std::mt19937_64 rng(30);
  const BlockTriangularMatrix m = oracle::random_block_triangular(rng, {2, 3, 1});
  EXPECT_EQ(block(m, 1, 1), m.data().block(2, 2, 3, 3));
  EXPECT_THROW(block(m, 2, 1), OutOfRange);
  EXPECT_THROW(block(m, 0, 3), OutOfRange);

  // Reassembling all blocks gives the data back.
  DenseMatrix re(6, 6);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i; j < 3; ++j) re.set_block(m.partition().begin(i), m.partition().begin(j), block(m, i, j));
  EXPECT_EQ(re, m.data());
}

TEST(Block, GeneratorFirstRow) {
  const JacobiParams p = oracle::reference_jacobi();
  const BlockTriangularMatrix g2 = build_generator_matrix(jacobi_spec(p), 2);
  EXPECT_EQ(block(g2, 0, 1), (DenseMatrix{{p.r, p.kappa * p.theta}}));
}

TEST(Leading, Examples) {
  std::mt19937_64 rng(31);
  const BlockTriangularMatrix m = oracle::random_block_triangular(rng, {2, 3, 1});
  EXPECT_EQ(leading(m, 2), m);
  EXPECT_THROW(leading(m, 3), OutOfRange);
  const BlockTriangularMatrix grown =
      append_block_column(m, BlockColumn(oracle::random_dense(rng, 6, 2), oracle::random_dense(rng, 2, 2)));
  EXPECT_EQ(leading(grown, 2), m);

  const JacobiParams p = oracle::reference_jacobi();
  const BlockTriangularMatrix g2 = build_generator_matrix(jacobi_spec(p), 2);
  const DenseMatrix golden = oracle::jacobi_g2(p);
  EXPECT_EQ(leading(g2, 1).data(), golden.block(0, 0, 3, 3));
}

TEST(MergeLeadingBlocks, Examples) {
  std::mt19937_64 rng(32);
  const BlockTriangularMatrix m = oracle::random_block_triangular(rng, {1, 2, 3});
  EXPECT_EQ(merge_leading_blocks(m, 0), m);
  const BlockTriangularMatrix merged = merge_leading_blocks(m, 1);
  EXPECT_EQ(merged.partition(), Partition({3, 3}));
  EXPECT_EQ(merged.data(), m.data());
  EXPECT_EQ(merge_leading_blocks(m, 2).partition(), Partition({6}));
  EXPECT_THROW(merge_leading_blocks(m, 3), OutOfRange);
}

TEST(BlockProperties, AppendSequenceNests) {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 10; ++t) {
    BlockTriangularMatrix m;
    std::vector<BlockTriangularMatrix> stages;
    for (std::size_t b : oracle::random_sizes(rng, 8, 1, 4)) {
      m = append_block_column(m, BlockColumn(oracle::random_dense(rng, m.dimension(), b),
                                             oracle::random_dense(rng, b, b)));
      EXPECT_TRUE(m.is_block_upper_triangular());
      stages.push_back(m);
    }
    for (std::size_t l = 1; l < stages.size(); ++l) EXPECT_EQ(leading(stages[l], l - 1), stages[l - 1]);
  }
}

TEST(BlockProperties, ReservedAppendMatchesFresh) {
  std::mt19937_64 rng(34);
  BlockTriangularMatrix a, b;
  b.reserve(40);
  for (std::size_t sz : oracle::random_sizes(rng, 10, 1, 4)) {
    const BlockColumn c(oracle::random_dense(rng, a.dimension(), sz), oracle::random_dense(rng, sz, sz));
    a = append_block_column(a, c);
    b.append(c.top.view(), c.diagonal.view());
    EXPECT_EQ(a, b);
  }
}
