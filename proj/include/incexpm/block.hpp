#pragma once

// Block upper triangular matrices that grow one block column at a time.

#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "incexpm/dense.hpp"

namespace incexpm {

/// Diagonal block sizes b_0..b_n with cumulative offsets.
class Partition {
 public:
  Partition() { offsets_.push_back(0); }

  explicit Partition(std::vector<std::size_t> sizes) : Partition() {
    for (std::size_t b : sizes) push_back(b);
  }

  void push_back(std::size_t b) {
    if (b == 0) throw InvalidArgument("Partition: block sizes must be positive");
    sizes_.push_back(b);
    offsets_.push_back(offsets_.back() + b);
  }

  std::size_t num_blocks() const { return sizes_.size(); }
  std::size_t size(std::size_t l) const { return sizes_.at(l); }
  /// First row/column of block l.
  std::size_t begin(std::size_t l) const { return offsets_.at(l); }
  /// One past the last row/column of block l.
  std::size_t end(std::size_t l) const { return offsets_.at(l + 1); }
  std::size_t dimension() const { return offsets_.back(); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }

  /// Partition of the leading blocks 0..l.
  Partition leading(std::size_t l) const {
    if (l >= num_blocks()) throw OutOfRange("Partition::leading: block index out of range");
    return Partition({sizes_.begin(), sizes_.begin() + static_cast<std::ptrdiff_t>(l + 1)});
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
};

/// The appended part of G_n: the top part g (d_{n-1} x b_n) above the new
/// diagonal block D (b_n x b_n).
struct BlockColumn {
  DenseMatrix top;
  DenseMatrix diagonal;

  BlockColumn() = default;
  BlockColumn(DenseMatrix top_part, DenseMatrix diagonal_block)
      : top(std::move(top_part)), diagonal(std::move(diagonal_block)) {
    if (!diagonal.is_square() || diagonal.rows() == 0) {
      throw DimensionError("BlockColumn: diagonal block must be square and non-empty, got " +
                           shape_string(diagonal.rows(), diagonal.cols()));
    }
    if (top.cols() != diagonal.cols()) {
      throw DimensionError("BlockColumn: top part " + shape_string(top.rows(), top.cols()) +
                           " does not match diagonal block " +
                           shape_string(diagonal.rows(), diagonal.cols()));
    }
  }

  std::size_t width() const { return diagonal.cols(); }
};

class BlockTriangularMatrix {
 public:
  BlockTriangularMatrix() = default;

  /// Validates squareness, the partition size and exact zeros below the
  /// block diagonal. An empty partition means a single diagonal block.
  BlockTriangularMatrix(DenseMatrix data, Partition partition)
      : data_(std::move(data)), partition_(std::move(partition)) {
    if (partition_.num_blocks() == 0 && data_.rows() > 0) partition_.push_back(data_.rows());
    if (!data_.is_square() || data_.rows() != partition_.dimension()) {
      throw DimensionError("BlockTriangularMatrix: data " + shape_string(data_.rows(), data_.cols()) +
                           " does not match partition dimension " +
                           std::to_string(partition_.dimension()));
    }
    if (!is_block_upper_triangular()) {
      throw InvalidArgument("BlockTriangularMatrix: nonzero entry below the block diagonal");
    }
  }

  /// Single diagonal block.
  explicit BlockTriangularMatrix(DenseMatrix square)
      : BlockTriangularMatrix(std::move(square), Partition()) {}

  const DenseMatrix& data() const { return data_; }
  const Partition& partition() const { return partition_; }
  std::size_t dimension() const { return data_.rows(); }
  std::size_t num_blocks() const { return partition_.num_blocks(); }

  bool is_block_upper_triangular() const {
    for (std::size_t l = 0; l < partition_.num_blocks(); ++l) {
      for (std::size_t i = partition_.begin(l); i < partition_.end(l); ++i) {
        for (std::size_t j = 0; j < partition_.begin(l); ++j) {
          if (data_(i, j) != 0.0) return false;
        }
      }
    }
    return true;
  }

  /// Appends (top, diagonal) given as views; the engine uses this to avoid
  /// materializing a BlockColumn.
  void append(ConstMatrixView top, ConstMatrixView diagonal) {
    const std::size_t d = dimension();
    const std::size_t b = diagonal.rows;
    if (diagonal.cols != b || b == 0) {
      throw DimensionError("append_block_column: diagonal block " +
                           shape_string(diagonal.rows, diagonal.cols) + " is not square");
    }
    if (top.rows != d || top.cols != b) {
      throw DimensionError("append_block_column: top part " + shape_string(top.rows, top.cols) +
                           " does not fit a matrix of dimension " + std::to_string(d) +
                           " and a block of width " + std::to_string(b));
    }
    data_.grow(d + b, d + b);
    data_.set_block(0, d, top);
    data_.set_block(d, d, diagonal);
    partition_.push_back(b);
  }

  /// Room for growth up to dimension `dim` without reallocating.
  void reserve(std::size_t dim) { data_.reserve(dim, dim); }

  DenseMatrix block(std::size_t i, std::size_t j) const {
    check_block_index(i, j);
    return data_.block(partition_.begin(i), partition_.begin(j), partition_.size(i),
                       partition_.size(j));
  }
  ConstMatrixView block_view(std::size_t i, std::size_t j) const {
    check_block_index(i, j);
    return data_.view(partition_.begin(i), partition_.begin(j), partition_.size(i),
                      partition_.size(j));
  }

  /// Leading d_l x d_l part as a view, without a copy.
  ConstMatrixView leading_view(std::size_t l) const {
    if (l >= num_blocks()) throw OutOfRange("leading: block index out of range");
    const std::size_t d = partition_.end(l);
    return data_.view(0, 0, d, d);
  }

  friend bool operator==(const BlockTriangularMatrix&, const BlockTriangularMatrix&) = default;

 private:
  struct Unchecked {};
  BlockTriangularMatrix(Unchecked, DenseMatrix data, Partition partition)
      : data_(std::move(data)), partition_(std::move(partition)) {}

  void check_block_index(std::size_t i, std::size_t j) const {
    if (i >= num_blocks() || j >= num_blocks()) {
      throw OutOfRange("block(" + std::to_string(i) + "," + std::to_string(j) +
                       "): only " + std::to_string(num_blocks()) + " blocks");
    }
    if (i > j) {
      throw OutOfRange("block(" + std::to_string(i) + "," + std::to_string(j) +
                       ") lies below the block diagonal");
    }
  }

  DenseMatrix data_;
  Partition partition_;

  friend BlockTriangularMatrix leading(const BlockTriangularMatrix&, std::size_t);
  friend BlockTriangularMatrix merge_leading_blocks(const BlockTriangularMatrix&, std::size_t);
};

inline BlockTriangularMatrix append_block_column(BlockTriangularMatrix m, const BlockColumn& c) {
  m.append(c.top.view(), c.diagonal.view());
  return m;
}

inline DenseMatrix block(const BlockTriangularMatrix& m, std::size_t i, std::size_t j) {
  return m.block(i, j);
}

/// Leading principal submatrix made of blocks 0..l.
inline BlockTriangularMatrix leading(const BlockTriangularMatrix& m, std::size_t l) {
  Partition p = m.partition().leading(l);
  const std::size_t d = p.dimension();
  return BlockTriangularMatrix(BlockTriangularMatrix::Unchecked{}, m.data().block(0, 0, d, d),
                               std::move(p));
}

/// Same data; blocks 0..l fused into one diagonal block.
inline BlockTriangularMatrix merge_leading_blocks(const BlockTriangularMatrix& m, std::size_t l) {
  const Partition& old = m.partition();
  if (l >= old.num_blocks()) throw OutOfRange("merge_leading_blocks: block index out of range");
  std::vector<std::size_t> sizes{old.end(l)};
  for (std::size_t k = l + 1; k < old.num_blocks(); ++k) sizes.push_back(old.size(k));
  return BlockTriangularMatrix(BlockTriangularMatrix::Unchecked{}, m.data(),
                               Partition(std::move(sizes)));
}

}  // namespace incexpm
