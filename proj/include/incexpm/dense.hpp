#pragma once

// Dense real matrices in row-major storage, the GEMM kernel every other
// module builds on, and LU factorization with partial pivoting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "incexpm/error.hpp"

namespace incexpm {

class DenseMatrix;

/// Non-owning view of a rectangular window inside a row-major matrix.
struct ConstMatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;  // distance between consecutive rows

  double operator()(std::size_t i, std::size_t j) const { return data[i * stride + j]; }
};

struct MatrixView {
  double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  double& operator()(std::size_t i, std::size_t j) const { return data[i * stride + j]; }
  operator ConstMatrixView() const { return {data, rows, cols, stride}; }
};

inline std::string shape_string(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

  /// Takes ownership of `entries` (row-major). Rejects a length mismatch and
  /// non-finite values, since this is the entry point for external data.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) {
      throw DimensionError("DenseMatrix: " + std::to_string(entries_.size()) +
                           " entries given for shape " + shape_string(rows_, cols_));
    }
    for (double v : entries_) {
      if (!std::isfinite(v)) throw InvalidArgument("DenseMatrix: non-finite entry");
    }
  }

  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    entries_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("DenseMatrix: ragged initializer");
      entries_.insert(entries_.end(), r.begin(), r.end());
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  double* data() { return entries_.data(); }
  const double* data() const { return entries_.data(); }
  std::span<const double> entries() const { return entries_; }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  MatrixView view() { return {data(), rows_, cols_, cols_}; }
  ConstMatrixView view() const { return {data(), rows_, cols_, cols_}; }

  MatrixView view(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) {
    check_window(r0, c0, nr, nc);
    return {data() + r0 * cols_ + c0, nr, nc, cols_};
  }
  ConstMatrixView view(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    check_window(r0, c0, nr, nc);
    return {data() + r0 * cols_ + c0, nr, nc, cols_};
  }

  /// Copy of the window starting at (r0, c0).
  DenseMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    return DenseMatrix::copy_of(view(r0, c0, nr, nc));
  }

  void set_block(std::size_t r0, std::size_t c0, ConstMatrixView src) {
    MatrixView dst = view(r0, c0, src.rows, src.cols);
    for (std::size_t i = 0; i < src.rows; ++i) {
      std::copy_n(src.data + i * src.stride, src.cols, dst.data + i * dst.stride);
    }
  }
  void set_block(std::size_t r0, std::size_t c0, const DenseMatrix& src) {
    set_block(r0, c0, src.view());
  }

  static DenseMatrix copy_of(ConstMatrixView v) {
    DenseMatrix m(v.rows, v.cols);
    for (std::size_t i = 0; i < v.rows; ++i) {
      std::copy_n(v.data + i * v.stride, v.cols, m.data() + i * v.cols);
    }
    return m;
  }

  /// Storage hint for later calls to grow().
  void reserve(std::size_t rows, std::size_t cols) { entries_.reserve(rows * cols); }
  std::size_t capacity() const { return entries_.capacity(); }

  /// Enlarges to nr x nc keeping the current entries in the top-left corner
  /// and zeroing the rest. In place when reserve() left enough room,
  /// otherwise moves to storage of exactly the new size.
  void grow(std::size_t nr, std::size_t nc) {
    if (nr < rows_ || nc < cols_) {
      throw DimensionError("grow: cannot shrink " + shape_string(rows_, cols_) + " to " +
                           shape_string(nr, nc));
    }
    const std::size_t oc = cols_;
    const std::size_t orows = rows_;
    if (entries_.capacity() < nr * nc) {
      std::vector<double> fresh;
      fresh.reserve(nr * nc);
      fresh.resize(nr * nc, 0.0);
      for (std::size_t i = 0; i < orows; ++i) {
        std::copy_n(entries_.data() + i * oc, oc, fresh.data() + i * nc);
      }
      entries_ = std::move(fresh);
    } else {
      entries_.resize(nr * nc, 0.0);
      double* p = entries_.data();
      // Rows move to higher offsets; go from the last row down so no source
      // row is overwritten before it is moved.
      // Every old row slot is rewritten (row, then zeros); the region past
      // row orows was zeroed by resize.
      if (nc != oc) {
        for (std::size_t i = orows; i-- > 0;) {
          std::copy_backward(p + i * oc, p + i * oc + oc, p + i * nc + oc);
          std::fill(p + i * nc + oc, p + i * nc + nc, 0.0);
        }
      }
    }
    rows_ = nr;
    cols_ = nc;
  }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  DenseMatrix& operator*=(double a) {
    for (double& v : entries_) v *= a;
    return *this;
  }
  DenseMatrix& operator+=(const DenseMatrix& o) {
    require_same_shape(o, "operator+=");
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += o.entries_[k];
    return *this;
  }
  DenseMatrix& operator-=(const DenseMatrix& o) {
    require_same_shape(o, "operator-=");
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= o.entries_[k];
    return *this;
  }
  /// this += a * o
  void add_scaled(double a, const DenseMatrix& o) {
    require_same_shape(o, "add_scaled");
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += a * o.entries_[k];
  }

  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
  friend DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : entries_) s += v * v;
    return std::sqrt(s);
  }

 private:
  void check_window(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) {
      throw OutOfRange("window " + shape_string(nr, nc) + " at (" + std::to_string(r0) + "," +
                       std::to_string(c0) + ") exceeds " + shape_string(rows_, cols_));
    }
  }
  void require_same_shape(const DenseMatrix& o, const char* what) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) {
      throw DimensionError(std::string(what) + ": shapes " + shape_string(rows_, cols_) +
                           " and " + shape_string(o.rows_, o.cols_) + " differ");
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

namespace detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor, Eigen::Unaligned, Eigen::OuterStride<>>;
using Map = Eigen::Map<RowMajor, Eigen::Unaligned, Eigen::OuterStride<>>;

inline ConstMap eigen(ConstMatrixView v) {
  return ConstMap(v.data, static_cast<Eigen::Index>(v.rows), static_cast<Eigen::Index>(v.cols),
                  Eigen::OuterStride<>(static_cast<Eigen::Index>(std::max<std::size_t>(v.stride, 1))));
}
inline Map eigen(MatrixView v) {
  return Map(v.data, static_cast<Eigen::Index>(v.rows), static_cast<Eigen::Index>(v.cols),
             Eigen::OuterStride<>(static_cast<Eigen::Index>(std::max<std::size_t>(v.stride, 1))));
}

}  // namespace detail

/// c = alpha * a * b + beta * c on views. The GEMM kernel behind every
/// product in the library.
inline void gemm(double alpha, ConstMatrixView a, ConstMatrixView b, double beta, MatrixView c) {
  if (a.cols != b.rows || c.rows != a.rows || c.cols != b.cols) {
    throw DimensionError("gemm: cannot multiply " + shape_string(a.rows, a.cols) + " by " +
                         shape_string(b.rows, b.cols) + " into " + shape_string(c.rows, c.cols));
  }
  if (c.rows == 0 || c.cols == 0) return;
  auto cm = detail::eigen(c);
  if (a.cols == 0) {
    if (beta == 0.0) cm.setZero();
    else cm *= beta;
    return;
  }
  if (beta == 0.0) {
    cm.noalias() = alpha * (detail::eigen(a) * detail::eigen(b));
  } else {
    if (beta != 1.0) cm *= beta;
    cm.noalias() += alpha * (detail::eigen(a) * detail::eigen(b));
  }
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree for " +
                         shape_string(a.rows(), a.cols()) + " times " +
                         shape_string(b.rows(), b.cols()));
  }
  DenseMatrix c(a.rows(), b.cols());
  gemm(1.0, a.view(), b.view(), 0.0, c.view());
  return c;
}

/// Maximum absolute column sum.
inline double one_norm(ConstMatrixView a) {
  std::vector<double> sums(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) sums[j] += std::abs(a(i, j));
  double m = 0.0;
  for (double s : sums) m = std::max(m, s);
  return m;
}
inline double one_norm(const DenseMatrix& a) { return one_norm(a.view()); }

/// ||a - b||_F / ||a||_F, with 0 when both vanish.
inline double rel_error_frobenius(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("rel_error_frobenius: shapes " + shape_string(a.rows(), a.cols()) +
                         " and " + shape_string(b.rows(), b.cols()) + " differ");
  }
  double diff = 0.0, ref = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = pa[k] - pb[k];
    diff += d * d;
    ref += pa[k] * pa[k];
  }
  if (diff == 0.0) return 0.0;
  if (ref == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(diff / ref);
}

// ---------------------------------------------------------------------------
// LU with partial pivoting

/// Packed factors of P*A = L*U. `lu` holds the strictly lower part of the
/// unit lower triangular L and the upper triangle U; row i of P*A is row
/// perm[i] of A.
struct LuFactors {
  std::size_t dimension = 0;
  DenseMatrix lu;
  std::vector<std::size_t> perm;
  double min_pivot = 0.0;
  bool ill_conditioned = false;

  DenseMatrix lower() const {
    DenseMatrix l = DenseMatrix::identity(dimension);
    for (std::size_t i = 0; i < dimension; ++i)
      for (std::size_t j = 0; j < i; ++j) l(i, j) = lu(i, j);
    return l;
  }
  DenseMatrix upper() const {
    DenseMatrix u(dimension, dimension);
    for (std::size_t i = 0; i < dimension; ++i)
      for (std::size_t j = i; j < dimension; ++j) u(i, j) = lu(i, j);
    return u;
  }
  /// P*A for a matrix with `dimension` rows.
  DenseMatrix permute_rows(const DenseMatrix& a) const {
    DenseMatrix pa(a.rows(), a.cols());
    for (std::size_t i = 0; i < dimension; ++i)
      std::copy_n(a.data() + perm[i] * a.cols(), a.cols(), pa.data() + i * a.cols());
    return pa;
  }
};

/// Pivots below this multiple of ||A||_1 set LuFactors::ill_conditioned.
inline constexpr double kPivotWarningRatio = 1e-14;

inline LuFactors lu_factor(const DenseMatrix& a) {
  if (!a.is_square()) {
    throw DimensionError("lu_factor: matrix is " + shape_string(a.rows(), a.cols()) +
                         ", expected square");
  }
  const std::size_t n = a.rows();
  LuFactors f;
  f.dimension = n;
  f.perm.resize(n);
  if (n == 0) {
    f.min_pivot = std::numeric_limits<double>::infinity();
    return f;
  }

  Eigen::MatrixXd work = detail::eigen(a.view());
  Eigen::PartialPivLU<Eigen::MatrixXd> plu(n);
  plu.compute(work);
  const auto& packed = plu.matrixLU();
  f.lu = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      f.lu(i, j) = packed(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  // Eigen's P maps row i of A to row indices(i) of P*A.
  const auto& idx = plu.permutationP().indices();
  for (std::size_t i = 0; i < n; ++i) f.perm[static_cast<std::size_t>(idx(static_cast<Eigen::Index>(i)))] = i;

  f.min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) f.min_pivot = std::min(f.min_pivot, std::abs(f.lu(i, i)));
  if (f.min_pivot == 0.0) {
    throw SingularMatrixError("lu_factor: exactly zero pivot", 0.0);
  }
  f.ill_conditioned = f.min_pivot < kPivotWarningRatio * one_norm(a);
  return f;
}

/// Solves A X = B in place on a view with f.dimension rows.
inline void lu_solve_in_place(const LuFactors& f, MatrixView b) {
  if (b.rows != f.dimension) {
    throw DimensionError("lu_solve: factors of order " + std::to_string(f.dimension) +
                         " against right-hand side " + shape_string(b.rows, b.cols));
  }
  if (f.dimension == 0 || b.cols == 0) return;
  if (f.min_pivot == 0.0) throw SingularMatrixError("lu_solve: singular factors", 0.0);
  DenseMatrix permuted(b.rows, b.cols);
  for (std::size_t i = 0; i < f.dimension; ++i)
    std::copy_n(b.data + f.perm[i] * b.stride, b.cols, permuted.data() + i * b.cols);
  auto x = detail::eigen(permuted.view());
  auto lu = detail::eigen(f.lu.view());
  lu.triangularView<Eigen::UnitLower>().solveInPlace(x);
  lu.triangularView<Eigen::Upper>().solveInPlace(x);
  auto out = detail::eigen(b);
  out = x;
}

inline DenseMatrix lu_solve(const LuFactors& f, const DenseMatrix& b) {
  DenseMatrix x = b;
  lu_solve_in_place(f, x.view());
  return x;
}

}  // namespace incexpm
