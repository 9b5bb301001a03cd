#pragma once

// Incremental scaling and squaring for nested block upper triangular
// matrices G_0, G_1, ...: each step appends one block column and computes
// only the new block column of exp(G_n), reusing
//   - the scaled matrix and p/q evaluations of the previous stage,
//   - LU factors of every diagonal block of q(2^-s G),
//   - every intermediate square r(2^-s G)^(2^l), l = 0..s.
// Per-step cost is O(d^2 b + d b^2 + b^3); nothing of order d^3 is redone.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "incexpm/block.hpp"
#include "incexpm/dense.hpp"
#include "incexpm/pade.hpp"

namespace incexpm {

struct StepReport {
  std::size_t step = 0;
  std::size_t dimension = 0;
  bool restart = false;
  int s = 0;
  double seconds = 0.0;
};

/// New last block columns of P_n = p(2^-s G_n) and Q_n = q(2^-s G_n), plus
/// the scaled pieces of the appended column they were built from.
struct PqColumns {
  DenseMatrix scaled_top;       // 2^-s g_n
  DenseMatrix scaled_diagonal;  // 2^-s G_nn
  DenseMatrix p_top, p_diagonal;
  DenseMatrix q_top, q_diagonal;
};

/// Last block column of Q_n^-1 P_n and the LU factors of Q_nn.
struct RationalColumn {
  DenseMatrix top;
  DenseMatrix diagonal;
  LuFactors diagonal_lu;
};

/// Last block column of every cached square, l = 0..s. Entry s is the new
/// block column of F_n.
struct SquaredColumns {
  std::vector<DenseMatrix> tops;
  std::vector<DenseMatrix> diagonals;
};

class IncrementalExpState {
 public:
  /// Scaling and squaring of g0 with the given s; keeps every intermediate.
  static IncrementalExpState init(const DenseMatrix& g0, int s, PadeCoefficients pade) {
    ScalingSquaringTrace t = scaling_squaring(g0, s, pade, /*keep_trace=*/true);
    IncrementalExpState st;
    st.s_ = s;
    st.pade_ = std::move(pade);
    st.scaled_ = BlockTriangularMatrix(std::move(t.scaled));
    st.p_ = BlockTriangularMatrix(std::move(t.p));
    st.q_ = BlockTriangularMatrix(std::move(t.q));
    st.lu_.push_back(std::move(t.q_lu));
    st.squares_.reserve(t.squares.size());
    for (auto& sq : t.squares) st.squares_.emplace_back(std::move(sq));
    return st;
  }

  int scaling_power() const { return s_; }
  const PadeCoefficients& pade() const { return pade_; }
  std::size_t dimension() const { return scaled_.dimension(); }
  std::size_t num_blocks() const { return scaled_.num_blocks(); }
  const Partition& partition() const { return scaled_.partition(); }

  /// 2^-s G_n.
  const BlockTriangularMatrix& scaled_matrix() const { return scaled_; }
  const BlockTriangularMatrix& p() const { return p_; }
  const BlockTriangularMatrix& q() const { return q_; }
  const std::vector<LuFactors>& diagonal_lu() const { return lu_; }
  /// squares()[l] = (Q^-1 P)^(2^l), l = 0..s.
  const std::vector<BlockTriangularMatrix>& squares() const { return squares_; }
  /// F_n, the current approximation of exp(G_n).
  const BlockTriangularMatrix& exponential() const { return squares_.back(); }

  /// Unscaled G_n, recovered exactly (scaling by 2^s is exact).
  DenseMatrix unscaled_matrix() const {
    DenseMatrix g = scaled_.data();
    g *= std::ldexp(1.0, s_);
    return g;
  }

  /// Appends one block column and extends F, P, Q, G and all caches.
  void step(const BlockColumn& c);

  /// Pre-sizes every cached matrix for growth up to dimension `dim`.
  void reserve(std::size_t dim) {
    scaled_.reserve(dim);
    p_.reserve(dim);
    q_.reserve(dim);
    for (auto& sq : squares_) sq.reserve(dim);
  }

 private:
  friend void commit_step(IncrementalExpState&, PqColumns&&, RationalColumn&&, SquaredColumns&&);

  int s_ = 0;
  PadeCoefficients pade_;
  BlockTriangularMatrix scaled_;
  BlockTriangularMatrix p_;
  BlockTriangularMatrix q_;
  std::vector<LuFactors> lu_;
  std::vector<BlockTriangularMatrix> squares_;
};

inline IncrementalExpState init(const DenseMatrix& g0, int s, PadeCoefficients pade) {
  return IncrementalExpState::init(g0, s, std::move(pade));
}

/// Evaluates the new block columns of p(2^-s G_n) and q(2^-s G_n) from the
/// off-diagonal blocks X_l of (2^-s G_n)^l:
///   X_1 = g~,  X_l = G~_{n-1} X_{l-1} + g~ G~_nn^(l-1).
inline PqColumns extend_pq(const IncrementalExpState& state, const BlockColumn& c) {
  const std::size_t d = state.dimension();
  const std::size_t b = c.width();
  if (c.top.rows() != d) {
    throw DimensionError("extend_pq: column has " + std::to_string(c.top.rows()) +
                         " rows above the diagonal block, expected " + std::to_string(d));
  }
  const PadeCoefficients& pade = state.pade();
  const double scale = std::ldexp(1.0, -state.scaling_power());

  PqColumns out;
  out.scaled_top = c.top;
  out.scaled_top *= scale;
  out.scaled_diagonal = c.diagonal;
  out.scaled_diagonal *= scale;
  const DenseMatrix& g = out.scaled_top;
  const DenseMatrix& dg = out.scaled_diagonal;
  const ConstMatrixView prev = state.scaled_matrix().data().view();

  out.p_top = DenseMatrix(d, b);
  out.q_top = DenseMatrix(d, b);
  out.p_diagonal = pade.numerator[0] * DenseMatrix::identity(b);
  out.q_diagonal = pade.denominator[0] * DenseMatrix::identity(b);

  DenseMatrix x = g;            // X_l
  DenseMatrix dpow = dg;        // G~_nn^l
  DenseMatrix x_next(d, b);
  DenseMatrix dpow_next(b, b);
  for (int l = 1; l <= pade.degree; ++l) {
    if (l > 1) {
      // dpow holds G~_nn^(l-1) here.
      gemm(1.0, prev, x.view(), 0.0, x_next.view());
      gemm(1.0, g.view(), dpow.view(), 1.0, x_next.view());
      std::swap(x, x_next);
      gemm(1.0, dpow.view(), dg.view(), 0.0, dpow_next.view());
      std::swap(dpow, dpow_next);
    }
    out.p_top.add_scaled(pade.numerator[l], x);
    out.q_top.add_scaled(pade.denominator[l], x);
    out.p_diagonal.add_scaled(pade.numerator[l], dpow);
    out.q_diagonal.add_scaled(pade.denominator[l], dpow);
  }
  return out;
}

/// Last block column of Q_n^-1 P_n by block back substitution against the
/// cached LU factors of Q_00 .. Q_{n-1,n-1}.
inline RationalColumn solve_rational_column(const IncrementalExpState& state,
                                            const PqColumns& pq) {
  const std::size_t d = state.dimension();
  const std::size_t b = pq.p_diagonal.rows();
  const Partition& part = state.partition();
  if (state.diagonal_lu().size() != part.num_blocks()) {
    throw InvariantViolation("solve_rational_column: LU cache holds " +
                             std::to_string(state.diagonal_lu().size()) + " factors for " +
                             std::to_string(part.num_blocks()) + " blocks");
  }
  if (pq.p_top.rows() != d || pq.q_top.rows() != d) {
    throw DimensionError("solve_rational_column: column height does not match state");
  }

  RationalColumn out;
  out.diagonal_lu = lu_factor(pq.q_diagonal);
  if (out.diagonal_lu.ill_conditioned) {
    throw SingularMatrixError(
        "solve_rational_column: diagonal block of q(2^-s G) is numerically singular "
        "(smallest pivot " + std::to_string(out.diagonal_lu.min_pivot) +
            "); the scaling power or Pade degree is out of range",
        out.diagonal_lu.min_pivot);
  }
  out.diagonal = lu_solve(out.diagonal_lu, pq.p_diagonal);

  // Y = p_n - q_n * F~_nn, then solved in place block row by block row.
  out.top = pq.p_top;
  gemm(-1.0, pq.q_top.view(), out.diagonal.view(), 1.0, out.top.view());

  const DenseMatrix& q = state.q().data();
  for (std::size_t k = part.num_blocks(); k-- > 0;) {
    const std::size_t r0 = part.begin(k);
    const std::size_t nr = part.size(k);
    const std::size_t tail = part.end(k);
    MatrixView rows = out.top.view(r0, 0, nr, b);
    if (tail < d) {
      gemm(-1.0, q.view(r0, tail, nr, d - tail), out.top.view(tail, 0, d - tail, b), 1.0, rows);
    }
    lu_solve_in_place(state.diagonal_lu()[k], rows);
  }
  return out;
}

/// New block columns of (F~_n)^(2^l), l = 0..s, from
///   Z_0 = f~_n,  Z_l = F~_{n-1}^(2^(l-1)) Z_{l-1} + Z_{l-1} F~_nn^(2^(l-1)),
/// given the cached squares F~_{n-1}^(2^l), l = 0..s.
inline SquaredColumns squaring_column(const std::vector<BlockTriangularMatrix>& squares, int s,
                                      const RationalColumn& f) {
  if (s < 0 || squares.size() != static_cast<std::size_t>(s) + 1) {
    throw InvariantViolation("squaring_column: cache holds " + std::to_string(squares.size()) +
                             " squares, expected s+1 = " + std::to_string(s + 1));
  }
  const std::size_t d = squares.front().dimension();
  const std::size_t b = f.diagonal.rows();
  if (f.top.rows() != d) throw DimensionError("squaring_column: column height does not match state");

  SquaredColumns out;
  out.tops.reserve(static_cast<std::size_t>(s) + 1);
  out.diagonals.reserve(static_cast<std::size_t>(s) + 1);
  out.tops.push_back(f.top);
  out.diagonals.push_back(f.diagonal);
  for (int l = 1; l <= s; ++l) {
    const DenseMatrix& z = out.tops.back();
    const DenseMatrix& e = out.diagonals.back();
    DenseMatrix z_next(d, b);
    gemm(1.0, squares[static_cast<std::size_t>(l - 1)].data().view(), z.view(), 0.0, z_next.view());
    gemm(1.0, z.view(), e.view(), 1.0, z_next.view());
    DenseMatrix e_next(b, b);
    gemm(1.0, e.view(), e.view(), 0.0, e_next.view());
    out.tops.push_back(std::move(z_next));
    out.diagonals.push_back(std::move(e_next));
  }
  return out;
}

inline SquaredColumns squaring_column(const IncrementalExpState& state, const RationalColumn& f) {
  return squaring_column(state.squares(), state.scaling_power(), f);
}

inline void commit_step(IncrementalExpState& st, PqColumns&& pq, RationalColumn&& f,
                        SquaredColumns&& sq) {
  st.scaled_.append(pq.scaled_top.view(), pq.scaled_diagonal.view());
  st.p_.append(pq.p_top.view(), pq.p_diagonal.view());
  st.q_.append(pq.q_top.view(), pq.q_diagonal.view());
  st.lu_.push_back(std::move(f.diagonal_lu));
  for (std::size_t l = 0; l < st.squares_.size(); ++l) {
    st.squares_[l].append(sq.tops[l].view(), sq.diagonals[l].view());
  }
}

inline void IncrementalExpState::step(const BlockColumn& c) {
  PqColumns pq = extend_pq(*this, c);
  RationalColumn f = solve_rational_column(*this, pq);
  SquaredColumns sq = squaring_column(*this, f);
  commit_step(*this, std::move(pq), std::move(f), std::move(sq));
}

inline IncrementalExpState step(IncrementalExpState state, const BlockColumn& c) {
  state.step(c);
  return state;
}

// ---------------------------------------------------------------------------
// Sequence drivers

/// Fixed scaling power, or adaptive restarts keeping 2^-s ||G_l||_1 <= theta.
struct ScalingStrategy {
  enum class Kind { fixed, adaptive };
  Kind kind = Kind::adaptive;
  int s = 0;
  double theta = kTheta13;

  static ScalingStrategy fixed(int s) { return {Kind::fixed, s, kTheta13}; }
  static ScalingStrategy adaptive(double theta = kTheta13) { return {Kind::adaptive, 0, theta}; }

  /// "fixed:<s>", "adaptive" or "adaptive:<theta>".
  static ScalingStrategy parse(const std::string& text) {
    try {
      if (text == "adaptive") return adaptive();
      if (text.rfind("adaptive:", 0) == 0) return adaptive(std::stod(text.substr(9)));
      if (text.rfind("fixed:", 0) == 0) {
        const int s = std::stoi(text.substr(6));
        if (s < 0) throw InvalidArgument("negative scaling power");
        return fixed(s);
      }
    } catch (const std::logic_error&) {
    }
    throw InvalidArgument("scaling strategy '" + text +
                          "' is not one of fixed:<s>, adaptive, adaptive:<theta>");
  }

  std::string label() const {
    return kind == Kind::fixed ? "fixed:" + std::to_string(s) : std::string("adaptive");
  }
};

/// Drives an IncrementalExpState through a sequence of appended columns,
/// restarting on the repartitioned matrix when the adaptive norm test fails.
class IncrementalExpm {
 public:
  IncrementalExpm(ScalingStrategy strategy, PadeCoefficients pade)
      : strategy_(strategy), pade_(std::move(pade)) {
    if (strategy_.kind == ScalingStrategy::Kind::adaptive && !(strategy_.theta > 0.0)) {
      throw InvalidArgument("IncrementalExpm: theta must be positive");
    }
    if (strategy_.kind == ScalingStrategy::Kind::fixed && strategy_.s < 0) {
      throw InvalidArgument("IncrementalExpm: negative scaling power");
    }
  }

  /// Computes F_0 = exp(G_0).
  StepReport start(const DenseMatrix& g0) {
    const auto t0 = Clock::now();
    norm_ = one_norm(g0);
    const int s = strategy_.kind == ScalingStrategy::Kind::fixed
                      ? strategy_.s
                      : select_scaling_for_norm(norm_, strategy_.theta).s;
    state_.emplace(IncrementalExpState::init(g0, s, pade_));
    if (reserve_ > 0) state_->reserve(reserve_);
    steps_ = 0;
    restarts_ = 0;
    return report(false, t0);
  }

  /// Appends a block column and computes F_n.
  StepReport push(const BlockColumn& c) {
    if (!state_) throw InvalidArgument("IncrementalExpm::push before start");
    const auto t0 = Clock::now();
    const double norm = std::max(norm_, column_one_norm(c));
    ++steps_;
    bool restart = false;
    if (strategy_.kind == ScalingStrategy::Kind::adaptive &&
        std::ldexp(norm, -state_->scaling_power()) > strategy_.theta) {
      // Fuse all blocks including the new one and start over with the s the
      // norm test demands; F_n is then exactly the non-incremental result.
      DenseMatrix g = state_->unscaled_matrix();
      BlockTriangularMatrix grown(std::move(g));
      grown.append(c.top.view(), c.diagonal.view());
      const int s = select_scaling_for_norm(norm, strategy_.theta).s;
      state_.reset();
      state_.emplace(IncrementalExpState::init(grown.data(), s, pade_));
      if (reserve_ > 0) state_->reserve(reserve_);
      restart = true;
      ++restarts_;
    } else {
      state_->step(c);
    }
    norm_ = norm;
    return report(restart, t0);
  }

  /// Expected final dimension; cached matrices then grow in place.
  void reserve(std::size_t dim) {
    reserve_ = dim;
    if (state_) state_->reserve(dim);
  }

  const IncrementalExpState& state() const { return *state_; }
  const BlockTriangularMatrix& exponential() const { return state_->exponential(); }
  std::size_t restarts() const { return restarts_; }
  /// ||G_n||_1, tracked column by column.
  double norm() const { return norm_; }
  const ScalingStrategy& strategy() const { return strategy_; }

 private:
  using Clock = std::chrono::steady_clock;

  static double column_one_norm(const BlockColumn& c) {
    double m = 0.0;
    for (std::size_t j = 0; j < c.width(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < c.top.rows(); ++i) s += std::abs(c.top(i, j));
      for (std::size_t i = 0; i < c.diagonal.rows(); ++i) s += std::abs(c.diagonal(i, j));
      m = std::max(m, s);
    }
    return m;
  }

  StepReport report(bool restart, Clock::time_point t0) const {
    StepReport r;
    r.step = steps_;
    r.dimension = state_->dimension();
    r.restart = restart;
    r.s = state_->scaling_power();
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return r;
  }

  ScalingStrategy strategy_;
  PadeCoefficients pade_;
  std::optional<IncrementalExpState> state_;
  double norm_ = 0.0;
  std::size_t reserve_ = 0;
  std::size_t steps_ = 0;
  std::size_t restarts_ = 0;
};

using ColumnSource = std::function<std::optional<BlockColumn>()>;
/// Receives each F_n with its report; returning true stops the run.
using StageVisitor = std::function<bool(const BlockTriangularMatrix&, const StepReport&)>;

inline void run_sequence(const DenseMatrix& g0, const ColumnSource& columns,
                         ScalingStrategy strategy, const PadeCoefficients& pade,
                         const StageVisitor& visit) {
  IncrementalExpm engine(strategy, pade);
  StepReport r = engine.start(g0);
  if (visit(engine.exponential(), r)) return;
  while (auto c = columns()) {
    r = engine.push(*c);
    if (visit(engine.exponential(), r)) return;
  }
}

/// Fixed scaling power throughout.
inline void run_fixed(const DenseMatrix& g0, const ColumnSource& columns, int s,
                      const PadeCoefficients& pade, const StageVisitor& visit) {
  run_sequence(g0, columns, ScalingStrategy::fixed(s), pade, visit);
}

/// Adaptive scaling with repartitioned restarts.
inline void run_adaptive(const DenseMatrix& g0, const ColumnSource& columns,
                         const PadeCoefficients& pade, double theta, const StageVisitor& visit) {
  run_sequence(g0, columns, ScalingStrategy::adaptive(theta), pade, visit);
}

}  // namespace incexpm
