#pragma once

// Non-incremental scaling and squaring with diagonal Pade approximants.
// Serves as the reference exponential and as the kernel that seeds (and
// reseeds) the incremental engine.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "incexpm/dense.hpp"

namespace incexpm {

/// Norm threshold paired with the degree 13 approximant.
inline constexpr double kTheta13 = 5.371920351148152;
inline constexpr int kDefaultPadeDegree = 13;
inline constexpr int kMaxPadeDegree = 13;

/// Diagonal (m, m) Pade approximant p(z)/q(z) to exp(z), with q(z) = p(-z).
struct PadeCoefficients {
  int degree = 0;
  std::vector<double> numerator;    // alpha_0 .. alpha_m
  std::vector<double> denominator;  // beta_l = (-1)^l alpha_l
};

inline PadeCoefficients pade_coefficients(int m) {
  if (m < 1 || m > kMaxPadeDegree) {
    throw InvalidArgument("pade_coefficients: unsupported degree " + std::to_string(m) +
                          " (supported: 1.." + std::to_string(kMaxPadeDegree) + ")");
  }
  PadeCoefficients c;
  c.degree = m;
  c.numerator.resize(m + 1);
  c.denominator.resize(m + 1);
  c.numerator[0] = 1.0;
  for (int l = 0; l < m; ++l) {
    c.numerator[l + 1] = c.numerator[l] * static_cast<double>(m - l) /
                         (static_cast<double>(2 * m - l) * static_cast<double>(l + 1));
  }
  for (int l = 0; l <= m; ++l) c.denominator[l] = (l % 2 == 0) ? c.numerator[l] : -c.numerator[l];
  return c;
}

struct ScalingChoice {
  int s = 0;
  double theta = kTheta13;
};

/// Smallest s >= 0 with 2^-s * norm <= theta.
inline ScalingChoice select_scaling_for_norm(double norm, double theta) {
  if (!(theta > 0.0)) throw InvalidArgument("select_scaling: theta must be positive");
  if (!std::isfinite(norm)) throw InvalidArgument("select_scaling: non-finite norm");
  ScalingChoice c{0, theta};
  while (std::ldexp(norm, -c.s) > theta) ++c.s;
  return c;
}

inline ScalingChoice select_scaling(const DenseMatrix& g, double theta) {
  return select_scaling_for_norm(one_norm(g), theta);
}

/// Everything the scaling and squaring pass produces along the way.
struct ScalingSquaringTrace {
  int s = 0;
  DenseMatrix scaled;                // 2^-s G
  DenseMatrix p;                     // p(2^-s G)
  DenseMatrix q;                     // q(2^-s G)
  LuFactors q_lu;
  std::vector<DenseMatrix> squares;  // r(2^-s G)^(2^l), l = 0..s
};

namespace detail {

/// Accumulates p(a) and q(a) by explicit powers a, a^2, .., a^m in that order.
inline void pade_polynomials(const DenseMatrix& a, const PadeCoefficients& pade, DenseMatrix& p,
                             DenseMatrix& q) {
  const std::size_t n = a.rows();
  p = pade.numerator[0] * DenseMatrix::identity(n);
  q = pade.denominator[0] * DenseMatrix::identity(n);
  DenseMatrix power = a;
  DenseMatrix next(n, n);
  for (int l = 1; l <= pade.degree; ++l) {
    if (l > 1) {
      gemm(1.0, power.view(), a.view(), 0.0, next.view());
      std::swap(power, next);
    }
    p.add_scaled(pade.numerator[l], power);
    q.add_scaled(pade.denominator[l], power);
  }
}

}  // namespace detail

/// Scaling and squaring with a caller-fixed s. `keep_trace` retains all
/// intermediates (needed to seed the incremental engine); otherwise only the
/// final square is kept.
inline ScalingSquaringTrace scaling_squaring(const DenseMatrix& g, int s,
                                             const PadeCoefficients& pade,
                                             bool keep_trace = true) {
  if (!g.is_square()) {
    throw DimensionError("expm: matrix is " + shape_string(g.rows(), g.cols()) +
                         ", expected square");
  }
  if (s < 0) throw InvalidArgument("expm: negative scaling power");
  const std::size_t n = g.rows();
  ScalingSquaringTrace t;
  t.s = s;
  t.scaled = g;
  t.scaled *= std::ldexp(1.0, -s);

  detail::pade_polynomials(t.scaled, pade, t.p, t.q);
  t.q_lu = lu_factor(t.q);
  DenseMatrix r = lu_solve(t.q_lu, t.p);

  t.squares.reserve(keep_trace ? static_cast<std::size_t>(s) + 1 : 1);
  t.squares.push_back(std::move(r));
  for (int l = 1; l <= s; ++l) {
    DenseMatrix sq(n, n);
    const DenseMatrix& prev = t.squares.back();
    gemm(1.0, prev.view(), prev.view(), 0.0, sq.view());
    if (keep_trace) {
      t.squares.push_back(std::move(sq));
    } else {
      t.squares.back() = std::move(sq);
    }
  }
  if (!keep_trace) {
    t.scaled = DenseMatrix();
    t.p = DenseMatrix();
    t.q = DenseMatrix();
  }
  return t;
}

/// exp(g) with a forced scaling power.
inline DenseMatrix expm_with_scaling(const DenseMatrix& g, int s, const PadeCoefficients& pade) {
  auto t = scaling_squaring(g, s, pade, /*keep_trace=*/false);
  return std::move(t.squares.back());
}

/// exp(g): picks s by the 1-norm test, then evaluates r_m(2^-s g)^(2^s).
inline DenseMatrix expm_baseline(const DenseMatrix& g, int degree = kDefaultPadeDegree,
                                 double theta = kTheta13) {
  const PadeCoefficients pade = pade_coefficients(degree);
  return expm_with_scaling(g, select_scaling(g, theta).s, pade);
}

}  // namespace incexpm
