#pragma once

// Matrix representation of polynomial diffusion generators
//   G f = 1/2 tr(A Hess f) + b . grad f
// on the graded monomial basis. Column j of G_n holds the coordinates of
// G applied to basis monomial j.

#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "incexpm/block.hpp"
#include "incexpm/dense.hpp"
#include "incexpm/error.hpp"

namespace incexpm {

struct MultiIndex {
  std::vector<unsigned> exponents;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<unsigned> e) : exponents(std::move(e)) {}
  MultiIndex(std::initializer_list<unsigned> e) : exponents(e) {}

  std::size_t dimension() const { return exponents.size(); }
  unsigned degree() const {
    unsigned s = 0;
    for (unsigned e : exponents) s += e;
    return s;
  }
  unsigned operator[](std::size_t i) const { return exponents.at(i); }

  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

inline std::string to_string(const MultiIndex& k) {
  std::string s = "(";
  for (std::size_t i = 0; i < k.dimension(); ++i) {
    if (i) s += ",";
    s += std::to_string(k.exponents[i]);
  }
  return s + ")";
}

/// Sparse polynomial in d variables. Exact zeros are never stored.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::size_t dimension) : d_(dimension) {}
  Polynomial(std::size_t dimension, std::initializer_list<std::pair<MultiIndex, double>> terms)
      : d_(dimension) {
    for (const auto& [k, c] : terms) add_term(k, c);
  }

  static Polynomial constant(std::size_t dimension, double c) {
    Polynomial p(dimension);
    p.add_term(MultiIndex(std::vector<unsigned>(dimension, 0)), c);
    return p;
  }

  std::size_t dimension() const { return d_; }
  const std::map<MultiIndex, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  /// Total degree; -1 for the zero polynomial.
  int degree() const {
    int m = -1;
    for (const auto& [k, c] : terms_) m = std::max(m, static_cast<int>(k.degree()));
    return m;
  }

  double coefficient(const MultiIndex& k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? 0.0 : it->second;
  }

  void add_term(const MultiIndex& k, double c) {
    if (k.dimension() != d_) {
      throw DimensionError("Polynomial: monomial " + to_string(k) + " in a polynomial of dimension " +
                           std::to_string(d_));
    }
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(k, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.d_ != d_) throw DimensionError("Polynomial: adding polynomials of different dimension");
    for (const auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
  }

  Polynomial scaled(double a) const {
    Polynomial p(d_);
    for (const auto& [k, c] : terms_) p.add_term(k, a * c);
    return p;
  }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  std::size_t d_ = 0;
  std::map<MultiIndex, double> terms_;
};

/// Diffusion matrix A (symmetric, entries of degree <= 2) and drift b
/// (entries of degree <= 1), all polynomial in the state.
class PolynomialOperatorSpec {
 public:
  PolynomialOperatorSpec(std::vector<std::vector<Polynomial>> a, std::vector<Polynomial> b)
      : a_(std::move(a)), b_(std::move(b)) {
    const std::size_t d = b_.size();
    if (d == 0) throw DimensionError("PolynomialOperatorSpec: empty drift");
    if (a_.size() != d) {
      throw DimensionError("PolynomialOperatorSpec: diffusion matrix has " +
                           std::to_string(a_.size()) + " rows, drift has " + std::to_string(d));
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (a_[i].size() != d) throw DimensionError("PolynomialOperatorSpec: diffusion matrix not square");
      if (b_[i].dimension() != d) throw DimensionError("PolynomialOperatorSpec: drift entry of wrong dimension");
      for (std::size_t j = 0; j < d; ++j) {
        if (a_[i][j].dimension() != d) {
          throw DimensionError("PolynomialOperatorSpec: diffusion entry of wrong dimension");
        }
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i + 1; j < d; ++j) {
        if (!(a_[i][j] == a_[j][i])) {
          throw InvalidArgument("PolynomialOperatorSpec: diffusion matrix not symmetric at (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
        }
      }
    }
  }

  std::size_t dimension() const { return b_.size(); }
  const Polynomial& diffusion(std::size_t i, std::size_t j) const { return a_.at(i).at(j); }
  const Polynomial& drift(std::size_t i) const { return b_.at(i); }

  /// True when deg A_ij <= 2 and deg b_i <= 1 everywhere.
  bool satisfies_degree_bounds() const {
    for (std::size_t i = 0; i < dimension(); ++i) {
      if (b_[i].degree() > 1) return false;
      for (std::size_t j = 0; j < dimension(); ++j) {
        if (a_[i][j].degree() > 2) return false;
      }
    }
    return true;
  }

 private:
  std::vector<std::vector<Polynomial>> a_;
  std::vector<Polynomial> b_;
};

// ---------------------------------------------------------------------------
// Graded basis. Within a degree, exponent tuples run in descending
// lexicographic order, so for d = 2: 1, y, v, y^2, yv, v^2, ...

inline std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Number of monomials of degree <= n in d variables.
inline std::size_t basis_size(std::size_t n, std::size_t d) { return binomial(n + d, d); }
/// Number of monomials of degree exactly j in d variables.
inline std::size_t degree_block_size(std::size_t j, std::size_t d) {
  return d == 0 ? (j == 0 ? 1 : 0) : binomial(j + d - 1, j);
}

inline std::size_t basis_index(const MultiIndex& k) {
  const std::size_t d = k.dimension();
  if (d == 0) throw InvalidArgument("basis_index: empty multi-index");
  const std::size_t j = k.degree();
  std::size_t idx = j == 0 ? 0 : basis_size(j - 1, d);
  // Tuples with the same prefix and a larger entry at position i come first.
  std::size_t remaining = j;
  for (std::size_t i = 0; i + 1 < d; ++i) {
    const std::size_t parts = d - i - 1;
    for (std::size_t t = k.exponents[i] + 1; t <= remaining; ++t) {
      idx += degree_block_size(remaining - t, parts);
    }
    remaining -= k.exponents[i];
  }
  return idx;
}

inline MultiIndex basis_multi_index(std::size_t index, std::size_t d) {
  if (d == 0) throw InvalidArgument("basis_multi_index: dimension must be positive");
  std::size_t j = 0;
  while (basis_size(j, d) <= index) ++j;
  std::size_t rank = index - (j == 0 ? 0 : basis_size(j - 1, d));
  MultiIndex k(std::vector<unsigned>(d, 0));
  std::size_t remaining = j;
  for (std::size_t i = 0; i + 1 < d; ++i) {
    const std::size_t parts = d - i - 1;
    std::size_t t = remaining;
    while (true) {
      const std::size_t count = degree_block_size(remaining - t, parts);
      if (rank < count) break;
      rank -= count;
      --t;
    }
    k.exponents[i] = static_cast<unsigned>(t);
    remaining -= t;
  }
  k.exponents[d - 1] = static_cast<unsigned>(remaining);
  return k;
}

// ---------------------------------------------------------------------------

namespace detail {

/// Adds c * x^shift * poly to out, skipping nothing: exact arithmetic on
/// the coefficients, zeros pruned by Polynomial::add_term.
inline void add_shifted(Polynomial& out, const Polynomial& poly, const std::vector<unsigned>& shift,
                        double c) {
  for (const auto& [k, a] : poly.terms()) {
    std::vector<unsigned> e = k.exponents;
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += shift[i];
    out.add_term(MultiIndex(std::move(e)), c * a);
  }
}

}  // namespace detail

/// Exact symbolic application of the generator to p.
inline Polynomial apply_generator(const PolynomialOperatorSpec& spec, const Polynomial& p) {
  const std::size_t d = spec.dimension();
  if (p.dimension() != d) {
    throw DimensionError("apply_generator: polynomial in " + std::to_string(p.dimension()) +
                         " variables, generator in " + std::to_string(d));
  }
  Polynomial out(d);
  for (const auto& [k, c] : p.terms()) {
    // Second order: 1/2 A_ii k_i (k_i - 1) and, for i < j, A_ij k_i k_j
    // (the (i,j) and (j,i) halves combined).
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        double factor;
        std::vector<unsigned> e = k.exponents;
        if (i == j) {
          if (k.exponents[i] < 2) continue;
          factor = 0.5 * k.exponents[i] * (k.exponents[i] - 1.0);
          e[i] -= 2;
        } else {
          if (k.exponents[i] == 0 || k.exponents[j] == 0) continue;
          factor = static_cast<double>(k.exponents[i]) * k.exponents[j];
          e[i] -= 1;
          e[j] -= 1;
        }
        detail::add_shifted(out, spec.diffusion(i, j), e, factor * c);
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (k.exponents[i] == 0) continue;
      std::vector<unsigned> e = k.exponents;
      e[i] -= 1;
      detail::add_shifted(out, spec.drift(i), e, static_cast<double>(k.exponents[i]) * c);
    }
  }
  return out;
}

/// G applied to every monomial of degree exactly j, as a dim(Pol_j) x b_j
/// block column (rows above the degree-j block plus the diagonal block).
inline DenseMatrix generator_degree_columns(const PolynomialOperatorSpec& spec, std::size_t j) {
  const std::size_t d = spec.dimension();
  const std::size_t first = j == 0 ? 0 : basis_size(j - 1, d);
  const std::size_t rows = basis_size(j, d);
  const std::size_t width = rows - first;
  DenseMatrix col(rows, width);
  for (std::size_t c = 0; c < width; ++c) {
    const MultiIndex k = basis_multi_index(first + c, d);
    Polynomial mono(d);
    mono.add_term(k, 1.0);
    const Polynomial image = apply_generator(spec, mono);
    for (const auto& [t, a] : image.terms()) {
      if (t.degree() > k.degree()) {
        throw StructureError("build_generator_matrix: generator maps monomial " + to_string(k) +
                             " to a polynomial containing " + to_string(t) +
                             " of higher degree");
      }
      col(basis_index(t), c) = a;
    }
  }
  return col;
}

inline void require_degree_bounds(const PolynomialOperatorSpec& spec) {
  if (!spec.satisfies_degree_bounds()) {
    throw StructureError(
        "build_generator_matrix: spec is not a polynomial diffusion "
        "(needs deg A_ij <= 2 and deg b_i <= 1)");
  }
}

/// Appended block column for degree n, scaled by `scale` (pass tau to get
/// the columns of tau G_n).
inline BlockColumn generator_block_column(const PolynomialOperatorSpec& spec, std::size_t n,
                                          double scale = 1.0) {
  if (n == 0) throw InvalidArgument("generator_block_column: degree 0 has no appended column");
  require_degree_bounds(spec);
  DenseMatrix col = generator_degree_columns(spec, n);
  if (scale != 1.0) col *= scale;
  const std::size_t top = basis_size(n - 1, spec.dimension());
  const std::size_t w = col.cols();
  return BlockColumn(col.block(0, 0, top, w), col.block(top, 0, w, w));
}

/// G_n with partition (1, d, (d+1 choose 2), ...), scaled by `scale`.
inline BlockTriangularMatrix build_generator_matrix(const PolynomialOperatorSpec& spec,
                                                    std::size_t n, double scale = 1.0) {
  require_degree_bounds(spec);
  const std::size_t d = spec.dimension();
  const std::size_t dim = basis_size(n, d);
  DenseMatrix g(dim, dim);
  std::vector<std::size_t> sizes;
  for (std::size_t j = 0; j <= n; ++j) {
    DenseMatrix col = generator_degree_columns(spec, j);
    const std::size_t first = j == 0 ? 0 : basis_size(j - 1, d);
    g.set_block(0, first, col);
    sizes.push_back(col.cols());
  }
  if (scale != 1.0) g *= scale;
  return BlockTriangularMatrix(std::move(g), Partition(std::move(sizes)));
}

// ---------------------------------------------------------------------------
// Models on (y, v): log-price and variance.

struct JacobiParams {
  double kappa = 0.0;
  double theta = 0.0;
  double sigma = 0.0;
  double r = 0.0;
  double rho = 0.0;
  double vmin = 0.0;
  double vmax = 0.0;

  void validate() const {
    std::string failed;
    auto check = [&](bool ok, const char* what) {
      if (!ok) failed += failed.empty() ? what : std::string("; ") + what;
    };
    check(std::isfinite(kappa) && std::isfinite(theta) && std::isfinite(sigma) &&
              std::isfinite(r) && std::isfinite(rho) && std::isfinite(vmin) && std::isfinite(vmax),
          "all parameters finite");
    check(kappa >= 0.0, "kappa >= 0");
    check(sigma > 0.0, "sigma > 0");
    check(r >= 0.0, "r >= 0");
    check(rho >= -1.0 && rho <= 1.0, "rho in [-1, 1]");
    check(vmin >= 0.0 && vmin < vmax, "0 <= vmin < vmax");
    check(theta >= vmin && theta <= vmax, "theta in [vmin, vmax]");
    if (!failed.empty()) throw InvalidArgument("JacobiParams: violated " + failed);
  }

  /// (sqrt(vmax) - sqrt(vmin))^2
  double s_factor() const {
    const double t = std::sqrt(vmax) - std::sqrt(vmin);
    return t * t;
  }
};

struct HestonParams {
  double kappa = 0.0;
  double theta = 0.0;
  double sigma = 0.0;
  double r = 0.0;
  double rho = 0.0;

  void validate() const {
    std::string failed;
    auto check = [&](bool ok, const char* what) {
      if (!ok) failed += failed.empty() ? what : std::string("; ") + what;
    };
    check(std::isfinite(kappa) && std::isfinite(theta) && std::isfinite(sigma) &&
              std::isfinite(r) && std::isfinite(rho),
          "all parameters finite");
    check(kappa >= 0.0, "kappa >= 0");
    check(theta >= 0.0, "theta >= 0");
    check(sigma > 0.0, "sigma > 0");
    check(r >= 0.0, "r >= 0");
    check(rho >= -1.0 && rho <= 1.0, "rho in [-1, 1]");
    if (!failed.empty()) throw InvalidArgument("HestonParams: violated " + failed);
  }
};

namespace detail {

inline const MultiIndex kOne{0, 0};
inline const MultiIndex kY{1, 0};
inline const MultiIndex kV{0, 1};
inline const MultiIndex kV2{0, 2};

inline Polynomial log_price_drift(double r) { return Polynomial(2, {{kOne, r}, {kV, -0.5}}); }
inline Polynomial variance_drift(double kappa, double theta) {
  return Polynomial(2, {{kOne, kappa * theta}, {kV, -kappa}});
}

}  // namespace detail

/// A(v) = [[v, rho sigma Q(v)], [rho sigma Q(v), sigma^2 Q(v)]] with
/// Q(v) = (v - vmin)(vmax - v) / S, and drift (r - v/2, kappa (theta - v)).
inline PolynomialOperatorSpec jacobi_spec(const JacobiParams& p) {
  p.validate();
  using namespace detail;
  const double s = p.s_factor();
  const double sum = p.vmax + p.vmin;
  const double prod = p.vmax * p.vmin;
  const double rs = p.rho * p.sigma;
  const double ss = p.sigma * p.sigma;
  Polynomial a11(2, {{kV, 1.0}});
  Polynomial a12(2, {{kOne, -(rs * prod) / s}, {kV, rs * sum / s}, {kV2, -rs / s}});
  Polynomial a22(2, {{kOne, -(ss * prod) / s}, {kV, ss * sum / s}, {kV2, -ss / s}});
  return PolynomialOperatorSpec({{a11, a12}, {a12, a22}},
                                {log_price_drift(p.r), variance_drift(p.kappa, p.theta)});
}

/// A(v) = [[v, rho sigma v], [rho sigma v, sigma^2 v]], same drift as Jacobi.
inline PolynomialOperatorSpec heston_spec(const HestonParams& p) {
  p.validate();
  using namespace detail;
  Polynomial a11(2, {{kV, 1.0}});
  Polynomial a12(2, {{kV, p.rho * p.sigma}});
  Polynomial a22(2, {{kV, p.sigma * p.sigma}});
  return PolynomialOperatorSpec({{a11, a12}, {a12, a22}},
                                {log_price_drift(p.r), variance_drift(p.kappa, p.theta)});
}

/// Upper bound on ||G_n||_1 for the Jacobi model.
inline double jacobi_norm_bound(const JacobiParams& p, std::size_t n) {
  p.validate();
  const double alpha =
      p.sigma * (1.0 + p.vmin * p.vmax + p.vmax + p.vmin) / (2.0 * p.s_factor());
  const double x = static_cast<double>(n);
  return x * (p.r + p.kappa + p.kappa * p.theta - p.sigma * alpha) +
         0.5 * x * x * (1.0 + std::abs(p.rho) * alpha + 2.0 * p.sigma * alpha);
}

/// Upper bound on ||G_n||_1 for the Heston model.
inline double heston_norm_bound(const HestonParams& p, std::size_t n) {
  p.validate();
  const double x = static_cast<double>(n);
  return x * (p.r + p.kappa + p.kappa * p.theta - 0.5 * p.sigma * p.sigma) +
         0.5 * x * x * (1.0 + std::abs(p.rho) * p.sigma / 2.0 + p.sigma * p.sigma);
}

}  // namespace incexpm
