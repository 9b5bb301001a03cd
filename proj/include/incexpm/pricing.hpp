#pragma once

// European call pricing under the Jacobi model by a Hermite series:
//   price = sum_n l_n f_n,
// with l_n the Hermite moments of the log-price (from exp(tau G_n)) and
// f_n the Fourier coefficients of the discounted payoff. exp(tau G_n) is
// grown one degree at a time by the incremental engine.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "incexpm/generators.hpp"
#include "incexpm/incremental.hpp"
#include "incexpm/pade.hpp"

namespace incexpm {

struct PricingConfig {
  JacobiParams jacobi;
  double y0 = 0.0;
  double v0 = 0.0;
  double tau = 0.0;
  double log_strike = 0.0;
  double mu_w = 0.0;
  double sigma_w = 1.0;
  double eps = 1e-3;
  std::size_t n_max = 100;
  /// Number of consecutive terms that must pass |l_n f_n| <= eps |Price|.
  /// 1 is the single-term rule.
  std::size_t stop_window = 3;
  ScalingStrategy scaling = ScalingStrategy::adaptive();
  int pade_degree = kDefaultPadeDegree;

  void validate() const {
    jacobi.validate();
    std::string failed;
    auto check = [&](bool ok, const char* what) {
      if (!ok) failed += failed.empty() ? what : std::string("; ") + what;
    };
    check(std::isfinite(y0) && std::isfinite(log_strike) && std::isfinite(mu_w), "finite inputs");
    check(sigma_w > 0.0 && std::isfinite(sigma_w), "sigma_w > 0");
    check(tau > 0.0 && std::isfinite(tau), "tau > 0");
    check(eps > 0.0, "eps > 0");
    check(v0 >= jacobi.vmin && v0 <= jacobi.vmax, "v0 in [vmin, vmax]");
    check(stop_window >= 1, "stop_window >= 1");
    if (!failed.empty()) throw InvalidArgument("PricingConfig: violated " + failed);
  }
};

struct PriceLedgerEntry {
  std::size_t n = 0;
  double l = 0.0;
  double f = 0.0;
  double term = 0.0;
  double partial_price = 0.0;
  double cum_seconds = 0.0;
};

struct PriceResult {
  double price = 0.0;
  std::size_t n = 0;
  bool converged = false;
  std::vector<PriceLedgerEntry> ledger;
};

inline constexpr double kPriceFloor = 1e-300;

// ---------------------------------------------------------------------------
// Hermite system

/// Coefficients in powers of y of h_n((y - mu)/sigma) / sqrt(n!), with h_n
/// the probabilists' Hermite polynomials.
inline std::vector<double> hermite_y_coefficients(std::size_t n, double mu_w, double sigma_w) {
  if (!(sigma_w > 0.0)) throw InvalidArgument("hermite_vector: sigma_w must be positive");
  // u = a + c y
  const double a = -mu_w / sigma_w;
  const double c = 1.0 / sigma_w;
  std::vector<double> prev;               // normalized h_{j-1}
  std::vector<double> cur{1.0};           // normalized h_j
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> next(j + 2, 0.0);
    for (std::size_t i = 0; i <= j; ++i) {
      next[i] += a * cur[i];
      next[i + 1] += c * cur[i];
    }
    const double sj = std::sqrt(static_cast<double>(j));
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= sj * prev[i];
    const double norm = std::sqrt(static_cast<double>(j + 1));
    for (double& x : next) x /= norm;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

/// Coordinates of h_n((y - mu)/sigma)/sqrt(n!) in the graded basis of
/// polynomials in (y, v) of degree <= n. Only pure powers of y are nonzero.
inline std::vector<double> hermite_vector(std::size_t n, double mu_w, double sigma_w) {
  const std::vector<double> coeffs = hermite_y_coefficients(n, mu_w, sigma_w);
  std::vector<double> out(basis_size(n, 2), 0.0);
  for (std::size_t p = 0; p <= n; ++p) {
    out[basis_index(MultiIndex{static_cast<unsigned>(p), 0u})] = coeffs[p];
  }
  return out;
}

/// Normalized h_n(x)/sqrt(n!) at a point, by the stable three-term recurrence.
inline double hermite_normalized(std::size_t n, double x) {
  double prev = 0.0;
  double cur = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double next = (x * cur - std::sqrt(static_cast<double>(j)) * prev) /
                        std::sqrt(static_cast<double>(j + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Monomial values H_n(x0) in basis order, for a state x0 of any dimension.
inline std::vector<double> monomial_vector(std::size_t size, const std::vector<double>& x0) {
  std::vector<double> h(size);
  for (std::size_t i = 0; i < size; ++i) {
    const MultiIndex k = basis_multi_index(i, x0.size());
    double v = 1.0;
    for (std::size_t j = 0; j < x0.size(); ++j) v *= std::pow(x0[j], static_cast<double>(k[j]));
    h[i] = v;
  }
  return h;
}

/// E[p(X_tau) | X_0 = x0] = H(x0)^T exp(tau G) p, given exp(tau G).
inline double conditional_moment(const DenseMatrix& exp_tau_g, const std::vector<double>& x0,
                                 const std::vector<double>& p) {
  const std::size_t n = exp_tau_g.rows();
  if (!exp_tau_g.is_square() || p.size() != n) {
    throw DimensionError("conditional_moment: coordinate vector of length " +
                         std::to_string(p.size()) + " against exponential " +
                         shape_string(exp_tau_g.rows(), exp_tau_g.cols()));
  }
  if (x0.empty()) throw DimensionError("conditional_moment: empty state");
  const std::vector<double> h = monomial_vector(n, x0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (h[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += exp_tau_g(i, j) * p[j];
    total += h[i] * row;
  }
  return total;
}

/// Same, computing exp(tau G) with the baseline exponential.
inline double conditional_moment(const DenseMatrix& g, const std::vector<double>& x0, double tau,
                                 const std::vector<double>& p) {
  DenseMatrix scaled = g;
  scaled *= tau;
  return conditional_moment(expm_baseline(scaled), x0, p);
}

/// l_n = H_n(y0, v0)^T exp(tau G_n) h_n, from the leading dim(Pol_n) part
/// of any exp(tau G_m), m >= n.
inline double hermite_moment(ConstMatrixView exp_tau_g, const PricingConfig& cfg, std::size_t n) {
  const std::size_t dim = basis_size(n, 2);
  if (exp_tau_g.rows < dim || exp_tau_g.cols < dim) {
    throw DimensionError("hermite_moment: exponential " + shape_string(exp_tau_g.rows, exp_tau_g.cols) +
                         " too small for degree " + std::to_string(n));
  }
  const std::vector<double> y = hermite_y_coefficients(n, cfg.mu_w, cfg.sigma_w);
  // Only pure y-powers carry weight; rows with v-exponent > 0 still enter
  // through H_n(y0, v0).
  const std::vector<double> h = monomial_vector(dim, {cfg.y0, cfg.v0});
  std::vector<std::size_t> cols(n + 1);
  for (std::size_t p = 0; p <= n; ++p) cols[p] = basis_index(MultiIndex{static_cast<unsigned>(p), 0u});
  double total = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    if (h[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t p = 0; p <= n; ++p) row += exp_tau_g(i, cols[p]) * y[p];
    total += h[i] * row;
  }
  return total;
}

inline double hermite_moment(const DenseMatrix& exp_tau_g, const PricingConfig& cfg, std::size_t n) {
  return hermite_moment(exp_tau_g.view(), cfg, n);
}

// ---------------------------------------------------------------------------
// Fourier coefficients of the payoff

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline GaussRule gauss_legendre(std::size_t n) {
  GaussRule g;
  g.nodes.resize(n);
  g.weights.resize(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = p2;
    }
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    g.nodes[i] = -x;
    g.weights[i] = w;
    g.nodes[n - 1 - i] = x;
    g.weights[n - 1 - i] = w;
  }
  return g;
}

inline constexpr std::size_t kQuadratureStartNodes = 64;
inline constexpr std::size_t kQuadratureMaxNodes = 512;
inline constexpr double kQuadratureTolerance = 1e-12;

namespace detail {

/// Composite rule over [lo, hi] in panels of width about 2.
inline double payoff_projection(std::size_t n, double mu_w, double sigma_w, double log_strike,
                                double lo, double hi, const GaussRule& rule) {
  const std::size_t panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / 2.0)));
  const double width = (hi - lo) / static_cast<double>(panels);
  const double strike = std::exp(log_strike);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = lo + width * static_cast<double>(p);
    const double half = 0.5 * width;
    const double mid = a + half;
    double panel = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double x = mid + half * rule.nodes[i];
      const double payoff = std::exp(mu_w + sigma_w * x) - strike;
      panel += rule.weights[i] * payoff * hermite_normalized(n, x) * std::exp(-0.5 * x * x);
    }
    total += half * panel;
  }
  return total * inv_sqrt_2pi;
}

}  // namespace detail

/// f_n = e^{-r tau} E_w[(e^Y - e^k)^+ h_n((Y - mu_w)/sigma_w)/sqrt(n!)],
/// Y ~ Normal(mu_w, sigma_w^2). The integrand is smooth on either side of
/// the strike, so the rule only covers x >= (k - mu_w)/sigma_w.
inline double fourier_coefficient(std::size_t n, double mu_w, double sigma_w, double log_strike,
                                  double r, double tau) {
  if (!(sigma_w > 0.0)) throw InvalidArgument("fourier_coefficient: sigma_w must be positive");
  const double xk = (log_strike - mu_w) / sigma_w;
  const double lo = std::max(xk, -40.0);
  const double hi = sigma_w + 40.0 + std::sqrt(4.0 * static_cast<double>(n) + 2.0);
  if (lo >= hi) return 0.0;
  const double discount = std::exp(-r * tau);
  double prev = discount * detail::payoff_projection(n, mu_w, sigma_w, log_strike, lo, hi,
                                                     gauss_legendre(kQuadratureStartNodes));
  double diff = 0.0;
  for (std::size_t nodes = 2 * kQuadratureStartNodes; nodes <= kQuadratureMaxNodes; nodes *= 2) {
    const double cur = discount * detail::payoff_projection(n, mu_w, sigma_w, log_strike, lo, hi,
                                                            gauss_legendre(nodes));
    diff = std::abs(cur - prev);
    if (diff <= kQuadratureTolerance * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  throw ConvergenceError("fourier_coefficient: quadrature for degree " + std::to_string(n) +
                             " did not settle by " + std::to_string(kQuadratureMaxNodes) +
                             " nodes per panel",
                         diff);
}

inline double fourier_coefficient(std::size_t n, const PricingConfig& cfg) {
  return fourier_coefficient(n, cfg.mu_w, cfg.sigma_w, cfg.log_strike, cfg.jacobi.r, cfg.tau);
}

/// f_0 in closed form: e^{-r tau} (e^{mu + sigma^2/2} Phi(d1) - e^k Phi(d2)).
inline double lognormal_call_expectation(double mu_w, double sigma_w, double log_strike, double r,
                                         double tau) {
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  const double d1 = (mu_w + sigma_w * sigma_w - log_strike) / sigma_w;
  const double d2 = d1 - sigma_w;
  return std::exp(-r * tau) *
         (std::exp(mu_w + 0.5 * sigma_w * sigma_w) * phi(d1) - std::exp(log_strike) * phi(d2));
}

// ---------------------------------------------------------------------------

/// Called after each degree with the ledger entry; returning true aborts.
using PriceObserver = std::function<bool(const PriceLedgerEntry&, const StepReport&)>;

inline PriceResult price_call(const PricingConfig& cfg, const PriceObserver& observe = {}) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const PolynomialOperatorSpec spec = jacobi_spec(cfg.jacobi);

  IncrementalExpm engine(cfg.scaling, pade_coefficients(cfg.pade_degree));
  engine.reserve(basis_size(cfg.n_max, 2));
  StepReport report = engine.start(build_generator_matrix(spec, 0, cfg.tau).data());

  PriceResult res;
  for (std::size_t n = 0;; ++n) {
    if (n > 0) report = engine.push(generator_block_column(spec, n, cfg.tau));
    PriceLedgerEntry e;
    e.n = n;
    e.l = hermite_moment(engine.exponential().data(), cfg, n);
    e.f = fourier_coefficient(n, cfg);
    e.term = e.l * e.f;
    res.price += e.term;
    e.partial_price = res.price;
    e.cum_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    res.ledger.push_back(e);
    res.n = n;
    if (observe && observe(e, report)) break;

    const double bound = cfg.eps * std::max(std::abs(res.price), kPriceFloor);
    const std::size_t window = std::min(cfg.stop_window, n + 1);
    bool small = true;
    for (std::size_t j = 0; j < window; ++j) {
      if (std::abs(res.ledger[n - j].term) > bound) {
        small = false;
        break;
      }
    }
    if (small) {
      res.converged = true;
      break;
    }
    if (n >= cfg.n_max) break;
  }
  return res;
}

}  // namespace incexpm
