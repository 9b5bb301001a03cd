#pragma once

// Random nested block triangular instances and the timing/error harness
// comparing from-scratch exponentials with the incremental engine.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "incexpm/block.hpp"
#include "incexpm/incremental.hpp"
#include "incexpm/pade.hpp"

namespace incexpm {

struct RandomInstanceSpec {
  std::uint64_t seed = 0;
  std::vector<std::size_t> block_sizes;
  double lambda_lo = -80.0;
  double lambda_hi = -0.5;
  double condition_target = 100.0;

  void validate() const {
    if (block_sizes.empty()) throw InvalidArgument("RandomInstanceSpec: no blocks");
    for (std::size_t b : block_sizes) {
      if (b == 0) throw InvalidArgument("RandomInstanceSpec: block sizes must be positive");
    }
    if (!(lambda_lo <= lambda_hi) || !std::isfinite(lambda_lo) || !std::isfinite(lambda_hi)) {
      throw InvalidArgument("RandomInstanceSpec: need finite lambda_lo <= lambda_hi");
    }
    if (!(condition_target >= 1.0)) throw InvalidArgument("RandomInstanceSpec: condition target must be >= 1");
  }
};

/// Block sizes drawn uniformly from [bmin, bmax].
inline std::vector<std::size_t> random_block_sizes(std::uint64_t seed, std::size_t count,
                                                   std::size_t bmin, std::size_t bmax) {
  if (bmin == 0 || bmin > bmax) throw InvalidArgument("random_block_sizes: need 1 <= bmin <= bmax");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> dist(bmin, bmax);
  std::vector<std::size_t> sizes(count);
  for (auto& b : sizes) b = dist(rng);
  return sizes;
}

inline constexpr int kMaxConditionRescales = 50;

/// 1-norm condition number of the unit-column eigenvector matrix of an
/// upper triangular matrix (back substitution per eigenvalue).
inline double eigenbasis_condition(const DenseMatrix& t) {
  const std::size_t d = t.rows();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const double lambda = t(j, j);
    x(j, j) = 1.0;
    for (std::size_t i = j; i-- > 0;) {
      double s = 0.0;
      for (std::size_t k = i + 1; k <= j; ++k) s += t(i, k) * x(k, j);
      double den = t(i, i) - lambda;
      if (den == 0.0) den = std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lambda));
      x(i, j) = -s / den;
    }
    x.col(j).normalize();
  }
  const Eigen::MatrixXd inv = x.triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(x.rows(), x.cols()));
  auto norm1 = [](const Eigen::MatrixXd& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); };
  const double c = norm1(x) * norm1(inv);
  return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
}

/// Upper triangular matrix with the given partition: eigenvalues uniform in
/// [lambda_lo, lambda_hi] on the diagonal, uniform noise above it, with the
/// noise amplitude searched (log-scale bisection) until the eigenbasis
/// condition lands within a factor 2 of the target.
inline BlockTriangularMatrix generate_instance(const RandomInstanceSpec& spec) {
  spec.validate();
  const Partition part(spec.block_sizes);
  const std::size_t d = part.dimension();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> eig(spec.lambda_lo, spec.lambda_hi);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  DenseMatrix diag(d, d);
  for (std::size_t i = 0; i < d; ++i) diag(i, i) = spec.lambda_lo == spec.lambda_hi ? spec.lambda_lo : eig(rng);
  DenseMatrix noise(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) noise(i, j) = unit(rng);
  }

  auto assemble = [&](double c) {
    DenseMatrix m = noise;
    m *= c;
    m += diag;
    return m;
  };
  const double target = spec.condition_target;
  auto accept = [&](double k) { return k >= target / 2.0 && k <= target * 2.0; };

  // Without noise the eigenbasis is the identity, condition 1.
  if (d == 1 || accept(1.0)) return BlockTriangularMatrix(diag, part);

  int evals = 0;
  auto kappa = [&](double c) {
    if (++evals > kMaxConditionRescales) {
      throw ConvergenceError("generate_instance: condition target " + std::to_string(target) +
                                 " not reached after " + std::to_string(kMaxConditionRescales) +
                                 " rescales",
                             c);
    }
    return eigenbasis_condition(assemble(c));
  };

  // Bracket: lo gives too small a condition number, hi too large.
  double lo = 0.0;
  double hi = 1.0;
  double k_hi = kappa(hi);
  if (accept(k_hi)) return BlockTriangularMatrix(assemble(hi), part);
  if (k_hi < target) {
    while (true) {
      lo = hi;
      hi *= 4.0;
      k_hi = kappa(hi);
      if (accept(k_hi)) return BlockTriangularMatrix(assemble(hi), part);
      if (k_hi > target) break;
    }
  } else {
    while (true) {
      const double c = hi / 4.0;
      const double k = kappa(c);
      if (accept(k)) return BlockTriangularMatrix(assemble(c), part);
      if (k < target) {
        lo = c;
        break;
      }
      hi = c;
    }
  }
  while (true) {
    const double mid = lo == 0.0 ? hi / 2.0 : std::sqrt(lo * hi);
    const double k = kappa(mid);
    if (accept(k)) return BlockTriangularMatrix(assemble(mid), part);
    (k < target ? lo : hi) = mid;
  }
}

// ---------------------------------------------------------------------------

struct BenchMethod {
  enum class Kind { naive, incremental };
  Kind kind = Kind::naive;
  ScalingStrategy scaling;

  /// "naive", "fixed:<s>", "adaptive" or "adaptive:<theta>".
  static BenchMethod parse(const std::string& text) {
    if (text == "naive") return {Kind::naive, {}};
    return {Kind::incremental, ScalingStrategy::parse(text)};
  }
  std::string label() const { return kind == Kind::naive ? "naive" : scaling.label(); }
};

struct BenchRecord {
  std::string method;
  std::size_t step = 0;
  std::size_t dimension = 0;
  double cum_seconds = 0.0;
  /// Relative Frobenius error against the baseline; empty when not checked.
  std::optional<double> rel_err;
  bool restart = false;
};

struct BenchOptions {
  bool check = true;
  int repeats = 3;
  int pade_degree = kDefaultPadeDegree;
  double theta = kTheta13;
};

/// Runs all methods in lockstep over the stages of `instance`. Per-stage
/// times are medians over `repeats` passes; naive stages time a full
/// baseline exponential of the leading part. Errors below machine epsilon
/// are reported as machine epsilon.
inline std::vector<BenchRecord> run_benchmark(const BlockTriangularMatrix& instance,
                                              const std::vector<BenchMethod>& methods,
                                              const BenchOptions& opt = {}) {
  if (opt.repeats < 1) throw InvalidArgument("run_benchmark: repeats must be >= 1");
  using Clock = std::chrono::steady_clock;
  const PadeCoefficients pade = pade_coefficients(opt.pade_degree);
  const std::size_t stages = instance.num_blocks();
  const Partition& part = instance.partition();
  const std::size_t nm = methods.size();
  const double eps = std::numeric_limits<double>::epsilon();

  std::vector<std::vector<std::vector<double>>> times(
      nm, std::vector<std::vector<double>>(stages, std::vector<double>(opt.repeats)));
  std::vector<std::vector<std::optional<double>>> errors(nm, std::vector<std::optional<double>>(stages));
  std::vector<std::vector<bool>> restarts(nm, std::vector<bool>(stages, false));

  auto column = [&](std::size_t l) {
    const std::size_t top = part.begin(l);
    const std::size_t b = part.size(l);
    return BlockColumn(instance.data().block(0, top, top, b), instance.data().block(top, top, b, b));
  };

  for (int rep = 0; rep < opt.repeats; ++rep) {
    std::vector<std::optional<IncrementalExpm>> engines(nm);
    for (std::size_t m = 0; m < nm; ++m) {
      if (methods[m].kind == BenchMethod::Kind::incremental) engines[m].emplace(methods[m].scaling, pade);
    }
    for (std::size_t l = 0; l < stages; ++l) {
      const std::size_t d = part.end(l);
      const DenseMatrix g = instance.data().block(0, 0, d, d);
      std::optional<DenseMatrix> reference;
      double naive_seconds = -1.0;
      auto baseline = [&]() -> const DenseMatrix& {
        if (!reference) {
          const auto t0 = Clock::now();
          reference = expm_baseline(g, opt.pade_degree, opt.theta);
          naive_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        }
        return *reference;
      };
      const bool want_errors = opt.check && rep == 0;
      for (std::size_t m = 0; m < nm; ++m) {
        if (methods[m].kind == BenchMethod::Kind::naive) {
          baseline();
          times[m][l][rep] = naive_seconds;
          if (want_errors) errors[m][l] = eps;
          continue;
        }
        IncrementalExpm& e = *engines[m];
        const StepReport r = l == 0 ? e.start(g) : e.push(column(l));
        times[m][l][rep] = r.seconds;
        restarts[m][l] = r.restart;
        if (want_errors) {
          errors[m][l] = std::max(eps, rel_error_frobenius(baseline(), e.exponential().data()));
        }
      }
    }
  }

  std::vector<BenchRecord> out;
  out.reserve(nm * stages);
  for (std::size_t m = 0; m < nm; ++m) {
    double cum = 0.0;
    for (std::size_t l = 0; l < stages; ++l) {
      std::vector<double> t = times[m][l];
      std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
      cum += t[t.size() / 2];
      out.push_back({methods[m].label(), l, part.end(l), cum, errors[m][l], restarts[m][l]});
    }
  }
  return out;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << "method,step,dim,cum_seconds,rel_err,restart\n";
  char buf[64];
  for (const auto& r : records) {
    os << r.method << ',' << r.step << ',' << r.dimension << ',';
    std::snprintf(buf, sizeof buf, "%.6g", r.cum_seconds);
    os << buf << ',';
    if (r.rel_err) {
      std::snprintf(buf, sizeof buf, "%.6e", *r.rel_err);
      os << buf;
    }
    os << ',' << (r.restart ? 1 : 0) << '\n';
  }
}

}  // namespace incexpm
