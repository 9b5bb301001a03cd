#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "incexpm/generators.hpp"
#include "incexpm/pade.hpp"
#include "oracles.hpp"

using namespace incexpm;

namespace {

Polynomial monomial(unsigned p, unsigned q, double c = 1.0) {
  Polynomial m(2);
  m.add_term(MultiIndex{p, q}, c);
  return m;
}

// Same matrix built by applying the generator column by column.
DenseMatrix generator_by_columns(const PolynomialOperatorSpec& spec, std::size_t n) {
  const std::size_t dim = basis_size(n, spec.dimension());
  DenseMatrix g(dim, dim);
  for (std::size_t c = 0; c < dim; ++c) {
    Polynomial mono(spec.dimension());
    mono.add_term(basis_multi_index(c, spec.dimension()), 1.0);
    const Polynomial image = apply_generator(spec, mono);
    for (const auto& [k, a] : image.terms()) g(basis_index(k), c) = a;
  }
  return g;
}

}  // namespace

TEST(BasisIndex, GradedOrderForTwoVariables) {
  EXPECT_EQ(basis_index(MultiIndex{0, 0}), 0u);
  EXPECT_EQ(basis_index(MultiIndex{1, 0}), 1u);
  EXPECT_EQ(basis_index(MultiIndex{0, 1}), 2u);
  EXPECT_EQ(basis_index(MultiIndex{2, 0}), 3u);
  EXPECT_EQ(basis_index(MultiIndex{1, 1}), 4u);
  EXPECT_EQ(basis_index(MultiIndex{0, 2}), 5u);
  EXPECT_EQ(basis_index(MultiIndex{3, 0}), 6u);
  EXPECT_EQ(basis_index(MultiIndex{0, 3}), 9u);
}

TEST(BasisIndex, RoundTripAndCounts) {
  for (std::size_t d = 1; d <= 3; ++d) {
    const std::size_t total = basis_size(6, d);
    for (std::size_t i = 0; i < total; ++i) {
      const MultiIndex k = basis_multi_index(i, d);
      EXPECT_EQ(basis_index(k), i);
      EXPECT_LE(k.degree(), 6u);
      if (i > 0) EXPECT_GE(k.degree(), basis_multi_index(i - 1, d).degree());
    }
    for (std::size_t n = 0; n <= 6; ++n) {
      std::size_t count = 0;
      for (std::size_t i = 0; i < total; ++i) count += basis_multi_index(i, d).degree() <= n;
      EXPECT_EQ(count, binomial(n + d, n));
    }
  }
  EXPECT_EQ(basis_multi_index(4, 3), (MultiIndex{2, 0, 0}));
}

TEST(Polynomial, ExactZerosArePruned) {
  Polynomial p(2);
  p.add_term(MultiIndex{1, 0}, 0.5);
  p.add_term(MultiIndex{1, 0}, -0.5);
  p.add_term(MultiIndex{0, 1}, 0.0);
  EXPECT_TRUE(p.is_zero());
  EXPECT_EQ(p.degree(), -1);
  p.add_term(MultiIndex{0, 1}, 1e-300);
  EXPECT_EQ(p.terms().size(), 1u);
  EXPECT_THROW(p.add_term(MultiIndex{1}, 1.0), DimensionError);
}

TEST(ApplyGenerator, Examples) {
  const JacobiParams par = oracle::reference_jacobi();
  const PolynomialOperatorSpec spec = jacobi_spec(par);
  EXPECT_TRUE(apply_generator(spec, Polynomial::constant(2, 3.0)).is_zero());
  const Polynomial gy = apply_generator(spec, monomial(1, 0));
  EXPECT_EQ(gy, Polynomial(2, {{MultiIndex{0, 0}, par.r}, {MultiIndex{0, 1}, -0.5}}));
  EXPECT_THROW(apply_generator(spec, Polynomial::constant(3, 1.0)), DimensionError);
}

TEST(ApplyGenerator, SevenTermExpansion) {
  std::mt19937_64 rng(60);
  for (int t = 0; t < 20; ++t) {
    const JacobiParams par = t == 0 ? oracle::reference_jacobi() : oracle::random_jacobi(rng);
    const PolynomialOperatorSpec spec = jacobi_spec(par);
    for (int p = 0; p <= 5; ++p)
      for (int q = 0; q <= 5; ++q) {
        Polynomial expected(2);
        for (const auto& [pp, qq, c] : oracle::jacobi_monomial_image(par, p, q)) {
          if (pp >= 0 && qq >= 0 && c != 0.0) expected.add_term(MultiIndex{unsigned(pp), unsigned(qq)}, c);
        }
        const Polynomial got = apply_generator(spec, monomial(p, q));
        for (const auto& [k, c] : expected.terms()) {
          EXPECT_NEAR(got.coefficient(k), c, 1e-12 * std::max(1.0, std::abs(c))) << to_string(k);
        }
        for (const auto& [k, c] : got.terms()) {
          if (expected.coefficient(k) == 0.0) EXPECT_NEAR(c, 0.0, 1e-12) << to_string(k);
        }
      }
  }
}

TEST(BuildGeneratorMatrix, DegreeZeroIsZero) {
  std::mt19937_64 rng(61);
  const BlockTriangularMatrix g = build_generator_matrix(heston_spec(oracle::random_heston(rng)), 0);
  EXPECT_EQ(g.data(), DenseMatrix(1, 1));
  EXPECT_EQ(g.partition(), Partition({1}));
}

TEST(BuildGeneratorMatrix, JacobiDegreeTwoGolden) {
  std::mt19937_64 rng(62);
  for (int t = 0; t < 10; ++t) {
    const JacobiParams par = t == 0 ? oracle::reference_jacobi() : oracle::random_jacobi(rng);
    const BlockTriangularMatrix g = build_generator_matrix(jacobi_spec(par), 2);
    EXPECT_EQ(g.partition(), Partition({1, 2, 3}));
    const DenseMatrix golden = oracle::jacobi_g2(par);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j)
        EXPECT_NEAR(g.data()(i, j), golden(i, j), 1e-13 * std::max(1.0, std::abs(golden(i, j))))
            << i << "," << j;
  }
}

TEST(BuildGeneratorMatrix, NestedAndColumnwise) {
  std::mt19937_64 rng(63);
  const PolynomialOperatorSpec specs[] = {jacobi_spec(oracle::random_jacobi(rng)),
                                          heston_spec(oracle::random_heston(rng))};
  for (const auto& spec : specs) {
    for (std::size_t n = 1; n <= 8; ++n) {
      const BlockTriangularMatrix g = build_generator_matrix(spec, n);
      EXPECT_EQ(leading(g, n - 1), build_generator_matrix(spec, n - 1));
      EXPECT_EQ(g.data(), generator_by_columns(spec, n));
      EXPECT_EQ(g.partition().size(n), n + 1);
      EXPECT_EQ(append_block_column(build_generator_matrix(spec, n - 1), generator_block_column(spec, n)), g);
    }
    const BlockTriangularMatrix scaled = build_generator_matrix(spec, 4, 0.25);
    DenseMatrix ref = build_generator_matrix(spec, 4).data();
    ref *= 0.25;
    EXPECT_EQ(scaled.data(), ref);
  }
}

TEST(BuildGeneratorMatrix, RejectsNonPolynomialDiffusion) {
  const Polynomial zero(2);
  const Polynomial cubic = monomial(0, 3);
  const PolynomialOperatorSpec bad({{monomial(0, 1), zero}, {zero, cubic}}, {zero, zero});
  EXPECT_FALSE(bad.satisfies_degree_bounds());
  EXPECT_THROW(build_generator_matrix(bad, 2), StructureError);
  try {
    generator_degree_columns(bad, 2);
    FAIL();
  } catch (const StructureError& e) {
    EXPECT_NE(std::string(e.what()).find("(0,2)"), std::string::npos);
  }
  const PolynomialOperatorSpec quad_drift({{zero, zero}, {zero, zero}}, {monomial(2, 0), zero});
  EXPECT_THROW(build_generator_matrix(quad_drift, 1), StructureError);
}

TEST(JacobiSpec, Coefficients) {
  const JacobiParams par = oracle::reference_jacobi();
  const PolynomialOperatorSpec spec = jacobi_spec(par);
  EXPECT_EQ(spec.diffusion(0, 0), monomial(0, 1));
  const double s = par.s_factor(), ss = par.sigma * par.sigma;
  const Polynomial& a22 = spec.diffusion(1, 1);
  EXPECT_DOUBLE_EQ(a22.coefficient(MultiIndex{0, 1}), ss / s * (par.vmax + par.vmin));
  EXPECT_DOUBLE_EQ(a22.coefficient(MultiIndex{0, 2}), -ss / s);
  EXPECT_DOUBLE_EQ(a22.coefficient(MultiIndex{0, 0}), -ss / s * par.vmax * par.vmin);
  EXPECT_EQ(a22.terms().size(), 3u);

  JacobiParams uncorrelated = par;
  uncorrelated.rho = 0.0;
  const PolynomialOperatorSpec u = jacobi_spec(uncorrelated);
  EXPECT_TRUE(u.diffusion(0, 1).is_zero());
  EXPECT_TRUE(u.diffusion(1, 0).is_zero());
}

TEST(JacobiSpec, ValidationListsFailedConstraints) {
  JacobiParams par = oracle::reference_jacobi();
  par.sigma = 0.0;
  par.theta = 2.0;
  try {
    jacobi_spec(par);
    FAIL();
  } catch (const InvalidArgument& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("sigma > 0"), std::string::npos);
    EXPECT_NE(what.find("theta in [vmin, vmax]"), std::string::npos);
  }
  par = oracle::reference_jacobi();
  par.vmin = 1.0;
  EXPECT_THROW(jacobi_spec(par), InvalidArgument);
  par = oracle::reference_jacobi();
  par.rho = -1.5;
  EXPECT_THROW(jacobi_spec(par), InvalidArgument);
}

TEST(HestonSpec, Coefficients) {
  HestonParams h;
  h.kappa = 1.5;
  h.theta = 0.04;
  h.sigma = 1.0;
  h.rho = 1.0;
  h.r = 0.02;
  const PolynomialOperatorSpec spec = heston_spec(h);
  EXPECT_EQ(spec.diffusion(0, 0), monomial(0, 1));
  EXPECT_EQ(spec.diffusion(1, 1), monomial(0, 1));
  EXPECT_EQ(spec.diffusion(0, 1), monomial(0, 1));

  JacobiParams j = oracle::reference_jacobi();
  j.kappa = h.kappa;
  j.theta = h.theta;
  j.r = h.r;
  const PolynomialOperatorSpec js = jacobi_spec(j);
  EXPECT_EQ(spec.drift(0), js.drift(0));
  EXPECT_EQ(spec.drift(1), js.drift(1));

  h.sigma = -1.0;
  EXPECT_THROW(heston_spec(h), InvalidArgument);
}

TEST(PolynomialOperatorSpec, RejectsAsymmetricDiffusion) {
  const Polynomial zero(2);
  EXPECT_THROW(PolynomialOperatorSpec({{zero, monomial(0, 1)}, {monomial(0, 1, 0.5), zero}}, {zero, zero}),
               InvalidArgument);
  EXPECT_THROW(PolynomialOperatorSpec({{zero}}, {zero, zero}), DimensionError);
}

TEST(NormBounds, Examples) {
  EXPECT_EQ(jacobi_norm_bound(oracle::reference_jacobi(), 0), 0.0);
  std::mt19937_64 rng(64);
  EXPECT_EQ(heston_norm_bound(oracle::random_heston(rng), 0), 0.0);
  // Squarings for the bound on tau G_60 (tau = 0.25, the matrix that is
  // exponentiated when pricing) and on G_60 itself.
  const double bound60 = jacobi_norm_bound(oracle::reference_jacobi(), 60);
  EXPECT_EQ(select_scaling_for_norm(0.25 * bound60, kTheta13).s, 7);
  EXPECT_EQ(select_scaling_for_norm(bound60, kTheta13).s, 9);

  HestonParams h;
  h.kappa = 1.2;
  h.theta = 0.3;
  h.r = 0.05;
  h.sigma = 1e-8;
  for (std::size_t n : {1u, 10u, 40u}) {
    const double x = static_cast<double>(n);
    EXPECT_NEAR(heston_norm_bound(h, n), x * (h.r + h.kappa + h.kappa * h.theta) + x * x / 2, 1e-6 * x * x);
  }
}

TEST(NormBounds, ReferenceParametersDominateUpToSixty) {
  const JacobiParams par = oracle::reference_jacobi();
  const PolynomialOperatorSpec spec = jacobi_spec(par);
  BlockTriangularMatrix g = build_generator_matrix(spec, 0);
  for (std::size_t n = 1; n <= 60; ++n) {
    g = append_block_column(g, generator_block_column(spec, n));
    EXPECT_GE(jacobi_norm_bound(par, n), one_norm(g.data())) << "n=" << n;
  }
}

TEST(NormBounds, RandomParametersDominate) {
  std::mt19937_64 rng(65);
  for (int t = 0; t < 100; ++t) {
    const JacobiParams jp = oracle::random_jacobi(rng);
    const HestonParams hp = oracle::random_heston(rng);
    const PolynomialOperatorSpec js = jacobi_spec(jp), hs = heston_spec(hp);
    BlockTriangularMatrix jg = build_generator_matrix(js, 0), hg = build_generator_matrix(hs, 0);
    for (std::size_t n = 1; n <= 30; ++n) {
      jg.append(generator_block_column(js, n).top.view(), generator_block_column(js, n).diagonal.view());
      hg.append(generator_block_column(hs, n).top.view(), generator_block_column(hs, n).diagonal.view());
      EXPECT_GE(jacobi_norm_bound(jp, n), one_norm(jg.data())) << "draw " << t << " n=" << n;
      EXPECT_GE(heston_norm_bound(hp, n), one_norm(hg.data())) << "draw " << t << " n=" << n;
    }
  }
}

TEST(GeneratorProperties, NormGrowsQuadratically) {
  const PolynomialOperatorSpec spec = jacobi_spec(oracle::reference_jacobi());
  BlockTriangularMatrix g = build_generator_matrix(spec, 0);
  std::vector<double> ratio;
  for (std::size_t n = 1; n <= 60; ++n) {
    g = append_block_column(g, generator_block_column(spec, n));
    if (n >= 10) ratio.push_back(one_norm(g.data()) / (double(n) * n));
  }
  // Ratios over the upper half of the range agree within 20%.
  const double last = ratio.back();
  for (std::size_t i = ratio.size() / 2; i < ratio.size(); ++i) EXPECT_NEAR(ratio[i] / last, 1.0, 0.2);
}

TEST(GeneratorProperties, DegreeIsPreserved) {
  std::mt19937_64 rng(66);
  std::uniform_int_distribution<unsigned> e(0, 12);
  const PolynomialOperatorSpec specs[] = {jacobi_spec(oracle::random_jacobi(rng)),
                                          heston_spec(oracle::random_heston(rng))};
  for (int t = 0; t < 200; ++t) {
    const unsigned p = e(rng), q = e(rng);
    for (const auto& spec : specs) EXPECT_LE(apply_generator(spec, monomial(p, q)).degree(), int(p + q));
  }
}
