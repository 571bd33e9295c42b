#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "elastic_dtn/jet.hpp"
#include "support.hpp"

using namespace elastic_dtn;
using namespace testing_support;

namespace {

const Complex I(0.0, 1.0);

JetContext ctx2(int K = 4) { return JetContext(2, K, {1.0}); }

Jet x(const JetContext& c, int k) { return Jet::variable(c, c.x(k)); }
Jet xh(const JetContext& c, int a) { return Jet::variable(c, c.xi(a)); }

}  // namespace

TEST(MultiIndex, DegreeOrderAndText) {
  MultiIndex a({1, 0, 2}), b({0, 3, 0}), c({2, 0, 0});
  EXPECT_EQ(a.degree(), 3);
  EXPECT_DOUBLE_EQ(a.factorial(), 2.0);
  EXPECT_LT(c, a);  // lower degree first
  EXPECT_LT(a, b);  // same degree: larger leading exponent first
  EXPECT_EQ(MultiIndex::parse(a.to_string()), a);
  EXPECT_EQ(a.to_string(), "1 0 2");
  EXPECT_THROW(MultiIndex::parse("1 x 2"), InputError);
  EXPECT_THROW(MultiIndex::parse("1 -1"), InputError);
}

TEST(MultiIndex, EnumerationIsSortedAndComplete) {
  auto all = multi_indices_of_degree(3, 3);
  EXPECT_EQ(all.size(), 10u);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LT(all[i - 1], all[i]);
}

TEST(JetContext, Validation) {
  EXPECT_THROW(JetContext(1, 4, {}), InputError);
  EXPECT_THROW(JetContext(2, 1, {1.0}), InputError);
  EXPECT_THROW(JetContext(2, 4, {0.0}), InputError);
  EXPECT_THROW(JetContext(3, 4, {1.0}), InputError);
  JetContext c(3, 4, {1.0, 0.0});
  EXPECT_EQ(c.num_variables(), 5);
  EXPECT_EQ(c.normal(), 2);
  EXPECT_EQ(c.xi(1), 4);
}

TEST(Jet, ProductExamples) {
  auto c = ctx2();
  Jet one_plus = 1.0 + x(c, 1);
  Jet sq = one_plus * one_plus;
  EXPECT_TRUE(approx_equal(sq, 1.0 + 2.0 * x(c, 1) + x(c, 1) * x(c, 1)));
  EXPECT_EQ(sq.coefficient(MultiIndex({0, 2, 0})), Complex(1.0));

  Jet a = x(c, 0) + I * xh(c, 0);
  Jet b = x(c, 0) - I * xh(c, 0);
  Poly expected{{{2, 0, 0}, 1.0}, {{0, 0, 2}, 1.0}};
  EXPECT_LE(poly_distance(to_poly(a * b), expected), 1e-15);
  EXPECT_TRUE(approx_equal(a * Jet::constant(c, 1.0), a));
}

TEST(Jet, ContextMismatchIsChecked) {
  JetContext a(2, 4, {1.0}), b(2, 4, {2.0});
  EXPECT_THROW(Jet::variable(a, 0) * Jet::variable(b, 0), ContextMismatch);
  EXPECT_THROW(Jet::variable(a, 0) + Jet::variable(b, 0), ContextMismatch);
  // Structurally identical contexts are interchangeable.
  JetContext a2(2, 4, {1.0});
  EXPECT_NO_THROW(Jet::variable(a, 0) * Jet::variable(a2, 1));
}

TEST(Jet, ProductMatchesBruteForceOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 2, K = 3 + trial % 3;
    auto c = random_context(rng, n, K);
    Jet a = random_jet(c, rng, 3), b = random_jet(c, rng, 3);
    EXPECT_LE(poly_distance(to_poly(a * b), poly_mul(to_poly(a), to_poly(b), K)), 1e-13);
  }
}

TEST(Jet, TruncationDropsHighDegrees) {
  auto c = ctx2(3);
  Jet t = x(c, 0) * x(c, 0);
  EXPECT_TRUE((t * t).is_zero());
  EXPECT_TRUE((t * x(c, 1)).coefficient(MultiIndex({2, 1, 0})) == Complex(1.0));
}

TEST(Jet, AccuracyRules) {
  auto c = ctx2(5);
  Jet a = (1.0 + x(c, 0)).truncated(3);
  Jet b = 2.0 + xh(c, 0);
  EXPECT_EQ(a.accuracy(), 3);
  EXPECT_EQ((a * b).accuracy(), 3);
  EXPECT_EQ((a + b).accuracy(), 3);
  EXPECT_EQ((b / a).accuracy(), 3);
  EXPECT_EQ(sqrt(a).accuracy(), 3);
  EXPECT_EQ(partial(a, 0).accuracy(), 2);
  Jet z = a.truncated(0);
  EXPECT_THROW(partial(z, 0), AccuracyExhausted);
  try {
    partial(z, 1);
  } catch (const AccuracyExhausted& e) {
    EXPECT_NE(std::string(e.what()).find("derivative exceeds trusted degree"), std::string::npos);
  }
  // Nothing above the accuracy is stored.
  Jet p = (1.0 + x(c, 0)).truncated(1);
  Jet q = p * p;
  EXPECT_EQ(q.coefficient(MultiIndex({2, 0, 0})), Complex{});
  EXPECT_THROW(Jet::from_coefficients(c, {{MultiIndex({3, 0, 0}), 1.0}}, 2), InputError);
}

TEST(Jet, ApproximateEqualityIgnoresTinyCoefficients) {
  auto c = ctx2();
  Jet tiny = x(c, 0) * 1e-15 + 5e-15;
  EXPECT_TRUE(approx_equal(tiny, Jet(c)));
  EXPECT_FALSE(approx_equal(x(c, 0) * 1e-9, Jet(c)));
}

TEST(Jet, ReciprocalExamples) {
  auto c = ctx2(5);
  EXPECT_TRUE(approx_equal(reciprocal(Jet::constant(c, 1.0)), Jet::constant(c, 1.0)));
  Jet r = reciprocal(1.0 + x(c, 1));
  for (int k = 0; k <= 5; ++k)
    EXPECT_NEAR(std::abs(r.coefficient(MultiIndex({0, k, 0})) - std::pow(-1.0, k)), 0.0, 1e-15);
  EXPECT_THROW(reciprocal(x(c, 0)), NotInvertible);
  try {
    reciprocal(Jet(c));
  } catch (const NotInvertible& e) {
    EXPECT_NE(std::string(e.what()).find("jet not invertible"), std::string::npos);
  }
}

TEST(Jet, ReciprocalRoundTrip) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto c = random_context(rng, 2 + trial % 2, 4);
    Jet a = random_jet(c, rng, 3) - random_jet(c, rng, 0) * 0.0;
    a = a - a.constant_term() + Complex(2.0, 1.0);
    EXPECT_TRUE(approx_equal(a * reciprocal(a), Jet::constant(c, 1.0), 1e-12));
  }
}

TEST(Jet, SqrtExamples) {
  auto c = ctx2(5);
  EXPECT_TRUE(approx_equal(sqrt(Jet::constant(c, 4.0)), Jet::constant(c, 2.0)));
  Jet s = sqrt(1.0 + x(c, 1));
  const double binom[] = {1.0, 0.5, -0.125, 0.0625, -0.0390625, 0.02734375};
  for (int k = 0; k <= 5; ++k) EXPECT_NEAR(std::abs(s.coefficient(MultiIndex({0, k, 0})) - binom[k]), 0.0, 1e-15);
  EXPECT_THROW(sqrt(Jet::constant(c, -1.0)), NotInvertible);
  EXPECT_THROW(sqrt(Jet::constant(c, I)), NotInvertible);
  EXPECT_THROW(sqrt(x(c, 0)), NotInvertible);
}

TEST(Jet, SqrtRoundTrip) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto c = random_context(rng, 2 + trial % 2, 5);
    Jet a = random_jet(c, rng, 3, 0.3);
    a = a - a.constant_term() + 1.5;
    Jet s = sqrt(a);
    EXPECT_GT(s.constant_term().real(), 0.0);
    EXPECT_TRUE(approx_equal(s * s, a, 1e-12));
  }
}

TEST(Jet, ExpIsAHomomorphism) {
  std::mt19937_64 rng(6);
  auto c = random_context(rng, 2, 5);
  for (int trial = 0; trial < 10; ++trial) {
    Jet a = random_jet(c, rng, 3, 0.5), b = random_jet(c, rng, 3, 0.5);
    EXPECT_TRUE(approx_equal(exp(a + b), exp(a) * exp(b), 1e-11));
    // d exp(a) = exp(a) da
    EXPECT_TRUE(approx_equal(partial(exp(a), 0), exp(a) * partial(a, 0), 1e-11));
  }
}

TEST(Jet, PartialExamples) {
  auto c = ctx2();
  EXPECT_TRUE(approx_equal(partial(x(c, 1) * x(c, 1), 1), 2.0 * x(c, 1)));
  EXPECT_TRUE(partial(Jet::constant(c, 3.0), 0).is_zero());
  // xi_1^2 = (xi0 + xh)^2 differentiates to 2 xh + 2 xi0.
  Jet xi = Jet::covector(c, 0);
  EXPECT_TRUE(approx_equal(partial(xi * xi, c.xi(0)), 2.0 * xh(c, 0) + 2.0 * c.base_covector()[0]));
}

TEST(Jet, PartialMatchesCoefficientShift) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = random_context(rng, 2 + trial % 2, 4);
    Jet a = random_jet(c, rng, 3);
    const int var = static_cast<int>(rng() % static_cast<unsigned>(c.num_variables()));
    Poly expected;
    for (const auto& [e, coef] : to_poly(a)) {
      if (e[static_cast<std::size_t>(var)] == 0) continue;
      auto f = e;
      f[static_cast<std::size_t>(var)] -= 1;
      expected[f] += coef * static_cast<double>(e[static_cast<std::size_t>(var)]);
    }
    EXPECT_LE(poly_distance(to_poly(partial(a, var)), expected), 1e-14);
  }
}

TEST(Jet, PartialsCommute) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = random_context(rng, 3, 5);
    Jet a = random_jet(c, rng, 4);
    EXPECT_TRUE(approx_equal(partial(partial(a, 0), 1), partial(partial(a, 1), 0), 1e-13));
    EXPECT_TRUE(approx_equal(partial(partial(a, 2), c.xi(1)), partial(partial(a, c.xi(1)), 2), 1e-13));
  }
}

TEST(Jet, RingAxioms) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = random_context(rng, 2 + trial % 2, 3 + trial % 4);
    Jet a = random_jet(c, rng, 3), b = random_jet(c, rng, 3), d = random_jet(c, rng, 3);
    EXPECT_TRUE(approx_equal((a * b) * d, a * (b * d), 1e-13));
    EXPECT_TRUE(approx_equal(a * (b + d), a * b + a * d, 1e-13));
    EXPECT_TRUE(approx_equal(a * b, b * a, 1e-13));
    EXPECT_TRUE(approx_equal(a + (b - a), b, 1e-13));
  }
}

TEST(Jet, OperationsMatchOracleOnLowDegreeInstances) {
  // Degree <= 3, n = 2: every operation against the dictionary oracle.
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = random_context(rng, 2, 3);
    Jet a = random_jet(c, rng, 3), b = random_invertible_jet(c, rng, 3);
    Poly pa = to_poly(a), pb = to_poly(b);
    Poly sum = pa;
    for (const auto& [e, v] : pb) sum[e] += v;
    EXPECT_LE(poly_distance(to_poly(a + b), sum), 1e-14);
    // quotient q satisfies q * b == a in the oracle's product
    Poly q = to_poly(a / b);
    EXPECT_LE(poly_distance(poly_mul(q, pb, 3), pa), 1e-12);
    Jet s = sqrt(b * conj(b));
    EXPECT_LE(poly_distance(poly_mul(to_poly(s), to_poly(s), 3), to_poly(b * conj(b))), 1e-12);
  }
}

TEST(Jet, FiniteDifferenceAgreesWithPartial) {
  std::mt19937_64 rng(12);
  const double h = 1e-4;
  for (int trial = 0; trial < 10; ++trial) {
    auto c = random_context(rng, 3, 5);
    Jet a = random_jet(c, rng, 5);
    for (int v = 0; v < c.num_variables(); ++v) {
      std::vector<double> p(static_cast<std::size_t>(c.num_variables()), 0.0), m = p, p2 = p, m2 = p;
      p[static_cast<std::size_t>(v)] = h;
      m[static_cast<std::size_t>(v)] = -h;
      p2[static_cast<std::size_t>(v)] = 2 * h;
      m2[static_cast<std::size_t>(v)] = -2 * h;
      // Richardson-extrapolated central difference
      Complex d1 = (evaluate(a, p) - evaluate(a, m)) / (2 * h);
      Complex d2 = (evaluate(a, p2) - evaluate(a, m2)) / (4 * h);
      Complex rich = (4.0 * d1 - d2) / 3.0;
      EXPECT_LE(std::abs(rich - partial(a, v).constant_term()), 1e-6);
      // One-sided quotient converges at first order.
      Complex fwd = (evaluate(a, p) - a.constant_term()) / h;
      EXPECT_LE(std::abs(fwd - partial(a, v).constant_term()), 1e-2);
    }
  }
}

TEST(JetMatrix, InverseExamples) {
  auto c = ctx2(4);
  auto id = JetMatrix::identity(c, 3);
  auto inv = invert(id);
  EXPECT_LE((inv.value - id).max_abs(), 1e-15);
  EXPECT_NEAR(inv.condition_number, 1.0, 1e-15);

  auto d = JetMatrix::diagonal({1.0 + x(c, 1), Jet::constant(c, 2.0)});
  auto di = mat_inverse(d);
  EXPECT_TRUE(approx_equal(di(0, 0), reciprocal(1.0 + x(c, 1))));
  EXPECT_TRUE(approx_equal(di(1, 1), Jet::constant(c, 0.5)));
  EXPECT_TRUE(di(0, 1).is_zero());

  JetMatrix sing(c, 2, 2);
  sing(0, 0) = x(c, 0);
  sing(1, 1) = Jet::constant(c, 1.0);
  EXPECT_THROW(mat_inverse(sing), NotInvertible);
}

TEST(JetMatrix, InverseRoundTripOnSpdMatrices) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = random_context(rng, 3, 4);
    const std::size_t m = 2 + trial % 3;
    JetMatrix M(c, m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        Jet e = random_jet(c, rng, 2, 0.3);
        e = e - e.constant_term() + (i == j ? 2.0 + u(rng) : 0.3 * u(rng));
        M(i, j) = e;
        M(j, i) = e;
      }
    auto inv = invert(M);
    EXPECT_FALSE(inv.ill_conditioned());
    EXPECT_LE((M * inv.value - JetMatrix::identity(c, m)).max_abs(), 1e-10);
    EXPECT_LE((inv.value * M - JetMatrix::identity(c, m)).max_abs(), 1e-10);
  }
}

TEST(JetMatrix, IllConditioningIsReported) {
  auto c = ctx2(3);
  JetMatrix M(c, 2, 2);
  M(0, 0) = Jet::constant(c, 1.0);
  M(0, 1) = Jet::constant(c, 1.0);
  M(1, 0) = Jet::constant(c, 1.0);
  M(1, 1) = Jet::constant(c, 1.0 + 1e-10);
  auto inv = invert(M);
  EXPECT_TRUE(inv.ill_conditioned());
}

TEST(JetMatrix, AccuracyIsEntrywiseMinimum) {
  auto c = ctx2(5);
  JetMatrix M = JetMatrix::identity(c, 2);
  M(1, 0) = x(c, 0).truncated(2);
  EXPECT_EQ(M.accuracy(), 2);
  EXPECT_EQ(partial(M, 0).accuracy(), 1);
  JetMatrix N(c, 2, 3);
  EXPECT_THROW(M + N, InputError);
}
