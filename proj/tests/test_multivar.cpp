#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "deepapprox/multivar.hpp"

using namespace deepapprox;

namespace {

const double kEps = 1.0 / 32;

// all alpha with |alpha| <= p by nested counting over (p+1)^d
std::size_t brute_force_count(int d, int p) {
  std::vector<int> a(d, 0);
  std::size_t count = 0;
  while (true) {
    int s = 0;
    for (int v : a) s += v;
    if (s <= p) ++count;
    int j = d - 1;
    while (j >= 0 && a[j] == p) a[j--] = 0;
    if (j < 0) break;
    ++a[j];
  }
  return count;
}

double trunc_frac(double x, int n) { return x >= 1.0 ? 1.0 - std::ldexp(1.0, -n) : truncate(x, n); }

}  // namespace

TEST(EnumerateMultiIndices, Examples) {
  std::vector<MultiIndex> e = enumerate_multi_indices(2, 1);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0], (MultiIndex{0, 0}));
  EXPECT_EQ(e[1], (MultiIndex{0, 1}));
  EXPECT_EQ(e[2], (MultiIndex{1, 0}));
  EXPECT_EQ(enumerate_multi_indices(1, 4).size(), 5u);
  EXPECT_EQ(enumerate_multi_indices(3, 4).size(), 35u);
}

TEST(EnumerateMultiIndices, CountMatchesBruteForce) {
  for (int d = 1; d <= 8; ++d)
    for (int p = 0; p <= 8; ++p) {
      std::vector<MultiIndex> e = enumerate_multi_indices(d, p);
      EXPECT_EQ(e.size(), brute_force_count(d, p)) << d << "," << p;
      EXPECT_EQ(static_cast<double>(e.size()), binomial(p + d, d));
      EXPECT_TRUE(std::is_sorted(e.begin(), e.end()));
      EXPECT_EQ(std::set<MultiIndex>(e.begin(), e.end()).size(), e.size());
    }
}

TEST(EnumerateMultiIndices, Errors) {
  EXPECT_THROW(enumerate_multi_indices(0, 2), std::invalid_argument);
  EXPECT_THROW(enumerate_multi_indices(2, -1), std::invalid_argument);
  EXPECT_THROW(enumerate_multi_indices(10, 10, 1000), std::invalid_argument);
}

TEST(LinearProduct, SingleCoordinate) {
  for (std::size_t d : {1u, 3u}) {
    std::vector<double> w(d, 0.0);
    w[0] = 1.0;
    Built b = build_linear_product({w}, kEps);
    const int n = b.report.bits;
    EXPECT_LE(b.report.measured, d * std::ldexp(1.0, -n));
    EXPECT_EQ(b.report.counts.step, static_cast<std::size_t>(n));
  }
}

TEST(LinearProduct, DyadicProduct) {
  Built b = build_linear_product({{1.0, 0.0}, {0.0, 1.0}}, kEps);
  std::vector<double> x{0.5, 0.5};
  EXPECT_EQ(eval(b.net, x), 0.25);
}

TEST(LinearProduct, TruncatedCoordinatesOracle) {
  Built b = build_linear_product({{0.5, 0.5}, {0.5, 0.5}}, kEps);
  const int n = b.report.bits;
  EXPECT_EQ(n, ceil_log2(4 / kEps));
  std::vector<double> x{0.7, 0.3};
  double s = 0.5 * trunc_frac(0.7, n) + 0.5 * trunc_frac(0.3, n);
  EXPECT_NEAR(eval(b.net, x), s * s, 1e-15);
  EXPECT_LE(std::abs(eval(b.net, x) - 0.25), 4 * std::ldexp(1.0, -n));
}

TEST(LinearProduct, CountsAndBound) {
  for (std::size_t d : {2u, 3u})
    for (std::size_t p : {2u, 3u}) {
      LinearFormSet W;
      for (std::size_t l = 0; l < p; ++l) {
        std::vector<double> row(d);
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += row[k] = 1.0 + static_cast<double>((l + k) % 3);
        for (double& v : row) v /= s;
        W.push_back(row);
      }
      Built b = build_linear_product(W, kEps);
      const std::size_t n = static_cast<std::size_t>(b.report.bits);
      EXPECT_EQ(b.report.counts.step, d * n);
      EXPECT_EQ(b.report.counts.relu, p * d * n);
      EXPECT_LE(b.report.measured, b.report.bound + 1e-12);
      EXPECT_LE(b.report.measured, kEps);
    }
}

TEST(LinearProduct, RejectsSignedFormLeavingRange) {
  try {
    build_linear_product({{1.0, 0.0}, {0.5, -0.5}, {1.0, 0.0}}, kEps);
    FAIL() << "expected BuildError";
  } catch (const BuildError& e) {
    EXPECT_NE(std::string(e.what()).find("x = ("), std::string::npos) << e.what();
  }
  EXPECT_THROW(build_linear_product({{0.5, 0.6}}, kEps), std::invalid_argument);
}

TEST(Multinomial, SingleCoordinateReducesToDecoder) {
  Built b = build_multinomial({{{1, 0}, 1.0}}, kEps);
  const int n = b.report.bits;
  EXPECT_EQ(b.report.counts.relu, 0u);
  EXPECT_EQ(b.report.counts.step, static_cast<std::size_t>(n));
  EXPECT_LE(b.report.measured, std::ldexp(1.0, -n));
}

TEST(Multinomial, MixedTerms) {
  MultinomialSpec C{{{1, 1}, 0.5}, {{2, 0}, 0.5}};
  Built b = build_multinomial(C, kEps);
  EXPECT_LE(b.report.measured, kEps);
  const int n = b.report.bits;
  for (double x : {0.0, 0.3, 0.77, 1.0})
    for (double y : {0.0, 0.45, 0.9}) {
      double tx = trunc_frac(x, n), ty = trunc_frac(y, n);
      std::vector<double> p{x, y};
      EXPECT_NEAR(eval(b.net, p), 0.5 * tx * ty + 0.5 * tx * tx, 1e-15);
    }
}

TEST(Multinomial, SharedDecodersAndSizeFormula) {
  for (int d : {2, 3})
    for (int p : {2, 3}) {
      MultinomialSpec C;
      std::vector<MultiIndex> all = enumerate_multi_indices(d, p);
      for (const auto& a : all) C[a] = 1.0 / static_cast<double>(all.size());
      Built b = build_multinomial(C, kEps);
      EXPECT_EQ(b.report.counts.step, static_cast<std::size_t>(d * b.report.bits));
      EXPECT_LE(static_cast<double>(b.report.counts.total), multinomial_size_formula(d, p, kEps));
      EXPECT_LE(b.report.measured, kEps);
    }
}

TEST(Multinomial, ConstantOnly) {
  Built b = build_multinomial({{{0, 0}, -0.75}}, kEps);
  std::vector<double> x{0.3, 0.9};
  EXPECT_EQ(eval(b.net, x), -0.75);
}

TEST(Multinomial, RejectsBadSpecs) {
  EXPECT_THROW(build_multinomial({{{1, 0}, 0.7}, {{0, 1}, 0.7}}, kEps), std::invalid_argument);
  EXPECT_THROW(build_multinomial({{{1, 0}, 0.5}, {{1}, 0.5}}, kEps), std::invalid_argument);
  EXPECT_THROW(build_multinomial({}, kEps), std::invalid_argument);
  EXPECT_THROW(build_multinomial({{{-1, 2}, 0.5}}, kEps), std::invalid_argument);
}

TEST(PolyThenChain, EmptyChainIsMultinomial) {
  MultinomialSpec l{{{1, 0}, 0.5}, {{0, 1}, 0.5}};
  Composed c = build_poly_then_chain(l, {}, kEps);
  Built m = build_multinomial(l, kEps);
  EXPECT_EQ(c.built.report.counts, m.report.counts);
  for (double x : {0.1, 0.6})
    for (double y : {0.2, 1.0}) {
      std::vector<double> p{x, y};
      EXPECT_EQ(eval(c.built.net, p), eval(m.net, p));
    }
}

TEST(PolyThenChain, SquareOfMean) {
  MultinomialSpec l{{{1, 0}, 0.5}, {{0, 1}, 0.5}};
  Composed c = build_poly_then_chain(l, {square_target()}, kEps);
  EXPECT_LE(c.built.report.measured, kEps);
  EXPECT_LE(c.stage_max, 1.0);
  PointSet ps = make_points(RandomGrid{2, 20000, 5, true});
  EXPECT_LE(sup_error(c.built.net, ps, MultiFn([](std::span<const double> x) {
                        double m = (x[0] + x[1]) / 2;
                        return m * m;
                      })),
            kEps);
}

TEST(PolyThenChain, ExpOfProduct) {
  Composed c = build_poly_then_chain({{{1, 1}, 1.0}}, {exp_shift_target()}, kEps);
  EXPECT_LE(c.built.report.measured, kEps);
  std::vector<double> x{0.6, 0.8};
  EXPECT_NEAR(eval(c.built.net, x), std::exp(0.48 - 1), kEps);
}

TEST(PolyThenChain, RangeViolationHasWitness) {
  try {
    build_poly_then_chain({{{1, 0}, 0.5}, {{0, 1}, -0.5}}, {square_target()}, kEps);
    FAIL() << "expected BuildError";
  } catch (const BuildError& e) {
    EXPECT_NE(std::string(e.what()).find("x = ("), std::string::npos) << e.what();
  }
  MultinomialSpec neg{{{1, 0}, 0.5}, {{0, 1}, -0.5}};
  RangeCheck r = check_unit_range(neg, make_points(RandomGrid{2, 100, 1, true}));
  EXPECT_FALSE(r.ok);
  ASSERT_EQ(r.witness.size(), 2u);
  EXPECT_LT(evaluate_multinomial(neg, r.witness), 0.0);
}
