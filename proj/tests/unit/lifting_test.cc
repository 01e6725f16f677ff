#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "phlift/errors.h"
#include "phlift/expr/parser.h"
#include "phlift/lifting/immersion.h"

namespace phlift {
namespace {

std::vector<std::string> states(size_t n) {
  std::vector<std::string> v;
  for (size_t i = 1; i <= n; ++i) v.push_back("x" + std::to_string(i));
  return v;
}

Poly V(const std::string& name) { return Poly::variable(name); }

// Checks each table entry against a central finite difference of the
// defining expression at random points of the box.
void expect_tables_consistent(const Immersion& imm, double lo, double hi,
                              uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  const auto& xs = imm.original_vars();
  const auto ext = imm.extended_vars();
  for (int s = 0; s < 100; ++s) {
    std::vector<double> x(xs.size());
    for (auto& v : x) v = u(rng);
    const auto xbar = imm.evaluate(x);
    std::map<std::string, double> ep;
    for (size_t k = 0; k < ext.size(); ++k) ep[ext[k]] = xbar[k];
    for (const auto& c : imm.coords()) {
      for (size_t j = 0; j < xs.size(); ++j) {
        const double h = 1e-6;
        std::map<std::string, double> pp, pm;
        for (size_t i = 0; i < xs.size(); ++i) {
          pp[xs[i]] = x[i] + (i == j ? h : 0.0);
          pm[xs[i]] = x[i] - (i == j ? h : 0.0);
        }
        const double fd = (eval(c.defining_expr, pp) - eval(c.defining_expr, pm)) / (2 * h);
        ASSERT_NEAR(c.derivative_table[j].evaluate(ep), fd, 1e-5 * std::max(1.0, std::abs(fd)))
            << c.name << " d/d" << xs[j];
      }
    }
  }
}

GTEST_TEST(CollectPrimitivesTest, ExponentialExample) {
  const auto xs = states(2);
  const std::vector<Expr> exprs{parse("x1", xs), parse("x2", xs), parse("exp(x1)", xs),
                                parse("exp(x2)", xs)};
  const auto p = collect_primitives(exprs);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0], parse("exp(x1)", xs));
  EXPECT_EQ(p[1], parse("exp(x2)", xs));
}

GTEST_TEST(CollectPrimitivesTest, PolynomialAndNested) {
  const auto xs = states(2);
  EXPECT_TRUE(collect_primitives({parse("x1^2*x2 + 3", xs)}).empty());
  EXPECT_THROW(collect_primitives({parse("exp(sin(x1))", xs)}), UnsupportedFunction);
  EXPECT_THROW(collect_primitives({parse("ln(1/(1 + x1^2))", xs)}), UnsupportedFunction);
}

GTEST_TEST(ClosureTest, ExponentialExample) {
  const auto xs = states(2);
  const auto imm = compute_closure(xs, {parse("exp(x1)", xs), parse("exp(x2)", xs)});
  ASSERT_EQ(imm.coords().size(), 2u);
  EXPECT_EQ(imm.coords()[0].name, "xbar3");
  EXPECT_EQ(imm.coords()[1].name, "xbar4");
  const auto P = imm.jacobian_P();
  EXPECT_EQ(P[0][0], RatFn(V("xbar3")));
  EXPECT_TRUE(P[0][1].is_zero());
  EXPECT_TRUE(P[1][0].is_zero());
  EXPECT_EQ(P[1][1], RatFn(V("xbar4")));
  expect_tables_consistent(imm, -2, 2, 1);
}

GTEST_TEST(ClosureTest, CosineAddsSinePartner) {
  const auto xs = states(6);
  const auto imm = compute_closure(xs, {parse("cos(x4)", xs)});
  ASSERT_EQ(imm.coords().size(), 2u);
  EXPECT_EQ(imm.coords()[0].defining_expr, parse("cos(x4)", xs));
  EXPECT_EQ(imm.coords()[1].defining_expr, parse("sin(x4)", xs));
  const auto P = imm.jacobian_P();
  for (size_t j = 0; j < 6; ++j) {
    if (j == 3) continue;
    EXPECT_TRUE(P[0][j].is_zero());
    EXPECT_TRUE(P[1][j].is_zero());
  }
  EXPECT_EQ(P[0][3], RatFn(-V("xbar8")));
  EXPECT_EQ(P[1][3], RatFn(V("xbar7")));
  expect_tables_consistent(imm, -5, 5, 2);
}

GTEST_TEST(ClosureTest, LogIsRational) {
  const auto xs = states(1);
  const auto imm = compute_closure(xs, {parse("ln(1 + x1^2)", xs)});
  ASSERT_EQ(imm.coords().size(), 1u);
  const RatFn& d = imm.coords()[0].derivative_table[0];
  EXPECT_FALSE(d.is_polynomial());
  EXPECT_TRUE(equivalent(d, RatFn(2 * V("xbar1"), V("xbar1").pow(2) + Poly::constant(1))));
  expect_tables_consistent(imm, -5, 5, 3);
}

GTEST_TEST(ClosureTest, Bound) {
  const auto xs = states(1);
  std::vector<Expr> many;
  for (int k = 1; k <= 20; ++k) many.push_back(sin(Expr(k) * Expr::variable("x1")));
  EXPECT_THROW(compute_closure(xs, many), ClosureDiverged);
  ClosureOptions opt;
  opt.max_coordinates = 40;
  EXPECT_EQ(compute_closure(xs, many, opt).coords().size(), 40u);
}

GTEST_TEST(RedundancyTest, CoinCoordinates) {
  const auto xs = states(6);
  const auto imm = immersion_from_coordinates(
      xs, {parse("x5", xs), parse("x6", xs), parse("cos(x4)", xs), parse("sin(x4)", xs)});
  const auto out = eliminate_redundancy(imm);
  ASSERT_EQ(out.coords().size(), 2u);
  EXPECT_EQ(out.coords()[0].defining_expr, parse("cos(x4)", xs));
  EXPECT_EQ(out.coords()[0].name, "xbar7");
  EXPECT_EQ(out.coords()[1].name, "xbar8");
  EXPECT_EQ(out.coords()[0].derivative_table[3], RatFn(-V("xbar8")));
}

GTEST_TEST(RedundancyTest, DuplicatesAndPowers) {
  const auto xs = states(1);
  const Expr e1 = parse("exp(x1)", xs), e2 = parse("exp(2*x1)", xs);
  EXPECT_EQ(eliminate_redundancy(immersion_from_coordinates(xs, {e1, e1})).coords().size(), 1u);
  for (const auto& order : {std::vector<Expr>{e1, e2}, std::vector<Expr>{e2, e1}}) {
    const auto out = eliminate_redundancy(immersion_from_coordinates(xs, order));
    ASSERT_EQ(out.coords().size(), 1u);
    EXPECT_EQ(out.coords()[0].defining_expr, e1);
  }
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 10; ++i) {
    const double x = u(rng);
    EXPECT_NEAR(eval(e2, {{"x1", x}}), std::pow(eval(e1, {{"x1", x}}), 2),
                1e-12 * std::exp(2 * x));
  }
}

GTEST_TEST(RedundancyTest, Idempotent) {
  const auto xs = states(2);
  const auto imm = immersion_from_coordinates(
      xs, {parse("exp(x1)", xs), parse("exp(3*x1)", xs), parse("sin(x2)", xs),
           parse("cos(x2)", xs), parse("x1^2", xs), parse("sin(x2)", xs)});
  const auto once = eliminate_redundancy(imm);
  const auto twice = eliminate_redundancy(once);
  ASSERT_EQ(once.coords().size(), 3u);
  ASSERT_EQ(twice.coords().size(), once.coords().size());
  for (size_t i = 0; i < once.coords().size(); ++i) {
    EXPECT_EQ(once.coords()[i].defining_expr, twice.coords()[i].defining_expr);
    EXPECT_EQ(once.coords()[i].name, twice.coords()[i].name);
  }
}

GTEST_TEST(ExtensionTest, LogDerivativeGetsReciprocal) {
  const auto xs = states(1);
  auto imm = compute_closure(xs, {parse("ln(1 + x1^2)", xs)});
  const auto out = polynomial_extension({}, imm, DomainBox::uniform(1));
  EXPECT_TRUE(out.empty());
  ASSERT_EQ(imm.coords().size(), 2u);
  ASSERT_EQ(imm.registry().entries.size(), 1u);
  const auto& w = imm.coords()[1];
  EXPECT_EQ(w.name, "xbar3");
  EXPECT_TRUE(w.is_reciprocal());
  EXPECT_EQ(*w.reciprocal_of, V("xbar1").pow(2) + Poly::constant(1));
  EXPECT_EQ(imm.coords()[0].derivative_table[0], RatFn(2 * V("xbar1") * V("xbar3")));
  EXPECT_EQ(w.derivative_table[0], RatFn(-2 * V("xbar1") * V("xbar3").pow(2)));
  for (const auto& c : imm.coords()) {
    for (const auto& t : c.derivative_table) EXPECT_TRUE(t.is_polynomial());
  }
  expect_tables_consistent(imm, -5, 5, 5);
}

GTEST_TEST(ExtensionTest, PolynomialEntriesUnchanged) {
  const auto xs = states(2);
  auto imm = compute_closure(xs, {parse("exp(x1)", xs)});
  const Poly p = V("xbar1") * V("xbar3") + Poly::constant(Rational(1, 2));
  const auto out = polynomial_extension({RatFn(p)}, imm, DomainBox::uniform(2));
  EXPECT_EQ(out[0], p);
  EXPECT_TRUE(imm.registry().empty());
  EXPECT_EQ(imm.coords().size(), 1u);
}

GTEST_TEST(ExtensionTest, PowersShareOneReciprocal) {
  const auto xs = states(1);
  Immersion imm(xs);
  const Poly b = V("xbar1").pow(2) + Poly::constant(1);
  const auto out = polynomial_extension(
      {RatFn(3 * Poly::constant(1), b * b), RatFn(Poly::constant(1), b)}, imm,
      DomainBox::uniform(1));
  ASSERT_EQ(imm.registry().entries.size(), 1u);
  EXPECT_EQ(out[0], 3 * V("xbar2").pow(2));
  EXPECT_EQ(out[1], V("xbar2"));
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 20; ++i) {
    const double x = u(rng);
    const auto xbar = imm.evaluate(std::vector<double>{x});
    EXPECT_NEAR(xbar[1], 1.0 / (1 + x * x), 1e-14);
    EXPECT_NEAR(imm.coords()[0].derivative_table[0].evaluate({{"xbar1", x}, {"xbar2", xbar[1]}}),
                -2 * x / std::pow(1 + x * x, 2), 1e-12);
  }
}

GTEST_TEST(ExtensionTest, VanishingDenominator) {
  const auto xs = states(1);
  Immersion imm(xs);
  EXPECT_THROW(polynomial_extension({RatFn(Poly::constant(1), V("xbar1") - Poly::constant(1))},
                                    imm, DomainBox::uniform(1)),
               DenominatorVanishes);
  Immersion imm2(xs);
  EXPECT_NO_THROW(polynomial_extension(
      {RatFn(Poly::constant(1), V("xbar1") - Poly::constant(1))}, imm2,
      DomainBox{{{2.0, 5.0}}}));
}

GTEST_TEST(ManifestTest, RoundTrip) {
  const auto xs = states(2);
  auto imm = compute_closure(xs, {parse("ln(1 + x1^2)", xs), parse("sin(x2)", xs)});
  polynomial_extension({RatFn(V("xbar1"), V("xbar2").pow(2) + Poly::constant(4))}, imm,
                       DomainBox::uniform(2));
  const std::string text = manifest_to_string(imm);
  const Immersion back = manifest_from_string(text);
  EXPECT_EQ(manifest_to_string(back), text);
  ASSERT_EQ(back.coords().size(), imm.coords().size());
  for (size_t i = 0; i < imm.coords().size(); ++i) {
    EXPECT_EQ(back.coords()[i].defining_expr, imm.coords()[i].defining_expr);
    for (size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(back.coords()[i].derivative_table[j], imm.coords()[i].derivative_table[j]);
    }
  }
  EXPECT_THROW(manifest_from_string("nonsense"), ParseError);
}

}  // namespace
}  // namespace phlift
