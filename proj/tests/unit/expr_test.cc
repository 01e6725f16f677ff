#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "phlift/errors.h"
#include "phlift/expr/expr.h"
#include "phlift/expr/parser.h"

namespace phlift {
namespace {

const std::vector<std::string> kVars{"x1", "x2", "x3", "x4"};

Expr P(const std::string& s) { return parse(s, kVars); }

GTEST_TEST(ParseTest, PrimitiveCall) {
  const Expr e = P("exp(x1)");
  ASSERT_EQ(e.kind(), Expr::Kind::kCall);
  EXPECT_EQ(e.function(), Primitive::kExp);
  EXPECT_EQ(e.children()[0], Expr::variable("x1"));
}

GTEST_TEST(ParseTest, HalfSumOfSquares) {
  const Expr e = P("(1/2)*(x1^2 + x2^2)");
  const Expr x1 = Expr::variable("x1"), x2 = Expr::variable("x2");
  EXPECT_EQ(e, Expr(Rational(1, 2)) * (Expr::power(x1, 2) + Expr::power(x2, 2)));
  EXPECT_DOUBLE_EQ(eval(e, {{"x1", 3.0}, {"x2", 4.0}}), 12.5);
}

GTEST_TEST(ParseTest, SyntaxErrorOffset) {
  try {
    P("x1 +* x2");
    FAIL();
  } catch (const ParseError& err) {
    EXPECT_EQ(err.offset(), 4u);
  }
}

GTEST_TEST(ParseTest, UnknownIdentifierAndArity) {
  EXPECT_THROW(P("x1 + y"), UnknownIdentifier);
  EXPECT_THROW(P("exp(x1, x2)"), ArityMismatch);
  EXPECT_THROW(P("sin()"), ArityMismatch);
  EXPECT_THROW(P("cos + 1"), ArityMismatch);
  EXPECT_THROW(P("foo(x1)"), UnknownIdentifier);
  EXPECT_THROW(P("(x1"), ParseError);
  EXPECT_THROW(P("x1^"), ParseError);
}

GTEST_TEST(ParseTest, DecimalsAreExact) {
  EXPECT_EQ(P("0.5"), Expr(Rational(1, 2)));
  EXPECT_EQ(P("1.25*x1"), Expr(Rational(5, 4)) * Expr::variable("x1"));
}

GTEST_TEST(ParseTest, UnaryMinusBindsTighterThanPower) {
  EXPECT_EQ(P("-x1^2"), P("x1^2"));
  EXPECT_EQ(P("-(x1^2)"), -P("x1^2"));
}

GTEST_TEST(ExprTest, CanonicalOrderIndependence) {
  EXPECT_EQ(P("x1 + x2*x3"), P("x3*x2 + x1"));
  EXPECT_EQ(P("x1*x1*x2"), P("x2*x1^2"));
  EXPECT_EQ(P("2*x1 - x1"), P("x1"));
  EXPECT_EQ(P("x1 - x1"), Expr());
  EXPECT_EQ(P("exp(0)"), Expr(1));
}

GTEST_TEST(ExprTest, EvalErrors) {
  EXPECT_THROW(eval(P("1/(x1 - 1)"), {{"x1", 1.0}}), EvaluationError);
  EXPECT_THROW(eval(P("ln(x1)"), {{"x1", -1.0}}), EvaluationError);
  EXPECT_THROW(eval(P("x1 + x2"), {{"x1", 1.0}}), EvaluationError);
  EXPECT_DOUBLE_EQ(eval(P("exp(x1)"), {{"x1", 0.0}}), 1.0);
}

GTEST_TEST(DifferentiateTest, Basics) {
  EXPECT_EQ(differentiate(P("exp(x1)"), "x1"), P("exp(x1)"));
  EXPECT_EQ(differentiate(P("cos(x4)"), "x4"), P("-sin(x4)"));
  EXPECT_EQ(differentiate(P("sin(x4)"), "x4"), P("cos(x4)"));
}

GTEST_TEST(DifferentiateTest, LogFiniteDifference) {
  const Expr e = P("ln(1 + x1^2)");
  const Expr d = differentiate(e, "x1");
  EXPECT_EQ(d, P("2*x1/(1 + x1^2)"));
  for (double x : {-1.0, 0.3, 2.0}) {
    const double h = 1e-6;
    const double fd = (eval(e, {{"x1", x + h}}) - eval(e, {{"x1", x - h}})) / (2 * h);
    EXPECT_NEAR(eval(d, {{"x1", x}}), fd, 1e-8);
  }
}

GTEST_TEST(AsRationalTest, GeneratorRewrite) {
  GeneratorMap gens{{P("exp(x1)"), "x3"}};
  const auto r = as_rational(P("exp(x1)*x1"), gens);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(*r, RatFn(Poly::variable("x1") * Poly::variable("x3")));
  const auto r2 = as_rational(P("exp(2*x1)"), gens);
  ASSERT_TRUE(r2.has_value());
  EXPECT_EQ(*r2, RatFn(Poly::variable("x3").pow(2)));
  EXPECT_FALSE(as_rational(P("sin(x1*x2)"), gens).has_value());
  EXPECT_FALSE(as_rational(P("exp(x1/2)"), gens).has_value());
}

GTEST_TEST(CompiledExprTest, MatchesEval) {
  const Expr e = P("x1*exp(x2) - sin(x3)/(2 + cos(x4)) + ln(1 + x1^2)^2");
  CompiledExpr c(e, kVars);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> p{u(rng), u(rng), u(rng), u(rng)};
    std::map<std::string, double> m{{"x1", p[0]}, {"x2", p[1]}, {"x3", p[2]}, {"x4", p[3]}};
    EXPECT_NEAR(c(p), eval(e, m), 1e-12);
  }
}

}  // namespace
}  // namespace phlift
