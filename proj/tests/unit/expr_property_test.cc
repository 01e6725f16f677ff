#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "phlift/expr/expr.h"
#include "phlift/expr/parser.h"

namespace phlift {
namespace {

const std::vector<std::string> kVars{"x1", "x2", "x3"};

// Random expressions whose evaluation is safe on [-2, 2]^3: every quotient
// and ln argument is bounded away from zero.
class ExprGen {
 public:
  explicit ExprGen(uint64_t seed) : rng_(seed) {}

  Expr make(int depth) {
    const int pick = depth <= 0 ? int_in(0, 1) : int_in(0, 9);
    switch (pick) {
      case 0:
        return Expr(Rational(int_in(-4, 4), int_in(1, 3)));
      case 1:
        return Expr::variable(kVars[int_in(0, 2)]);
      case 2:
      case 3:
        return make(depth - 1) + make(depth - 1);
      case 4:
        return make(depth - 1) - make(depth - 1);
      case 5:
        return make(depth - 1) * make(depth - 1);
      case 6:
        return Expr::power(make(depth - 1), int_in(0, 3));
      case 7: {
        const Expr d = make(depth - 1);
        return make(depth - 1) / (Expr(2) + d * d);
      }
      case 8: {
        const Expr arg = make(depth - 1) * Expr(Rational(1, 3));
        const int f = int_in(0, 2);
        if (f == 0) return exp(arg);
        if (f == 1) return sin(arg);
        return cos(arg);
      }
      default: {
        const Expr u = make(depth - 1);
        return ln(Expr(1) + u * u);
      }
    }
  }

  int int_in(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  double real_in(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

 private:
  std::mt19937_64 rng_;
};

GTEST_TEST(ExprPropertyTest, ParsePrintRoundTrip) {
  ExprGen gen(11);
  for (int i = 0; i < 500; ++i) {
    const Expr e = gen.make(4);
    const std::string s = e.to_string();
    EXPECT_EQ(parse(s, kVars), e) << s;
  }
}

GTEST_TEST(ExprPropertyTest, ExampleCorpusRoundTrip) {
  const std::vector<std::string> vars{"x1", "x2", "x3", "x4", "x5", "x6",
                                      "xbar1", "xbar2", "xbar3", "xbar4",
                                      "xbar5", "xbar6", "xbar7", "xbar8", "r", "u1", "u2"};
  const std::vector<std::string> corpus{
      "(1/2)*(x1^2 + x2^2)",
      "x2 - x1*exp(x1)",
      "-x1 - x2*exp(x2)",
      "x1^2*exp(x1) + x2^2*exp(x2)",
      "xbar1^2*xbar3 + xbar2^2*xbar4",
      "-(xbar3^2)",
      "xbar4^2",
      "1/2*x6^2 + 1/2*x5^2",
      "cos(x4)*x5",
      "-sin(x4)*x5",
      "(1/2)*x1^2 + (1/2)*x2^2 - ln(1 + x1^2)",
      "x1/(1 + x2^2)",
      "x3 - (1 + x1 + 1/2*x1^2 + 1/6*x1^3)",
      "1/(1 + x1^2)^2",
      "2*(x1/(1 + x2))",
      "-3*x1^2*x2 - x3/x1 + 7/3",
  };
  for (const auto& text : corpus) {
    const Expr e = parse(text, vars);
    EXPECT_EQ(parse(e.to_string(), vars), e) << text << " -> " << e.to_string();
  }
}

GTEST_TEST(ExprPropertyTest, DerivativeMatchesFiniteDifference) {
  ExprGen gen(23);
  for (int i = 0; i < 60; ++i) {
    const Expr e = gen.make(3);
    for (const auto& v : kVars) {
      const Expr d = differentiate(e, v);
      for (int k = 0; k < 100; ++k) {
        std::map<std::string, double> p;
        for (const auto& w : kVars) p[w] = gen.real_in(-2, 2);
        const double h = 1e-6;
        auto pp = p, pm = p;
        pp[v] += h;
        pm[v] -= h;
        const double fd = (eval(e, pp) - eval(e, pm)) / (2 * h);
        ASSERT_NEAR(eval(d, p), fd, 1e-5 * std::max(1.0, std::abs(fd)))
            << e.to_string() << " d/d" << v;
      }
    }
  }
}

Poly random_poly(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coef(-5, 5), deg(0, 3), count(0, 5);
  Poly p(std::vector<std::string>{"a", "b", "c"});
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    Exponents e{static_cast<uint32_t>(deg(rng)), static_cast<uint32_t>(deg(rng)),
                static_cast<uint32_t>(deg(rng))};
    p.add_term(e, Rational(coef(rng), 1 + std::abs(coef(rng))));
  }
  return p;
}

GTEST_TEST(PolyPropertyTest, Distributivity) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Poly a = random_poly(rng), b = random_poly(rng), c = random_poly(rng);
    EXPECT_EQ((a + b) * c, a * c + b * c);
    EXPECT_EQ(a * b, b * a);
    EXPECT_TRUE((a - a).is_zero());
  }
}

GTEST_TEST(PolyPropertyTest, ExactDivisionRecoversFactor) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const Poly a = random_poly(rng), b = random_poly(rng);
    if (b.is_zero()) continue;
    const auto q = (a * b).divide_exact(b);
    ASSERT_TRUE(q.has_value());
    EXPECT_EQ(*q, a);
  }
}

GTEST_TEST(AsRationalPropertyTest, ConsistentExtendedPoint) {
  const std::vector<std::string> vars{"x1", "x2"};
  const Expr e = parse(
      "x1*exp(x1) - exp(3*x1)*cos(x2)^2 + sin(x2)/(2 + cos(x2)) + exp(2*x2 + 2*x1)",
      vars);
  GeneratorMap gens{{parse("exp(x1)", vars), "x3"},
                    {parse("sin(x2)", vars), "x4"},
                    {parse("cos(x2)", vars), "x5"},
                    {parse("exp(x1 + x2)", vars), "x6"}};
  const auto r = as_rational(e, gens);
  ASSERT_TRUE(r.has_value());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 100; ++i) {
    const double x1 = u(rng), x2 = u(rng);
    const std::map<std::string, double> base{{"x1", x1}, {"x2", x2}};
    const std::map<std::string, double> ext{
        {"x1", x1}, {"x2", x2}, {"x3", std::exp(x1)}, {"x4", std::sin(x2)},
        {"x5", std::cos(x2)}, {"x6", std::exp(x1 + x2)}};
    const double want = eval(e, base);
    EXPECT_NEAR(r->evaluate(ext), want, 1e-10 * std::max(1.0, std::abs(want)));
  }
}

GTEST_TEST(AsRationalPropertyTest, PowerOfGenerator) {
  const std::vector<std::string> vars{"x1"};
  GeneratorMap gens{{parse("exp(x1)", vars), "x3"}};
  const auto r = as_rational(parse("exp(2*x1)", vars), gens);
  ASSERT_TRUE(r.has_value());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 5; ++i) {
    const double x = u(rng);
    const double want = std::exp(2 * x);
    EXPECT_NEAR(r->evaluate({{"x1", x}, {"x3", std::exp(x)}}), want, 1e-10 * want);
  }
}

}  // namespace
}  // namespace phlift
