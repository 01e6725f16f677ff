#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "example_systems.h"
#include "phlift/errors.h"
#include "phlift/ph/lifted_io.h"
#include "phlift/ph/system.h"

namespace phlift {
namespace {

using testing::design_example;
using testing::exponential_example;
using testing::log_example;
using testing::rolling_coin;

Poly V(const std::string& name) { return Poly::variable(name); }

bool same(const Poly& a, const Poly& b) { return (a - b).is_zero(); }

// Cyclic Jacobi rotations; independent of Eigen.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
  const size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    }
    if (off < 1e-30) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

GTEST_TEST(ValidateTest, Examples) {
  const auto r1 = validate(exponential_example());
  EXPECT_TRUE(r1.ok()) << r1.to_string();
  EXPECT_GT(r1.worst_eigenvalue, 0.0);
  EXPECT_LE(r1.worst_eigenvalue, std::exp(-5.0) * 1.01);
  const auto r2 = validate(rolling_coin());
  EXPECT_TRUE(r2.ok()) << r2.to_string();
  EXPECT_EQ(r2.worst_eigenvalue, 0.0);
}

GTEST_TEST(ValidateTest, DetectsFailures) {
  auto s = exponential_example();
  s.J[1][0] = Expr(1);
  const auto r = validate(s);
  EXPECT_FALSE(r.skew_symmetric);
  EXPECT_FALSE(r.ok());
  auto s2 = exponential_example();
  s2.R[0][0] = -s2.R[0][0];
  EXPECT_FALSE(validate(s2).psd);
  auto s3 = exponential_example();
  s3.R[0][1] = Expr::variable("x1");
  EXPECT_FALSE(validate(s3).symmetric);
  auto s4 = exponential_example();
  s4.hamiltonian = exp(Expr::variable("x1"));
  EXPECT_FALSE(validate(s4).rational_hamiltonian);
}

GTEST_TEST(ValidateTest, PythagoreanSkewIsRecognizedOnlyStructurally) {
  EXPECT_TRUE(is_identically_zero(parse("sin(x1)*x2 - x2*sin(x1)", {"x1", "x2"})));
  EXPECT_TRUE(is_identically_zero(parse("(x1 + 1)^2 - x1^2 - 2*x1 - 1", {"x1"})));
  EXPECT_FALSE(is_identically_zero(parse("x1 - x2", {"x1", "x2"})));
}

GTEST_TEST(LiftTest, ExponentialExample) {
  const auto sys = exponential_example();
  const auto L = lift(sys);
  ASSERT_EQ(L.dimension(), 4u);
  const Poly x3 = V("xbar3"), x4 = V("xbar4");
  EXPECT_TRUE(same(L.Lambda[0][0], x3.pow(2)));
  EXPECT_TRUE(same(L.Lambda[0][1], -x3));
  EXPECT_TRUE(same(L.Lambda[1][0], x4));
  EXPECT_TRUE(same(L.Lambda[1][1], x4.pow(2)));
  const std::vector<std::vector<Poly>> R{
      {x3, Poly(), x3.pow(2), x4},
      {Poly(), x4, -x3, x4.pow(2)},
      {x3.pow(2), -x3, Poly(), Poly()},
      {x4, x4.pow(2), Poly(), Poly()}};
  for (size_t i = 0; i < 4; ++i) {
    for (size_t j = 0; j < 4; ++j) EXPECT_TRUE(same(L.Rscript[i][j], R[i][j])) << i << j;
  }
  EXPECT_TRUE(same(L.Jscript[0][1], Poly::constant(1)));
  EXPECT_TRUE(same(L.Jscript[1][0], Poly::constant(-1)));
  EXPECT_TRUE(same(L.ports[0][0], Poly::constant(1)));
  EXPECT_TRUE(same(L.ports[0][1], Poly::constant(1)));
  EXPECT_TRUE(same(L.ports[0][2], x3));
  EXPECT_TRUE(same(L.ports[0][3], x4));
  EXPECT_EQ(L.hamiltonian, RatFn(Rational(1, 2) * (V("xbar1").pow(2) + V("xbar2").pow(2))));
  EXPECT_TRUE(check_structure(L).ok());

  const auto d = dissipation_identity(L, sys);
  EXPECT_TRUE(d.ok) << d.detail;
  EXPECT_TRUE(same(d.value, V("xbar1").pow(2) * x3 + V("xbar2").pow(2) * x4));
  EXPECT_TRUE(d.difference.is_zero());
  const auto y = output_identity(L, sys);
  ASSERT_EQ(y.size(), 1u);
  EXPECT_TRUE(y[0].ok);
  EXPECT_TRUE(same(y[0].value, V("xbar1") + V("xbar2")));
}

GTEST_TEST(LiftTest, DesignExample) {
  const auto L = lift(design_example());
  const Poly x3 = V("xbar3"), x4 = V("xbar4");
  EXPECT_TRUE(same(L.Lambda[0][0], x3.pow(2)));
  EXPECT_TRUE(L.Lambda[0][1].is_zero());
  EXPECT_TRUE(L.Lambda[1][0].is_zero());
  EXPECT_TRUE(same(L.Lambda[1][1], x4.pow(2)));
  EXPECT_TRUE(L.ports[0][0].is_zero());
  EXPECT_TRUE(same(L.ports[0][1], Poly::constant(1)));
  EXPECT_TRUE(L.ports[0][2].is_zero());
  EXPECT_TRUE(same(L.ports[0][3], x4));
}

GTEST_TEST(LiftTest, RollingCoin) {
  const auto sys = rolling_coin();
  const auto L = lift(sys);
  ASSERT_EQ(L.dimension(), 8u);
  const Poly x7 = V("xbar7"), x8 = V("xbar8");
  std::vector<std::vector<Poly>> J(8, std::vector<Poly>(8));
  J[0][5] = x7;
  J[1][5] = x8;
  J[2][5] = Poly::constant(1);
  J[3][4] = Poly::constant(1);
  J[4][3] = Poly::constant(-1);
  J[5][0] = -x7;
  J[5][1] = -x8;
  J[5][2] = Poly::constant(-1);
  for (size_t i = 0; i < 8; ++i) {
    for (size_t j = 0; j < 8; ++j) EXPECT_TRUE(same(L.Jscript[i][j], J[i][j])) << i << j;
  }
  for (size_t j = 0; j < 6; ++j) {
    EXPECT_TRUE(same(L.Lambda[0][j], j == 4 ? x8 : Poly())) << j;
    EXPECT_TRUE(same(L.Lambda[1][j], j == 4 ? -x7 : Poly())) << j;
  }
  const auto d = dissipation_identity(L, sys);
  EXPECT_TRUE(d.ok);
  EXPECT_TRUE(d.value.is_zero());
  const auto y = output_identity(L, sys);
  ASSERT_EQ(y.size(), 2u);
  EXPECT_TRUE(y[0].ok && y[1].ok);
  EXPECT_TRUE(same(y[0].value, Rational(1, 2) * V("xbar6")));
  EXPECT_TRUE(same(y[1].value, V("xbar5")));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> x(6);
    for (auto& v : x) v = u(rng);
    const auto spec = eigen_spectrum_at(L, L.immersion.evaluate(x));
    ASSERT_EQ(spec.size(), 8u);
    EXPECT_NEAR(spec[0], -1.0, 1e-10);
    for (int k = 1; k < 7; ++k) EXPECT_NEAR(spec[k], 0.0, 1e-10);
    EXPECT_NEAR(spec[7], 1.0, 1e-10);
  }
}

GTEST_TEST(LiftTest, SpectrumMatchesJacobiOracle) {
  const auto L = lift(exponential_example());
  const std::vector<std::vector<double>> printed{
      {1, 0, 1, 1}, {0, 1, -1, 1}, {1, -1, 0, 0}, {1, 1, 0, 0}};
  const auto want = jacobi_eigenvalues(printed);
  const auto got = eigen_spectrum_at(L, {0, 0, 1, 1});
  for (size_t i = 0; i < 4; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

GTEST_TEST(LiftTest, ZeroDissipationGivesZeroSpectrum) {
  auto s = testing::rolling_coin();
  s.J = testing::zeros(6);
  const auto L = lift_ph(s, Immersion(s.states));
  for (double e : eigen_spectrum_at(L, std::vector<double>(6, 0.3))) EXPECT_EQ(e, 0.0);
}

GTEST_TEST(LiftTest, LogExampleBecomesPolynomial) {
  const auto sys = log_example();
  const auto L = lift(sys);
  // ln(1 + x1^2) plus the reciprocals 1/(1 + x1^2) and 1/(1 + x2^2).
  ASSERT_EQ(L.dimension(), 5u);
  EXPECT_EQ(L.immersion.registry().entries.size(), 2u);
  EXPECT_TRUE(check_structure(L).ok());
  const auto d = dissipation_identity(L, sys);
  EXPECT_TRUE(d.ok) << d.detail;
  for (const auto& y : output_identity(L, sys)) EXPECT_TRUE(y.ok) << y.detail;
  const auto audit = numeric_identity_audit(L, sys, 1000, 3);
  EXPECT_EQ(audit.samples, 1000u);
  EXPECT_LE(audit.max_dissipation_error, 1e-10);
  EXPECT_LE(audit.max_output_error, 1e-10);
  EXPECT_LE(audit.max_hamiltonian_error, 1e-12);
}

GTEST_TEST(LiftTest, NumericAuditAllExamples) {
  for (const auto& sys : {exponential_example(), design_example(), rolling_coin()}) {
    const auto L = lift(sys);
    const auto a = numeric_identity_audit(L, sys, 1000, 11, 3);
    EXPECT_LE(a.max_dissipation_error, 1e-10);
    EXPECT_LE(a.max_output_error, 1e-10);
    EXPECT_LE(a.max_hamiltonian_error, 1e-14);
    const auto b = numeric_identity_audit(L, sys, 1000, 11, 1);
    EXPECT_EQ(a.max_dissipation_error, b.max_dissipation_error);
  }
}

GTEST_TEST(LiftTest, CorruptedRscriptFailsIdentity) {
  const auto sys = exponential_example();
  auto L = lift(sys);
  L.Rscript[0][0] = -L.Rscript[0][0];
  const auto d = dissipation_identity(L, sys);
  EXPECT_FALSE(d.ok);
  EXPECT_TRUE(same(d.difference, -2 * V("xbar1").pow(2) * V("xbar3")));
}

GTEST_TEST(LiftTest, MissingCoordinateIsRewriteFailure) {
  const auto sys = exponential_example();
  EXPECT_THROW(lift_ph(sys, Immersion(sys.states)), RewriteFailure);
}

GTEST_TEST(LiftedIoTest, RoundTrip) {
  for (const auto& sys : {exponential_example(), rolling_coin(), log_example()}) {
    const auto L = lift(sys);
    const auto file = to_lifted_file(L, "manifest.txt");
    const std::string text = lifted_to_string(file);
    const auto back = lifted_from_string(text);
    EXPECT_EQ(lifted_to_string(back), text);
    for (size_t i = 0; i < L.dimension(); ++i) {
      EXPECT_EQ(back.definitions[i], file.definitions[i]);
      for (size_t j = 0; j < L.dimension(); ++j) {
        EXPECT_TRUE(same(back.Rscript[i][j], L.Rscript[i][j]));
        EXPECT_TRUE(same(back.Jscript[i][j], L.Jscript[i][j]));
      }
    }
    EXPECT_EQ(back.hamiltonian, L.hamiltonian);
  }
}

}  // namespace
}  // namespace phlift
