#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "design_fixture.h"
#include "phlift/errors.h"
#include "phlift/sim/simulate.h"

namespace phlift {
namespace {

using testing::design_example_spec;
using testing::fixed_term_template;

Poly xbar(const DesignSpec& s, size_t k) { return Poly::variable(s.lifted.vars[k], s.lifted.vars); }

GTEST_TEST(DesignSpec, DefaultsForExponentialExample) {
  const auto spec = design_example_spec(5.0);
  ASSERT_EQ(spec.lifted.dimension(), 4u);
  EXPECT_EQ(spec.lifted.immersion.coordinate_expr(2), exp(Expr::variable("x1")));
  EXPECT_EQ(spec.lifted.immersion.coordinate_expr(3), exp(Expr::variable("x2")));
  EXPECT_NEAR(spec.setpoint[3], std::exp(4.0), 1e-12);
  // x1 is the only unactuated base coordinate.
  ASSERT_EQ(spec.annihilator.size(), 1u);
  EXPECT_EQ(spec.annihilator[0][0], Poly::constant(Rational(1), spec.lifted.vars));
  EXPECT_NO_THROW(check_design_spec(spec));
}

GTEST_TEST(DesignSpec, Rejections) {
  auto spec = design_example_spec(5.0);
  auto bad = spec;
  bad.annihilator[0][1] = Poly::constant(Rational(1), spec.lifted.vars);  // row e1 + e2 meets the port
  EXPECT_THROW(check_design_spec(bad), Error);
  bad = spec;
  bad.setpoint[3] += 1.0;
  EXPECT_THROW(check_design_spec(bad), Error);
  bad = spec;
  bad.Jd.assign(4, std::vector<Rational>(4));
  bad.Jd[0][1] = Rational(1);
  EXPECT_THROW(check_design_spec(bad), Error);
  bad = spec;
  bad.r = Rational(0);
  EXPECT_THROW(check_design_spec(bad), Error);
}

GTEST_TEST(Matching, FixedCoefficientIsOneOverTwoR) {
  // Row x1: -xbar1 xbar3 = -r d/dxbar1 (c xbar1^2 xbar3) forces c = 1/(2r).
  for (const Rational r : {Rational(1, 2), Rational(1), Rational(2), Rational(5), Rational(10)}) {
    auto spec = design_example_spec(5.0);
    spec.r = r;
    const auto m = matching_constraints(spec, fixed_term_template(spec, 4));
    const auto c = m.fixed_coefficient(0);
    ASSERT_TRUE(c.has_value()) << r;
    EXPECT_EQ(*c, Rational(1) / (Rational(2) * r));
  }
}

GTEST_TEST(Matching, ZeroAnnihilatorGivesNoEquations) {
  auto spec = design_example_spec(5.0);
  spec.annihilator = {std::vector<Poly>(4, Poly(spec.lifted.vars))};
  const auto m = matching_constraints(spec, fixed_term_template(spec, 2));
  EXPECT_TRUE(m.equations.empty());
  for (const auto& p : m.pinned) EXPECT_FALSE(p.has_value());
}

GTEST_TEST(Matching, LinearTemplateIsInconsistent) {
  auto spec = design_example_spec(5.0, 1);
  EXPECT_THROW(matching_constraints(spec, default_template(spec)), InconsistentMatching);
}

GTEST_TEST(Matching, FamilyMembersSatisfyMatchingPointwise) {
  const auto spec = design_example_spec(5.0);
  const auto fam = matched_family(spec, default_template(spec));
  ASSERT_FALSE(fam.basis.empty());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(-1.0, 1.0), x(-1.0, 1.0);
  const Model model = make_model(spec.lifted);
  for (int trial = 0; trial < 20; ++trial) {
    PolyD hd = fam.particular;
    for (const auto& b : fam.basis) hd += t(rng) * b;
    const Controller ctl(spec, hd.with_variables(fam.vars));
    const std::vector<double> base{x(rng), 4.0 + x(rng)};
    const auto xb = spec.lifted.immersion.evaluate(base);
    const auto u = ctl(xb);
    std::vector<double> dx(4);
    model.rhs(xb, u, dx);
    // Annihilated row: closed loop equals -r dHd/dz1.
    std::vector<double> zv(4);
    for (size_t k = 0; k < 4; ++k) zv[k] = xb[k] - spec.setpoint[k];
    const double want = -hd.derivative(fam.vars[0]).with_variables(fam.vars).evaluate(std::span<const double>(zv));
    EXPECT_NEAR(dx[0], want, 1e-8 * (1.0 + std::abs(want)));
  }
}

GTEST_TEST(Program, Shape) {
  const auto spec = design_example_spec(1.5);
  const auto dp = build_sos_program(spec, matched_family(spec, default_template(spec)));
  EXPECT_EQ(dp.program.equalities.size(), 5u);
  ASSERT_EQ(dp.program.sos.size(), 2u);
  EXPECT_EQ(dp.surrogates.size(), 2u);
  EXPECT_TRUE(dp.program.warnings.empty());
  // mu0 = 1 - |z|^2 / radius^2.
  EXPECT_DOUBLE_EQ(dp.mu0.constant_term(), 1.0);
  EXPECT_NEAR(dp.mu0.coefficient(Exponents{2, 0, 0, 0}), -1.0 / 2.25, 1e-15);
}

GTEST_TEST(Program, SurrogateIsCubicTaylor) {
  const auto spec = design_example_spec(1.5);
  const auto dp = build_sos_program(spec, matched_family(spec, default_template(spec)));
  // mu for xbar4 = e^{x2} around x2 = 4, at z2 = 0.3 and z4 = 0.
  const std::vector<double> zv{0.0, 0.3, 0.0, 0.0};
  const double e4 = std::exp(4.0);
  const double taylor = e4 * (0.3 + 0.09 / 2 + 0.027 / 6);
  EXPECT_NEAR(dp.surrogates[1].evaluate(std::span<const double>(zv)), -taylor, 1e-9);
}

GTEST_TEST(Program, ZeroDeltaWarns) {
  auto spec = design_example_spec(1.5);
  spec.delta = 0.0;
  const auto dp = build_sos_program(spec, matched_family(spec, default_template(spec)));
  ASSERT_EQ(dp.program.warnings.size(), 1u);
}

GTEST_TEST(Controller, RationalFormDenominator) {
  const auto spec = design_example_spec(5.0);
  const auto fam = matched_family(spec, default_template(spec));
  const Controller ctl(spec, fam.particular.with_variables(fam.vars));
  const auto rf = ctl.rational_form();
  ASSERT_TRUE(rf.has_value());
  const Poly x4 = xbar(spec, 3);
  EXPECT_EQ(rf->second, Poly::constant(Rational(1), spec.lifted.vars) + x4 * x4);
}

GTEST_TEST(Controller, VanishesWhenDesiredSystemIsOpenLoop) {
  PHSystem s;
  s.states = {"x1", "x2"};
  s.hamiltonian = parse("(1/2)*(x1^2 + x2^2)", s.states);
  s.J = testing::zeros(2);
  s.R = {{Expr(1), Expr(0)}, {Expr(0), Expr(1)}};
  s.g = {{Expr(0), Expr(1)}};
  s.domain = DomainBox::uniform(2);
  const auto spec = make_design_spec(lift(s), {0.0, 0.0});
  ASSERT_EQ(spec.lifted.dimension(), 2u);
  const std::vector<std::string> z{"z1", "z2"};
  const PolyD hd = 0.5 * PolyD::variable("z1", z) * PolyD::variable("z1", z) +
                   0.5 * PolyD::variable("z2", z) * PolyD::variable("z2", z);
  const Controller ctl(spec, hd);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> x(-3.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    const std::vector<double> p{x(rng), x(rng)};
    EXPECT_NEAR(ctl(p)[0], 0.0, 1e-12);
  }
}

GTEST_TEST(Controller, SingularPortGram) {
  PHSystem s;
  s.states = {"x1"};
  s.hamiltonian = parse("(1/2)*x1^2", s.states);
  s.J = testing::zeros(1);
  s.R = {{Expr(1)}};
  s.g = {{parse("x1", s.states)}};
  s.domain = DomainBox::uniform(1);
  auto spec = make_design_spec(lift(s), {0.0});
  const PolyD hd = 0.5 * PolyD::variable("z1", {"z1"}) * PolyD::variable("z1", {"z1"});
  const Controller ctl(spec, hd);
  EXPECT_THROW(ctl(std::vector<double>{0.0}), PortGramSingular);
  EXPECT_NO_THROW(ctl(std::vector<double>{1.0}));
}

class DesignPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = new DesignSpec(design_example_spec(1.5, 2));
    result_ = new DesignResult(design(*spec_, fixed_term_template(*spec_, 2)));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete spec_;
  }
  static DesignSpec* spec_;
  static DesignResult* result_;
};

DesignSpec* DesignPipeline::spec_ = nullptr;
DesignResult* DesignPipeline::result_ = nullptr;

TEST_F(DesignPipeline, CertificateChecks) {
  const auto& r = *result_;
  ASSERT_TRUE(r.feasible) << r.solution.detail;
  EXPECT_LE(std::abs(r.hd_at_setpoint), 1e-9);
  EXPECT_LE(r.gradient_norm_at_setpoint, 1e-9);
  EXPECT_LE(r.matching_residual, 1e-9);
  for (const auto& g : r.gram_checks) {
    EXPECT_GE(g.min_eigenvalue, -1e-7);
    EXPECT_LE(g.coefficient_error, 1e-7);
  }
  EXPECT_GE(r.hessian_min_eigenvalue, spec_->delta / 2);
  EXPECT_EQ(r.matching.fixed_coefficient(0), Rational(1, 2));
}

TEST_F(DesignPipeline, HdOverXbarAgreesWithShifted) {
  const auto& r = *result_;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> zv(4), xv(4);
    for (size_t i = 0; i < 4; ++i) {
      zv[i] = d(rng);
      xv[i] = zv[i] + spec_->setpoint[i];
    }
    const double a = r.hd_shifted.evaluate(std::span<const double>(zv));
    const double b = r.hd.evaluate(std::span<const double>(xv));
    EXPECT_NEAR(a, b, 1e-8 * (1.0 + std::abs(a)));
  }
}

TEST_F(DesignPipeline, SetpointIsEquilibrium) {
  ASSERT_TRUE(result_->feasible);
  const Controller ctl(*spec_, result_->hd_shifted);
  const Model model = make_model(spec_->lifted);
  std::vector<double> dx(4);
  model.rhs(spec_->setpoint, ctl(spec_->setpoint), dx);
  for (double v : dx) EXPECT_LE(std::abs(v), 1e-8);

  ClosedLoopOptions opt;
  opt.t_end = 1.0;
  const auto rep = closed_loop_validate(*spec_, ctl, result_->hd_shifted, {spec_->setpoint}, opt);
  EXPECT_LE(rep.runs[0].final_distance, 1e-8);
}

TEST_F(DesignPipeline, OffManifoldStartIsFlagged) {
  ASSERT_TRUE(result_->feasible);
  const Controller ctl(*spec_, result_->hd_shifted);
  auto x0 = spec_->setpoint;
  x0[2] += 0.1;
  ClosedLoopOptions opt;
  opt.t_end = 0.1;
  const auto rep = closed_loop_validate(*spec_, ctl, result_->hd_shifted, {x0}, opt);
  EXPECT_GE(rep.runs[0].manifold_drift, 0.1 - 1e-12);
}

TEST_F(DesignPipeline, ClosedLoopConvergesMonotonically) {
  ASSERT_TRUE(result_->feasible);
  const Controller ctl(*spec_, result_->hd_shifted);
  const auto x0 = manifold_initial_states(*spec_, testing::closed_loop_base_points());
  const auto rep = closed_loop_validate(*spec_, ctl, result_->hd_shifted, x0);
  for (const auto& run : rep.runs) EXPECT_EQ(run.failure, "");
  EXPECT_TRUE(rep.converged(1e-2));
  EXPECT_TRUE(rep.monotone());
}

GTEST_TEST(Design, GlobalBallIsInfeasible) {
  auto spec = design_example_spec(1e9, 2);
  const auto r = design(spec, fixed_term_template(spec, 2));
  EXPECT_FALSE(r.feasible);
}

GTEST_TEST(Design, ReportIsDeterministic) {
  auto spec = design_example_spec(1.5, 2);
  const auto a = design(spec, fixed_term_template(spec, 2));
  const auto b = design(spec, fixed_term_template(spec, 2));
  std::ostringstream sa, sb;
  write_design_report(sa, spec, a, nullptr);
  write_design_report(sb, spec, b, nullptr);
  EXPECT_EQ(sa.str(), sb.str());
  std::ostringstream csv;
  write_hd_csv(csv, a);
  EXPECT_EQ(csv.str().rfind("monomial,coefficient\n", 0), 0u);
}

}  // namespace
}  // namespace phlift
