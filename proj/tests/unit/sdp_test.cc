#include <gtest/gtest.h>

#include "ap_oracle.h"
#include "phlift/errors.h"
#include "phlift/sos/sdp.h"

namespace phlift {
namespace {

SdpProblem single(size_t n, std::vector<SdpProblem::Row> rows) {
  SdpProblem p;
  p.block_sizes = {n};
  p.rows = std::move(rows);
  return p;
}

GTEST_TEST(Sdp, FixedCornerIsFeasible) {
  const auto p = single(2, {{{{0, 0, 0, 1.0}}, {}, 1.0}});
  const auto s = solve_sdp(p);
  ASSERT_TRUE(s.feasible()) << s.detail;
  EXPECT_NEAR(s.blocks[0](0, 0), 1.0, 1e-8);
  EXPECT_GE(s.min_eigenvalue, -1e-8);
  EXPECT_LE(s.residual, 1e-8);
}

GTEST_TEST(Sdp, NegativeDiagonalIsInfeasible) {
  const auto p = single(2, {{{{0, 0, 0, 1.0}}, {}, -1.0}});
  const auto s = solve_sdp(p);
  ASSERT_FALSE(s.feasible());
  EXPECT_GT(s.certificate.dual_value, 0.0);
  EXPECT_LE(s.certificate.cone_violation, 1e-8);
}

GTEST_TEST(Sdp, InconsistentFreeRowsAreInfeasible) {
  SdpProblem p;
  p.block_sizes = {1};
  p.num_free = 1;
  p.rows = {{{}, {{0, 1.0}}, 1.0}, {{}, {{0, 2.0}}, 1.0}, {{{0, 0, 0, 1.0}}, {}, 1.0}};
  const auto s = solve_sdp(p);
  ASSERT_FALSE(s.feasible());
  EXPECT_GT(s.certificate.dual_value, 0.0);
  EXPECT_LE(s.certificate.free_residual, 1e-12);
}

GTEST_TEST(Sdp, FreeVariablesAreRecovered) {
  // X00 + u0 = 3, u0 - u1 = 1, u1 = 1, X01 + u1 = 0 (value 2 counts X01 + X10).
  SdpProblem p;
  p.block_sizes = {2};
  p.num_free = 2;
  p.rows = {{{{0, 0, 0, 1.0}}, {{0, 1.0}}, 3.0},
            {{}, {{0, 1.0}, {1, -1.0}}, 1.0},
            {{}, {{1, 1.0}}, 1.0},
            {{{0, 0, 1, 2.0}}, {{1, 1.0}}, 0.0}};
  const auto s = solve_sdp(p);
  ASSERT_TRUE(s.feasible()) << s.detail;
  EXPECT_NEAR(s.free[0], 2.0, 1e-9);
  EXPECT_NEAR(s.free[1], 1.0, 1e-9);
  EXPECT_NEAR(s.blocks[0](0, 0), 1.0, 1e-8);
  EXPECT_NEAR(s.blocks[0](0, 1), -0.5, 1e-8);
  EXPECT_GE(s.min_eigenvalue, -1e-8);
}

GTEST_TEST(Sdp, RedundantFreeColumnsAreHandled) {
  // u0 and u1 only ever appear as u0 + u1.
  SdpProblem p;
  p.block_sizes = {1};
  p.num_free = 2;
  p.rows = {{{{0, 0, 0, 1.0}}, {{0, 1.0}, {1, 1.0}}, 2.0}, {{}, {{0, 1.0}, {1, 1.0}}, 1.5}};
  const auto s = solve_sdp(p);
  ASSERT_TRUE(s.feasible()) << s.detail;
  EXPECT_NEAR(s.free[0] + s.free[1], 1.5, 1e-9);
  EXPECT_NEAR(s.blocks[0](0, 0), 0.5, 1e-8);
}

GTEST_TEST(Sdp, BoundaryFeasibleWithinTolerance) {
  // X = [[0, *], [*, 1]] forces a zero eigenvalue.
  const auto p = single(2, {{{{0, 0, 0, 1.0}}, {}, 0.0}, {{{0, 1, 1, 1.0}}, {}, 1.0}});
  const auto s = solve_sdp(p);
  ASSERT_TRUE(s.feasible()) << s.detail;
  EXPECT_GE(s.min_eigenvalue, -1e-7);
  EXPECT_LE(s.residual, 1e-8);
}

GTEST_TEST(Sdp, RejectsMalformedProblem) {
  auto p = single(2, {{{{0, 1, 0, 1.0}}, {}, 0.0}});
  EXPECT_THROW(solve_sdp(p), std::invalid_argument);
}

GTEST_TEST(Sdp, MaxIterationsWhenCapped) {
  const auto p = testing::random_sdp_instance(0);
  SdpOptions o;
  o.max_iterations = 2;
  EXPECT_THROW(solve_sdp(p, o), MaxIterations);
}

GTEST_TEST(Sdp, AgreesWithAlternatingProjections) {
  int feasible = 0;
  for (unsigned seed = 0; seed < 50; ++seed) {
    const auto p = testing::random_sdp_instance(seed);
    const double gap = testing::alternating_projection_gap(p);
    const bool oracle = gap < 1e-6;
    const auto s = solve_sdp(p);
    EXPECT_EQ(s.feasible(), oracle) << "seed " << seed << " gap " << gap;
    if (s.feasible()) {
      ++feasible;
      EXPECT_GE(s.min_eigenvalue, -1e-8) << seed;
      EXPECT_LE(s.residual, 1e-8) << seed;
    } else {
      EXPECT_GT(s.certificate.dual_value, 0.0) << seed;
      EXPECT_LE(s.certificate.cone_violation, 1e-7) << seed;
    }
  }
  EXPECT_EQ(feasible, 25);
}

}  // namespace
}  // namespace phlift
