#include <gtest/gtest.h>

#include "assent/milp/lp.hpp"
#include "assent/oracles/lp_vertex.hpp"

using namespace assent;

TEST(SolveLp, OneDimensionalMaximum) {
  auto lp = LinearProgram::with_vars(1, 0.0, kInf);
  lp.c = {-1.0};
  lp.add_row({{0, 1.0}}, RowSense::less_equal, 5.0);
  auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LPStatus::optimal);
  EXPECT_NEAR(r.x[0], 5.0, 1e-9);
  EXPECT_NEAR(r.objective, -5.0, 1e-9);
}

TEST(SolveLp, ContradictionIsInfeasible) {
  auto lp = LinearProgram::with_vars(2, 0.0, kInf);
  lp.add_row({{0, 1.0}, {1, 1.0}}, RowSense::less_equal, 1.0);
  lp.add_row({{0, 1.0}}, RowSense::greater_equal, 2.0);
  EXPECT_EQ(solve_lp(lp).status, LPStatus::infeasible);
}

TEST(SolveLp, UnboundedRay) {
  auto lp = LinearProgram::with_vars(2, 0.0, kInf);
  lp.c = {-1.0, 0.0};
  lp.add_row({{0, 1.0}, {1, -1.0}}, RowSense::less_equal, 1.0);
  EXPECT_EQ(solve_lp(lp).status, LPStatus::unbounded);
}

TEST(SolveLp, FreeVariablesAndEquality) {
  auto lp = LinearProgram::with_vars(2, -kInf, kInf);
  lp.c = {1.0, 1.0};
  lp.add_row({{0, 1.0}, {1, -1.0}}, RowSense::equal, 2.0);
  lp.add_row({{1, 1.0}}, RowSense::greater_equal, -3.0);
  auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LPStatus::optimal);
  EXPECT_NEAR(r.x[0], -1.0, 1e-9);
  EXPECT_NEAR(r.x[1], -3.0, 1e-9);
}

TEST(SolveLp, FixedVariableAndNoRows) {
  auto lp = LinearProgram::with_vars(2, -1.0, 4.0);
  lp.lower[1] = lp.upper[1] = 2.5;
  lp.c = {3.0, -1.0};
  auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LPStatus::optimal);
  EXPECT_DOUBLE_EQ(r.x[0], -1.0);
  EXPECT_DOUBLE_EQ(r.x[1], 2.5);
}

TEST(SolveLp, DegenerateVertexTerminates) {
  // Many redundant constraints through the origin.
  auto lp = LinearProgram::with_vars(3, 0.0, kInf);
  lp.c = {-1.0, -1.0, -1.0};
  for (int k = 1; k <= 6; ++k)
    lp.add_row({{0, double(k)}, {1, -1.0}, {2, double(k % 3) - 1.0}}, RowSense::less_equal, 0.0);
  lp.add_row({{0, 1.0}, {1, 1.0}, {2, 1.0}}, RowSense::less_equal, 3.0);
  auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LPStatus::optimal);
  EXPECT_LE(lp.max_violation(r.x), 1e-7);
  auto o = oracles::enumerate_vertices(oracles::boxed(lp, 10.0));
  EXPECT_NEAR(r.objective, o.objective, 1e-7);
}

TEST(SolveLp, RejectsInconsistentBounds) {
  auto lp = LinearProgram::with_vars(1, 1.0, 0.0);
  EXPECT_THROW(solve_lp(lp), std::invalid_argument);
}

TEST(SolveLp, MatchesVertexEnumerationOnRandomBoundedPrograms) {
  Engine rng(11);
  int optimal = 0, infeasible = 0;
  for (int t = 0; t < 200; ++t) {
    auto lp = oracles::random_bounded_lp(rng);
    auto r = solve_lp(lp);
    auto o = oracles::enumerate_vertices(lp);
    ASSERT_FALSE(r.numeric_warning) << "trial " << t;
    ASSERT_EQ(r.status == LPStatus::optimal, o.feasible) << "trial " << t;
    if (o.feasible) {
      ++optimal;
      EXPECT_NEAR(r.objective, o.objective, 1e-7) << "trial " << t;
      EXPECT_LE(lp.max_violation(r.x), 1e-7);
    } else {
      ++infeasible;
    }
  }
  EXPECT_GT(optimal, 20);
  EXPECT_GT(infeasible, 20);
}

TEST(SolveLp, UnboundedVerdictMatchesRecessionCone) {
  Engine rng(12);
  int unbounded = 0;
  for (int t = 0; t < 200; ++t) {
    auto lp = oracles::random_feasible_open_lp(rng);
    auto r = solve_lp(lp);
    const bool expect_unbounded = oracles::is_unbounded_given_feasible(lp);
    ASSERT_NE(r.status, LPStatus::infeasible) << "trial " << t;
    ASSERT_EQ(r.status == LPStatus::unbounded, expect_unbounded) << "trial " << t;
    if (expect_unbounded) {
      ++unbounded;
    } else {
      auto o = oracles::enumerate_vertices(oracles::boxed(lp, 1e4));
      EXPECT_NEAR(r.objective, o.objective, 1e-6 * std::max(1.0, std::abs(o.objective)));
    }
  }
  EXPECT_GT(unbounded, 20);
}
