#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "flexdc/milp.hpp"
#include "flexdc/solver.hpp"
#include "test_support.hpp"

namespace flexdc {
namespace {

using testing::brute_force_milp;
using testing::lp_dual_bound;
using testing::random_milp;

TEST(LinExpr, MergesDuplicateTermsAndMovesConstants) {
  MilpModel m;
  const VarRef x = m.add_variable("x", 0, 10);
  const VarRef y = m.add_variable("y", 0, 10);
  const int row = m.add_constraint(2.0 * x + y - x + 3.0, Sense::LessEqual, LinExpr(y) + 7.0, "r");
  const auto& c = m.constraints()[static_cast<std::size_t>(row)];
  ASSERT_EQ(c.terms.size(), 1u);
  EXPECT_EQ(c.terms[0].first, x);
  EXPECT_DOUBLE_EQ(c.terms[0].second, 1.0);
  EXPECT_DOUBLE_EQ(c.rhs, 4.0);
}

TEST(MilpModel, RejectsForeignReferences) {
  MilpModel a, b;
  const VarRef x = a.add_variable("x", 0, 1);
  b.add_variable("y", 0, 1);
  EXPECT_THROW(b.add_constraint(LinExpr(x), Sense::LessEqual, 1.0, "bad"), std::invalid_argument);
  EXPECT_THROW(a.add_variable("z", 2, 1), std::invalid_argument);
}

TEST(SolveLp, HandSolvable) {
  MilpModel m;
  const VarRef x = m.add_variable("x", 0, 1);
  const VarRef y = m.add_variable("y", 0, 1);
  m.add_constraint(x + y, Sense::LessEqual, 1.0, "cap");
  m.set_objective(-1.0 * x - y);
  const auto r = solve_lp(m);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.objective, -1.0, 1e-9);
}

TEST(SolveLp, EmptyFeasibleSetIsInfeasible) {
  MilpModel m;
  const VarRef x = m.add_variable("x", -kInf, kInf);
  m.add_constraint(x, Sense::GreaterEqual, 3.0, "lo");
  m.add_constraint(x, Sense::LessEqual, 2.0, "up");
  m.set_objective(x);
  EXPECT_EQ(solve_lp(m).status, SolveStatus::Infeasible);
}

TEST(SolveLp, UnboundedRay) {
  MilpModel m;
  const VarRef x = m.add_variable("x", 0, kInf);
  m.set_objective(-1.0 * x);
  EXPECT_EQ(solve_lp(m).status, SolveStatus::Unbounded);
}

TEST(SolveLp, FreeVariablesAndEqualities) {
  // min x + 2y, x - y = 1, x + y >= 3, x,y free -> x = 2, y = 1.
  MilpModel m;
  const VarRef x = m.add_variable("x", -kInf, kInf);
  const VarRef y = m.add_variable("y", -kInf, kInf);
  m.add_constraint(x - y, Sense::Equal, 1.0, "e");
  m.add_constraint(x + y, Sense::GreaterEqual, 3.0, "g");
  m.set_objective(x + 2.0 * y);
  const auto r = solve_lp(m);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.value(x), 2.0, 1e-9);
  EXPECT_NEAR(r.value(y), 1.0, 1e-9);
  EXPECT_NEAR(r.objective, 4.0, 1e-9);
}

TEST(SolveLp, StrongAndWeakDualityOnRandomModels) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const MilpModel m = random_milp(rng, {.continuous = 8, .binaries = 3, .rows = 9});
    const auto r = solve_lp(m);
    ASSERT_EQ(r.status, SolveStatus::Optimal) << trial;
    EXPECT_LE(r.stats.max_row_violation, 1e-7) << trial;
    const double dual = lp_dual_bound(m, r);
    EXPECT_GE(r.objective, dual - 1e-6) << trial;
    EXPECT_NEAR(r.objective, dual, 1e-6 * std::max(1.0, std::abs(r.objective))) << trial;
  }
}

TEST(SolveLp, ObjectiveScalingKeepsArgmin) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    MilpModel m = random_milp(rng, {.continuous = 6, .binaries = 2, .rows = 6});
    const auto base = solve_lp(m);
    MilpModel scaled = m;
    LinExpr obj;
    for (const auto& [v, c] : m.objective()) obj.add(v, 37.5 * c);
    scaled.set_objective(obj);
    const auto r = solve_lp(scaled);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    EXPECT_NEAR(r.objective, 37.5 * base.objective, 1e-7 * std::max(1.0, std::abs(r.objective)));
    // The scaled optimum evaluated under the original objective is optimal there too.
    EXPECT_NEAR(m.evaluate([&] {
      LinExpr e;
      for (const auto& [v, c] : m.objective()) e.add(v, c);
      return e;
    }(), r.values), base.objective, 1e-7 * std::max(1.0, std::abs(base.objective)));
  }
}

TEST(SolveMilp, RoundingForced) {
  MilpModel m;
  const VarRef b = m.add_binary("b");
  const VarRef x = m.add_variable("x", 0, 1.5);
  // x integer in [0, 1.5]: x = b with b binary.
  m.add_constraint(x - b, Sense::Equal, 0.0, "int");
  m.set_objective(-1.0 * x);
  const auto r = solve_milp(m);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.value(x), 1.0, 1e-9);
  EXPECT_NEAR(r.objective, -1.0, 1e-9);
}

TEST(SolveMilp, KnapsackMatchesEnumeration) {
  const double value[3] = {10, 6, 4};
  const double weight[3] = {5, 4, 3};
  double best = 0.0;
  int best_mask = 0;
  for (int mask = 0; mask < 8; ++mask) {
    double v = 0.0, w = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (mask & (1 << i)) {
        v += value[i];
        w += weight[i];
      }
    }
    if (w <= 8.0 && v > best) {
      best = v;
      best_mask = mask;
    }
  }
  ASSERT_EQ(best, 14.0);
  ASSERT_EQ(best_mask, 0b101);

  MilpModel m;
  VarRef items[3] = {m.add_binary("a"), m.add_binary("b"), m.add_binary("c")};
  LinExpr w, obj;
  for (int i = 0; i < 3; ++i) {
    w.add(items[i], weight[i]);
    obj.add(items[i], -value[i]);
  }
  m.add_constraint(w, Sense::LessEqual, 8.0, "cap");
  m.set_objective(obj);
  const auto r = solve_milp(m);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.objective, -best, 1e-9);
  EXPECT_NEAR(r.value(items[0]), 1.0, 1e-9);
  EXPECT_NEAR(r.value(items[1]), 0.0, 1e-9);
  EXPECT_NEAR(r.value(items[2]), 1.0, 1e-9);
}

TEST(SolveMilp, InfeasibleIntegerProgram) {
  MilpModel m;
  const VarRef a = m.add_binary("a");
  const VarRef b = m.add_binary("b");
  m.add_constraint(a + b, Sense::Equal, 1.5, "half");
  m.set_objective(LinExpr(a));
  EXPECT_EQ(solve_milp(m).status, SolveStatus::Infeasible);
}

TEST(SolveMilp, RelaxationBoundsAndEnumerationOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const int bins = 1 + trial % 8;
    const MilpModel m = random_milp(rng, {.continuous = 5, .binaries = bins, .rows = 7});
    const auto lp = solve_lp(m);
    const auto mip = solve_milp(m);
    const double oracle = brute_force_milp(m);
    ASSERT_TRUE(std::isfinite(oracle));
    ASSERT_EQ(mip.status, SolveStatus::Optimal) << trial;
    EXPECT_LE(lp.objective, mip.objective + 1e-7) << trial;
    EXPECT_NEAR(mip.objective, oracle, 1e-6 * std::max(1.0, std::abs(oracle))) << trial;
    const auto viol = m.max_violation(mip.values);
    EXPECT_LE(viol.row, 1e-7);
    EXPECT_LE(viol.integrality, 1e-6);
  }
}

TEST(SolveMilp, DeterministicIncumbentSequence) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const MilpModel m = random_milp(rng, {.continuous = 6, .binaries = 10, .rows = 8});
    const auto a = solve_milp(m);
    const auto b = solve_milp(m);
    ASSERT_EQ(a.incumbents.size(), b.incumbents.size());
    for (std::size_t i = 0; i < a.incumbents.size(); ++i) {
      EXPECT_EQ(a.incumbents[i].objective, b.incumbents[i].objective);
      EXPECT_EQ(a.incumbents[i].node, b.incumbents[i].node);
    }
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.stats.nodes, b.stats.nodes);
  }
}

TEST(SolveMilp, NodeLimitReportsIncumbentAndGap) {
  std::mt19937_64 rng(5);
  const MilpModel m = random_milp(rng, {.continuous = 4, .binaries = 12, .rows = 10});
  SolveOptions opts;
  opts.node_limit = 3;
  opts.dive_interval = 1;
  const auto r = solve_milp(m, opts);
  if (r.status == SolveStatus::NodeLimit) {
    EXPECT_LE(r.stats.nodes, 5);
    if (r.has_solution()) EXPECT_GE(r.gap, 0.0);
  } else {
    EXPECT_EQ(r.status, SolveStatus::Optimal);
  }
}

}  // namespace
}  // namespace flexdc
