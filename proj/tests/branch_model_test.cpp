#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "case_support.hpp"
#include "flexdc/branch_model.hpp"
#include "flexdc/formulations.hpp"

namespace flexdc {
namespace {

using testing::ac_branch;
using testing::load_scenario;
using testing::two_bus_toy;

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

struct Solved {
  Problem problem;
  SolveResult result;
};

Solved solve(const SystemCase& c, const Horizon& h = {}, Formulation f = Formulation::Ed, BlockOptions opt = {}) {
  Solved s{build_problem(c, h, f, opt), {}};
  s.result = solve_milp(s.problem.model);
  return s;
}

double angle_diff(const Solved& s, int t, int k) {
  const BranchBlock& b = s.problem.block;
  return s.result.value(b.delta_at(t, b.from[static_cast<std::size_t>(k)])) -
         s.result.value(b.delta_at(t, b.to[static_cast<std::size_t>(k)]));
}

BranchParams zil(int from, int to, double p_c_mw) {
  BranchParams b;
  b.from_bus = from;
  b.to_bus = to;
  b.typology = Typology::Zil;
  b.p_c = p_c_mw;
  b.delta_max = 0.0;
  return b;
}

// ---------------------------------------------------------------------------
// Big-M

TEST(BigM, ZilReducesToCapacityTerm) {
  EXPECT_NEAR(branch_big_m(zil(1, 2, 100.0), 100.0, kPi), 1.01, 1e-12);
}

TEST(BigM, FixedAcAngleTermDominatesRating) {
  BranchParams b = ac_branch(1, 2, 5.0, 60.0);
  b.delta_max = kPi / 2;
  EXPECT_NEAR(branch_big_m(b, 100.0, kPi / 2), 1.01 * 5.0 * kPi / 2, 1e-12);
  EXPECT_NEAR(branch_big_m(b, 100.0, kPi / 2), 7.933, 1e-3);
}

TEST(BigM, VssaAddsLargestShift) {
  BranchParams b = ac_branch(1, 2, 4.0, 100.0);
  b.typology = Typology::Vssa;
  b.b_min = 2.0;
  b.delta_max = kPi / 2;
  b.phi_min = -15.0 * kDeg;
  b.phi_max = 15.0 * kDeg;
  EXPECT_NEAR(branch_big_m(b, 100.0, kPi / 2), 1.01 * 4.0 * (kPi / 2 + 15.0 * kDeg), 1e-12);
  EXPECT_NEAR(branch_big_m(b, 100.0, kPi / 2), 7.404, 1e-3);
}

TEST(BigM, SwitchableBranchUsesAngleSpreadAndNeverDropsBelowRating) {
  BranchParams b = ac_branch(1, 2, 5.0, 2000.0);
  b.delta_max = 0.5;
  EXPECT_NEAR(branch_big_m(b, 100.0, 3.0), 1.01 * 20.0, 1e-12);  // rating dominates
  b.f_max = 60.0;
  b.switchable = true;
  EXPECT_NEAR(branch_big_m(b, 100.0, 3.0), 1.01 * 5.0 * 3.0, 1e-12);
}

// ---------------------------------------------------------------------------
// Constraint block on hand-solvable systems

TEST(BranchBlock, TwoBusToyFlowFollowsAngle) {
  const Solved s = solve(two_bus_toy());
  ASSERT_EQ(s.result.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.result.objective, 500.0, 1e-6);
  EXPECT_NEAR(angle_diff(s, 0, 0), 0.05, 1e-9);
  const auto st = extract_branch_state(s.problem.block, s.result);
  EXPECT_NEAR(st[0].flow_mw, 50.0, 1e-6);
  ASSERT_TRUE(st[0].b_effective);
  EXPECT_NEAR(*st[0].b_effective, 10.0, 1e-6);
  EXPECT_FALSE(st[0].is_open);
}

// Cheap unit at bus 1, dear unit at bus 2, 150 MW at bus 3. The ZIL ties
// delta1 = delta2, so the AC lines split 1:2 and carry 50 + 100 MW at
// dtheta = 0.1; the ZIL moves as much cheap power as it may (60 MW).
SystemCase zil_triangle() {
  SystemCase c;
  c.buses = {Bus{.id = 1, .is_reference = true}, Bus{.id = 2}, Bus{.id = 3, .base_load = 150.0}};
  Generator g1, g2;
  g1.bus = 1;
  g1.p_max = 200.0;
  g1.variable_cost = 10.0;
  g2.bus = 2;
  g2.p_max = 200.0;
  g2.variable_cost = 30.0;
  c.generators = {g1, g2};
  c.branches = {zil(1, 2, 60.0), ac_branch(2, 3, 10.0, 200.0), ac_branch(1, 3, 5.0, 60.0)};
  return c;
}

TEST(BranchBlock, ConnectedZilTiesAnglesAndCapsFlow) {
  const SystemCase c = zil_triangle();
  ASSERT_TRUE(validate_case(c).empty());
  const Solved s = solve(c);
  ASSERT_EQ(s.result.status, SolveStatus::Optimal);
  EXPECT_NEAR(angle_diff(s, 0, 0), 0.0, 1e-9);
  const auto st = extract_branch_state(s.problem.block, s.result);
  EXPECT_LE(std::abs(st[0].flow_mw), 60.0 + 1e-6);
  EXPECT_NEAR(st[0].flow_mw, 60.0, 1e-6);
  EXPECT_NEAR(st[1].flow_mw, 100.0, 1e-6);
  EXPECT_NEAR(st[2].flow_mw, 50.0, 1e-6);
  EXPECT_NEAR(s.result.objective, 110.0 * 10.0 + 40.0 * 30.0, 1e-6);
  EXPECT_EQ(st[0].shift_deg, 0.0);
  EXPECT_FALSE(st[0].b_effective);
}

// A ZIL in parallel with a controllable-B branch forces dtheta = 0 across
// both; the box of (3)-(4) collapses and the VSSA carries nothing.
TEST(BranchBlock, VssaWithZeroAngleTermCarriesNoFlow) {
  SystemCase c = two_bus_toy();
  BranchParams v = ac_branch(1, 2, 15.0);
  v.typology = Typology::Vssa;
  v.b_min = 5.0;
  c.branches = {zil(1, 2, 100.0), v};
  ASSERT_TRUE(validate_case(c).empty());
  const Solved s = solve(c);
  ASSERT_EQ(s.result.status, SolveStatus::Optimal);
  const auto st = extract_branch_state(s.problem.block, s.result);
  EXPECT_NEAR(st[1].flow_mw, 0.0, 1e-6);
  EXPECT_NEAR(st[0].flow_mw, 50.0, 1e-6);
}

// Branch 1-3 out of service: no flow, and its terminal angles differ with
// nothing tying them to it.
TEST(BranchBlock, OpenBranchCarriesNothingAndDecouplesAngles) {
  SystemCase c;
  c.buses = {Bus{.id = 1, .is_reference = true}, Bus{.id = 2}, Bus{.id = 3, .base_load = 80.0}};
  Generator g;
  g.bus = 1;
  g.p_max = 200.0;
  g.variable_cost = 10.0;
  c.generators = {g};
  c.branches = {ac_branch(1, 2, 10.0), ac_branch(2, 3, 10.0), ac_branch(1, 3, 10.0)};
  c.branches[2].in_service = false;
  c.branches[2].switchable = true;
  ASSERT_TRUE(validate_case(c).empty());
  const Solved s = solve(c);
  ASSERT_EQ(s.result.status, SolveStatus::Optimal);
  const auto st = extract_branch_state(s.problem.block, s.result);
  EXPECT_TRUE(st[2].is_open);
  EXPECT_EQ(st[2].flow_mw, 0.0);
  // series path: 0.8 p.u. over two B = 10 lines
  EXPECT_NEAR(angle_diff(s, 0, 2), 0.16, 1e-9);
  EXPECT_NEAR(st[0].flow_mw, 80.0, 1e-6);
}

TEST(BranchBlock, TransportationDropsAnglesButKeepsCapacities) {
  const SystemCase c = zil_triangle();
  const Solved s = solve(c, {}, Formulation::Transportation);
  ASSERT_EQ(s.result.status, SolveStatus::Optimal);
  EXPECT_TRUE(s.problem.block.delta.empty());
  // only 1-3 (60 MW) and the ZIL (60 MW) leave bus 1 cheaply
  EXPECT_NEAR(s.result.objective, 120.0 * 10.0 + 30.0 * 30.0, 1e-6);
}

// ---------------------------------------------------------------------------
// Properties on the 6-bus scenarios

TEST(BranchBlock, FixedSusceptanceBranchesFollowAngleLaw) {
  const Scenario sc = load_scenario("case6ww.m", "case6ww_b.toml");
  const Solved s = solve(sc.system, sc.horizon);
  ASSERT_EQ(s.result.status, SolveStatus::Optimal);
  const BranchBlock& b = s.problem.block;
  for (int t = 0; t < b.n_periods; ++t) {
    for (int k = 0; k < b.n_branches; ++k) {
      const BranchParams& p = b.params[static_cast<std::size_t>(k)];
      ASSERT_EQ(p.b_min, p.b_max);
      const double theta = angle_diff(s, t, k) + b.at(t, k).phi.value(s.result);
      EXPECT_NEAR(b.at(t, k).p_br.value(s.result), p.b_max * theta, 1e-6) << "t=" << t << " k=" << k;
    }
  }
}

TEST(BranchBlock, VariableSusceptanceStaysInRange) {
  const Scenario sc = load_scenario("case6ww.m", "case6ww_c.toml");
  const Solved s = solve(sc.system, sc.horizon);
  ASSERT_EQ(s.result.status, SolveStatus::Optimal);
  const BranchBlock& b = s.problem.block;
  const auto st = extract_branch_state(b, s.result);
  int checked = 0;
  for (int t = 0; t < b.n_periods; ++t) {
    for (int k = 0; k < b.n_branches; ++k) {
      const BranchParams& p = b.params[static_cast<std::size_t>(k)];
      if (p.b_min == p.b_max) continue;
      const double theta = angle_diff(s, t, k) + b.at(t, k).phi.value(s.result);
      if (std::abs(theta) <= 1e-6) continue;
      const double pbr = b.at(t, k).p_br.value(s.result);
      EXPECT_EQ(std::signbit(pbr), std::signbit(theta));
      EXPECT_GE(std::abs(pbr), p.b_min * std::abs(theta) - 1e-6);
      EXPECT_LE(std::abs(pbr), p.b_max * std::abs(theta) + 1e-6);
      const auto& be = st[static_cast<std::size_t>(t * b.n_branches + k)].b_effective;
      ASSERT_TRUE(be);
      EXPECT_GE(*be, p.b_min - 1e-6);
      EXPECT_LE(*be, p.b_max + 1e-6);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(BranchBlock, KclClosesAndFlowSplitHolds) {
  const Scenario sc = load_scenario("case6ww.m", "case6ww_e.toml");
  const Solved s = solve(sc.system, sc.horizon);
  ASSERT_EQ(s.result.status, SolveStatus::Optimal);
  const BranchBlock& b = s.problem.block;
  for (int t = 0; t < b.n_periods; ++t) {
    double sum = 0.0;
    for (int n = 0; n < b.n_buses; ++n) sum += s.result.value(b.nex_at(t, n));
    EXPECT_NEAR(sum, 0.0, 1e-6) << "t=" << t;
    for (int k = 0; k < b.n_branches; ++k) {
      const BranchVars& v = b.at(t, k);
      EXPECT_NEAR(v.f.value(s.result) - v.p_br.value(s.result) + v.p_top.value(s.result), 0.0, 1e-7);
    }
  }
  EXPECT_LE(s.problem.model.max_violation(s.result.values).row, 1e-7);
}

TEST(BranchBlock, DoublingBigMLeavesOptimumUnchanged) {
  const Scenario sc = load_scenario("case6ww.m", "case6ww_e.toml");
  const Solved a = solve(sc.system, sc.horizon);
  const Solved b = solve(sc.system, sc.horizon, Formulation::Ed, BlockOptions{.big_m_scale = 2.0});
  ASSERT_EQ(a.result.status, SolveStatus::Optimal);
  ASSERT_EQ(b.result.status, SolveStatus::Optimal);
  EXPECT_NEAR(a.result.objective, b.result.objective, 1e-6 * std::abs(a.result.objective));
}

// ---------------------------------------------------------------------------
// Binary substitution and naming

TEST(BranchBlock, BinariesExistOnlyWhereTheyDecideSomething) {
  auto count = [](const char* overlay) {
    const Scenario sc = load_scenario("case6ww.m", overlay);
    MilpModel m;
    const BranchBlock b = build_branch_block(m, sc.system, sc.horizon);
    int z = 0;
    for (const auto& v : b.branch) z += v.z.is_var() ? 1 : 0;
    return std::pair{b.num_switch_binaries(), z};
  };
  EXPECT_EQ(count("case6ww_a.toml"), std::pair(0, 0));
  EXPECT_EQ(count("case6ww_b.toml"), std::pair(0, 0));
  EXPECT_EQ(count("case6ww_c.toml"), std::pair(0, 7));
  EXPECT_EQ(count("case6ww_e.toml"), std::pair(77, 7));
}

TEST(BranchBlock, NamesEncodeEquationAndIndices) {
  MilpModel m;
  const SystemCase c = two_bus_toy();
  const BranchBlock b = build_branch_block(m, c, Horizon{});
  EXPECT_EQ(m.variable(b.at(0, 0).p_br.var).name, "pbr[t=1,k=1]");
  EXPECT_EQ(m.variable(b.delta_at(0, 1)).name, "delta[t=1,n=2]");
  EXPECT_EQ(m.variable(b.nex_at(0, 0)).name, "nex[t=1,n=1]");
  ASSERT_EQ(b.rows[3].size(), 1u);
  EXPECT_EQ(m.constraints()[static_cast<std::size_t>(b.rows[3][0])].name, "eq3[t=1,k=1]");
  ASSERT_EQ(b.rows[1].size(), 2u);
  EXPECT_EQ(m.constraints()[static_cast<std::size_t>(b.rows[1][1])].name, "eq1[t=1,n=2]");
  // the reference angle is pinned
  EXPECT_EQ(m.variable(b.delta_at(0, 0)).lower, 0.0);
  EXPECT_EQ(m.variable(b.delta_at(0, 0)).upper, 0.0);
}

TEST(ExtractBranchState, FractionalSwitchIsReported) {
  const Scenario sc = load_scenario("case6ww.m", "case6ww_e.toml");
  const Problem p = build_problem(sc.system, sc.horizon, Formulation::Ed);
  SolveResult r;
  r.status = SolveStatus::Optimal;
  r.values.assign(static_cast<std::size_t>(p.model.num_variables()), 0.0);
  r.values[static_cast<std::size_t>(p.block.at(2, 3).tra.var.index)] = 0.5;
  try {
    extract_branch_state(p.block, r);
    FAIL() << "expected NonIntegralBinary";
  } catch (const NonIntegralBinary& e) {
    EXPECT_NE(std::string(e.what()).find("tra[t=3,k=4]"), std::string::npos);
  }
  r.values[static_cast<std::size_t>(p.block.at(2, 3).tra.var.index)] = 1.0 - 5e-5;
  EXPECT_NO_THROW(extract_branch_state(p.block, r));
}

}  // namespace
}  // namespace flexdc
