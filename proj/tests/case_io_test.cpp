#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "case_support.hpp"
#include "flexdc/case_io.hpp"

namespace flexdc {
namespace {

using testing::load_case;
using testing::load_scenario;
using testing::read_fixture;

constexpr double kDeg = std::numbers::pi / 180.0;

const BranchParams& find_branch(const SystemCase& c, int from, int to) {
  for (const auto& b : c.branches) {
    if ((b.from_bus == from && b.to_bus == to) || (b.from_bus == to && b.to_bus == from)) return b;
  }
  throw std::runtime_error("no such branch");
}

void expect_same(double a, double b, const char* what) {
  if (std::isinf(a) || std::isinf(b)) {
    EXPECT_EQ(a, b) << what;
  } else {
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a))) << what;
  }
}

void expect_same_case(const SystemCase& a, const SystemCase& b) {
  expect_same(a.base_mva, b.base_mva, "base_mva");
  ASSERT_EQ(a.buses.size(), b.buses.size());
  ASSERT_EQ(a.generators.size(), b.generators.size());
  ASSERT_EQ(a.branches.size(), b.branches.size());
  for (std::size_t i = 0; i < a.buses.size(); ++i) {
    EXPECT_EQ(a.buses[i].id, b.buses[i].id);
    EXPECT_EQ(a.buses[i].is_reference, b.buses[i].is_reference);
    EXPECT_EQ(a.buses[i].zone, b.buses[i].zone);
    expect_same(a.buses[i].base_load, b.buses[i].base_load, "base_load");
    expect_same(a.buses[i].base_kv, b.buses[i].base_kv, "base_kv");
  }
  for (std::size_t i = 0; i < a.generators.size(); ++i) {
    const auto &x = a.generators[i], &y = b.generators[i];
    EXPECT_EQ(x.bus, y.bus);
    EXPECT_EQ(x.in_service, y.in_service);
    expect_same(x.p_min, y.p_min, "p_min");
    expect_same(x.p_max, y.p_max, "p_max");
    expect_same(x.fixed_cost, y.fixed_cost, "fixed_cost");
    expect_same(x.variable_cost, y.variable_cost, "variable_cost");
    expect_same(x.quadratic_cost, y.quadratic_cost, "quadratic_cost");
    expect_same(x.startup_cost, y.startup_cost, "startup_cost");
    expect_same(x.shutdown_cost, y.shutdown_cost, "shutdown_cost");
  }
  for (std::size_t i = 0; i < a.branches.size(); ++i) {
    const auto &x = a.branches[i], &y = b.branches[i];
    EXPECT_EQ(x.from_bus, y.from_bus);
    EXPECT_EQ(x.to_bus, y.to_bus);
    EXPECT_EQ(x.typology, y.typology);
    EXPECT_EQ(x.in_service, y.in_service);
    EXPECT_EQ(x.switchable, y.switchable);
    expect_same(x.b_min, y.b_min, "b_min");
    expect_same(x.b_max, y.b_max, "b_max");
    expect_same(x.f_max, y.f_max, "f_max");
    expect_same(x.r, y.r, "r");
    expect_same(x.x, y.x, "x");
    expect_same(x.charging, y.charging, "charging");
  }
}

TEST(ParseCase, SixBusCounts) {
  const SystemCase c = load_case("case6ww.m");
  EXPECT_EQ(c.buses.size(), 6u);
  EXPECT_EQ(c.branches.size(), 11u);
  EXPECT_EQ(c.generators.size(), 3u);
  EXPECT_EQ(c.buses[static_cast<std::size_t>(c.reference_index())].id, 1);
  const BranchParams& b = find_branch(c, 1, 2);
  EXPECT_DOUBLE_EQ(b.b_max, 1.0 / 0.2);
  EXPECT_DOUBLE_EQ(b.f_max, 40.0);
  EXPECT_DOUBLE_EQ(c.total_load(), 210.0);
}

TEST(ParseCase, Ieee118Counts) {
  std::vector<std::string> warnings;
  const SystemCase c = parse_case(read_fixture("cases/case118.m"), &warnings);
  EXPECT_EQ(c.buses.size(), 118u);
  // one row per circuit; the file carries 186 rows (7 parallel pairs)
  EXPECT_EQ(c.branches.size(), 186u);
  // rateA = 0 means unlimited
  EXPECT_TRUE(std::isinf(c.branches.front().f_max));
  // off-nominal taps are kept as warnings, never dropped rows
  EXPECT_FALSE(warnings.empty());
}

TEST(ParseCase, MissingBranchMatrixIsNamed) {
  const std::string text =
      "function mpc = t\nmpc.baseMVA = 100;\nmpc.bus = [\n1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;\n];\n"
      "mpc.gen = [\n1 0 0 0 0 1 100 1 100 0;\n];\n";
  try {
    parse_case(text);
    FAIL() << "expected MalformedCase";
  } catch (const MalformedCase& e) {
    EXPECT_NE(std::string(e.what()).find("mpc.branch"), std::string::npos);
  }
}

TEST(ParseCase, NonNumericTokenReportsLine) {
  std::string text = read_fixture("cases/case6ww.m");
  const auto pos = text.find("0.1\t0.2\t0.04");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 3, "abc");
  const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
  try {
    parse_case(text);
    FAIL() << "expected MalformedCase";
  } catch (const MalformedCase& e) {
    EXPECT_EQ(e.line(), line);
  }
}

TEST(ParseCase, RaggedRowsAreRejected) {
  std::string text = read_fixture("cases/case6ww.m");
  const auto pos = text.find("0.1\t0.2\t0.04");
  text.replace(pos, 3, "");
  EXPECT_THROW(parse_case(text), MalformedCase);
}

TEST(ParseCase, OutOfServiceBranchIsKeptSwitchedOut) {
  std::string text = read_fixture("cases/case6ww.m");
  const std::string row = "1\t2\t0.1\t0.2\t0.04\t40\t40\t40\t0\t0\t1";
  const auto pos = text.find(row);
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos + row.size() - 1, 1, "0");
  const SystemCase c = parse_case(text);
  ASSERT_EQ(c.branches.size(), 11u);
  EXPECT_FALSE(c.branches[0].in_service);
  EXPECT_TRUE(c.branches[0].switchable);
}

TEST(WriteCase, RoundTripsEveryFixture) {
  for (const char* name : {"case6ww.m", "case118.m", "case2383wp.m"}) {
    SCOPED_TRACE(name);
    const SystemCase a = load_case(name);
    const SystemCase b = parse_case(write_case(a));
    expect_same_case(a, b);
  }
}

TEST(ApplyOverlay, EmptyOverlayIsIdentity) {
  const SystemCase base = load_case("case6ww.m");
  const Scenario s = apply_overlay(base, FlexOverlay{});
  expect_same_case(base, s.system);
  EXPECT_EQ(s.horizon.n_periods, 1);
  ASSERT_EQ(s.horizon.load_multipliers.size(), 1u);
  EXPECT_EQ(s.horizon.load_multipliers[0], 1.0);
  for (const auto& b : s.system.branches) {
    EXPECT_EQ(b.typology, Typology::FixedAc);
    EXPECT_EQ(b.b_min, b.b_max);
    EXPECT_EQ(b.p_c, 0.0);
    EXPECT_EQ(b.phi_min, 0.0);
    EXPECT_EQ(b.phi_max, 0.0);
    EXPECT_FALSE(b.switchable);
  }
}

TEST(ApplyOverlay, CaseBMakesThreeSixAPhaseShifter) {
  const Scenario s = load_scenario("case6ww.m", "case6ww_b.toml");
  const BranchParams& b = find_branch(s.system, 3, 6);
  EXPECT_EQ(b.typology, Typology::Vssa);
  EXPECT_NEAR(b.phi_min, -20.0 * kDeg, 1e-12);
  EXPECT_NEAR(b.phi_max, 20.0 * kDeg, 1e-12);
  EXPECT_EQ(b.b_min, b.b_max);
  EXPECT_DOUBLE_EQ(b.b_max, 1.0 / 0.1);
  EXPECT_EQ(s.horizon.n_periods, 7);
  EXPECT_DOUBLE_EQ(s.horizon.reserve_fraction, 0.1);
  EXPECT_DOUBLE_EQ(s.system.generators[0].p_min, 50.0);
  EXPECT_DOUBLE_EQ(s.system.generators[2].variable_cost, 20.0);
  EXPECT_EQ(s.system.generators[2].quadratic_cost, 0.0);
  EXPECT_TRUE(validate_case(s.system).empty());
}

TEST(ApplyOverlay, CaseCGivesThirtyPercentSusceptanceRange) {
  const Scenario s = load_scenario("case6ww.m", "case6ww_c.toml");
  const BranchParams& b = find_branch(s.system, 1, 4);
  const double b0 = 1.0 / 0.2;
  EXPECT_NEAR(b.b_min, 0.7 * b0, 1e-12);
  EXPECT_NEAR(b.b_max, 1.3 * b0, 1e-12);
  EXPECT_EQ(b.phi_min, 0.0);
  EXPECT_EQ(b.phi_max, 0.0);
}

TEST(ApplyOverlay, CaseDHvdcKeepsTheAcRating) {
  const Scenario s = load_scenario("case6ww.m", "case6ww_d.toml");
  const BranchParams& b = find_branch(s.system, 3, 5);
  EXPECT_EQ(b.typology, Typology::Hvdc);
  EXPECT_EQ(b.b_max, 0.0);
  EXPECT_DOUBLE_EQ(b.p_c, 70.0);
  EXPECT_TRUE(validate_case(s.system).empty());
}

TEST(ApplyOverlay, CaseEMakesEveryBranchSwitchable) {
  const Scenario s = load_scenario("case6ww.m", "case6ww_e.toml");
  for (const auto& b : s.system.branches) EXPECT_TRUE(b.switchable);
}

TEST(ApplyOverlay, IsIdempotent) {
  const SystemCase base = load_case("case6ww.m");
  const FlexOverlay o = parse_overlay(read_fixture("overlays/case6ww_e.toml"));
  const Scenario once = apply_overlay(base, o);
  const Scenario twice = apply_overlay(once.system, o);
  expect_same_case(once.system, twice.system);
  for (std::size_t k = 0; k < once.system.branches.size(); ++k) {
    EXPECT_EQ(once.system.branches[k].phi_max, twice.system.branches[k].phi_max);
    EXPECT_EQ(once.system.branches[k].p_c, twice.system.branches[k].p_c);
  }
}

TEST(ApplyOverlay, UnknownBranchIsRejected) {
  FlexOverlay o;
  o.branch_edits.push_back(BranchEdit{.from_bus = 1, .to_bus = 6, .typology = Typology::Hvdc});
  EXPECT_THROW(apply_overlay(load_case("case6ww.m"), o), UnknownBranch);
}

TEST(ApplyOverlay, TwoEditsOnOneBranchConflict) {
  FlexOverlay o;
  o.branch_edits.push_back(BranchEdit{.from_bus = 3, .to_bus = 6, .phi_min_deg = -10.0, .phi_max_deg = 10.0});
  o.branch_edits.push_back(BranchEdit{.from_bus = 6, .to_bus = 3, .typology = Typology::Hvdc});
  EXPECT_THROW(apply_overlay(load_case("case6ww.m"), o), ConflictingEdit);
}

TEST(ParseOverlay, UnknownKeysAndBadTypologiesAreErrors) {
  EXPECT_THROW(parse_overlay("[network]\nglobal_switchin = true\n"), OverlayError);
  EXPECT_THROW(parse_overlay("[[branch]]\nfrom = 1\nto = 2\ntypology = \"facts\"\n"), OverlayError);
  EXPECT_THROW(parse_overlay("[horizon]\nperiods = \"seven\"\n"), OverlayError);
}

TEST(ApplyOverlay, GeneratorSubsetAndDefaultRating) {
  const Scenario s = load_scenario("case118.m", "ieee118_base.toml");
  EXPECT_EQ(s.system.generators.size(), 19u);
  for (const auto& b : s.system.branches) EXPECT_DOUBLE_EQ(b.f_max, 250.0);
}

TEST(ApplyOverlay, Ieee118RemedialSet) {
  const Scenario s = load_scenario("case118.m", "ieee118_flex.toml");
  EXPECT_EQ(find_branch(s.system, 64, 61).typology, Typology::Hvdc);
  EXPECT_EQ(find_branch(s.system, 26, 30).typology, Typology::Hvdc);
  EXPECT_EQ(find_branch(s.system, 63, 64).typology, Typology::Hvdc);
  const BranchParams& pst = find_branch(s.system, 81, 80);
  EXPECT_EQ(pst.b_min, pst.b_max);
  EXPECT_NEAR(pst.phi_max, 15.0 * kDeg, 1e-12);
  const BranchParams& v = find_branch(s.system, 77, 82);
  EXPECT_NEAR(v.b_min / v.b_max, 0.5 / 1.5, 1e-12);
  EXPECT_NEAR(v.phi_min, -15.0 * kDeg, 1e-12);
  EXPECT_TRUE(validate_case(s.system).empty());
}

TEST(ApplyOverlay, PolishRetypingCounts) {
  const Scenario s = load_scenario("case2383wp.m", "polish_flex.toml");
  int hvdc = 0, vssa = 0, zil = 0, switchable = 0;
  for (const auto& b : s.system.branches) {
    hvdc += b.typology == Typology::Hvdc;
    vssa += b.typology == Typology::Vssa;
    zil += b.typology == Typology::Zil;
    switchable += b.tra_is_free();
    if (b.typology == Typology::Zil) EXPECT_TRUE(b.switchable);
  }
  EXPECT_EQ(hvdc, 13);
  EXPECT_EQ(vssa, 79);
  EXPECT_EQ(zil, 18);
  EXPECT_EQ(switchable, 18);
}

}  // namespace
}  // namespace flexdc
