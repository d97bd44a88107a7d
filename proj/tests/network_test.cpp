#include <numbers>

#include <gtest/gtest.h>

#include "case_support.hpp"
#include "flexdc/network.hpp"

namespace flexdc {
namespace {

using testing::ac_branch;
using testing::load_case;
using testing::two_bus_toy;

bool mentions(const std::vector<CaseViolation>& v, std::string_view needle) {
  for (const auto& x : v) {
    if (x.subject.find(needle) != std::string::npos || x.message.find(needle) != std::string::npos) return true;
  }
  return false;
}

TEST(ValidateCase, SixBusDistributionFileIsValid) {
  EXPECT_TRUE(validate_case(load_case("case6ww.m")).empty());
}

TEST(ValidateCase, TwoReferenceBusesGiveOneViolationNamingBoth) {
  SystemCase c = two_bus_toy();
  c.buses[1].is_reference = true;
  const auto v = validate_case(c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].message.find('1'), std::string::npos);
  EXPECT_NE(v[0].message.find('2'), std::string::npos);
}

TEST(ValidateCase, ZilWithAngleLimitIsRejected) {
  SystemCase c = two_bus_toy();
  BranchParams& b = c.branches[0];
  b.typology = Typology::Zil;
  b.b_min = b.b_max = 0.0;
  b.p_c = 100.0;
  b.delta_max = 0.1;
  const auto v = validate_case(c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].message.find("delta_max = 0"), std::string::npos);
  EXPECT_NE(v[0].subject.find("1-2"), std::string::npos);
}

// Each typology's parameter vector passes; breaking one field fails.
TEST(ValidateCase, TypologyRulesFollowFromParamsAlone) {
  auto check = [](BranchParams b) {
    SystemCase c = two_bus_toy();
    c.branches = {b};
    return validate_case(c);
  };
  const BranchParams ac = ac_branch(1, 2, 10.0, 100.0);
  EXPECT_TRUE(check(ac).empty());

  BranchParams vssa = ac;
  vssa.typology = Typology::Vssa;
  vssa.b_min = 5.0;
  vssa.b_max = 15.0;
  vssa.phi_min = -0.2;
  vssa.phi_max = 0.2;
  EXPECT_TRUE(check(vssa).empty());
  vssa.p_c = 10.0;
  EXPECT_TRUE(mentions(check(vssa), "p_c must be 0"));

  BranchParams hvdc = ac;
  hvdc.typology = Typology::Hvdc;
  hvdc.b_min = hvdc.b_max = 0.0;
  hvdc.p_c = 100.0;
  EXPECT_TRUE(check(hvdc).empty());
  hvdc.p_c = 0.0;
  EXPECT_TRUE(mentions(check(hvdc), "finite p_c > 0"));

  BranchParams zil = hvdc;
  zil.typology = Typology::Zil;
  zil.p_c = 100.0;
  zil.delta_max = 0.0;
  EXPECT_TRUE(check(zil).empty());
  zil.b_max = 1.0;
  EXPECT_TRUE(mentions(check(zil), "b_min = b_max = 0"));

  BranchParams fixed = ac;
  fixed.b_max = 12.0;
  EXPECT_TRUE(mentions(check(fixed), "FIXED_AC requires b_min = b_max"));
  fixed = ac;
  fixed.phi_max = 0.1;
  EXPECT_TRUE(mentions(check(fixed), "phi range"));
  fixed = ac;
  fixed.f_max = 0.0;
  EXPECT_TRUE(mentions(check(fixed), "f_max > 0"));
  fixed = ac;
  fixed.b_min = fixed.b_max = kInf;
  EXPECT_TRUE(mentions(check(fixed), "finite"));
}

TEST(ValidateCase, GeneratorAndBusInvariants) {
  SystemCase c = two_bus_toy();
  c.generators[0].p_min = 120.0;
  c.generators[0].ramp_up = 0.0;
  c.buses[1].base_load = -1.0;
  const auto v = validate_case(c);
  EXPECT_TRUE(mentions(v, "p_min <= p_max"));
  EXPECT_TRUE(mentions(v, "ramp limits"));
  EXPECT_TRUE(mentions(v, "negative base load"));
}

TEST(ValidateCase, DisconnectedNetwork) {
  SystemCase c = two_bus_toy();
  c.buses.push_back(Bus{.id = 3});
  EXPECT_TRUE(mentions(validate_case(c), "not connected"));
}

TEST(ValidateHorizon, Invariants) {
  EXPECT_TRUE(validate_horizon(Horizon{}).empty());
  EXPECT_EQ(validate_horizon(Horizon{2, {1.0}, 0.0}).size(), 1u);
  EXPECT_EQ(validate_horizon(Horizon{1, {0.0}, 0.0}).size(), 1u);
  EXPECT_EQ(validate_horizon(Horizon{1, {1.0}, 1.0}).size(), 1u);
}

TEST(SystemCase, CftRowsHoldOnePlusAndOneMinus) {
  const SystemCase c = load_case("case118.m");
  const Eigen::SparseMatrix<double> cft = c.cft();
  ASSERT_EQ(cft.rows(), 186);
  ASSERT_EQ(cft.cols(), 118);
  const Eigen::MatrixXd dense(cft);
  for (Eigen::Index k = 0; k < dense.rows(); ++k) {
    EXPECT_EQ(dense.row(k).sum(), 0.0);
    EXPECT_EQ((dense.row(k).array() == 1.0).count(), 1);
    EXPECT_EQ((dense.row(k).array() == -1.0).count(), 1);
    const auto& b = c.branches[static_cast<std::size_t>(k)];
    EXPECT_EQ(dense(k, c.bus_index(b.from_bus)), 1.0);
    EXPECT_EQ(dense(k, c.bus_index(b.to_bus)), -1.0);
  }
}

TEST(SystemCase, AngleSpreadIsCappedByCeiling) {
  SystemCase c = two_bus_toy();
  EXPECT_DOUBLE_EQ(c.angle_spread(), std::numbers::pi);  // 2 buses x pi/2
  c.angle_ceiling = 1.0;
  EXPECT_DOUBLE_EQ(c.angle_spread(), 1.0);
}

TEST(Typology, ParsesDeviceNamesCaseInsensitively) {
  EXPECT_EQ(parse_typology("PST"), Typology::Vssa);
  EXPECT_EQ(parse_typology("tscs"), Typology::Vssa);
  EXPECT_EQ(parse_typology("Hvdc"), Typology::Hvdc);
  EXPECT_EQ(parse_typology("zil"), Typology::Zil);
  EXPECT_EQ(parse_typology("fixed_ac"), Typology::FixedAc);
  EXPECT_FALSE(parse_typology("facts"));
}

}  // namespace
}  // namespace flexdc
