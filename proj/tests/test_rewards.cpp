#include <gtest/gtest.h>

#include "irl_dr/rewards.hpp"
#include "irl_dr/rng.hpp"

using namespace irl_dr;

namespace {

EnvState state(double pc, double ns, double price, double baseline) {
  EnvState s;
  s.pc_demand = pc;
  s.ns_demand = ns;
  s.price = price;
  s.baseline = baseline;
  return s;
}

Dispatch served(double ns, double pc, std::array<int, 4> delays = {}) {
  Dispatch d;
  d.ns = ns;
  d.pc = pc;
  d.open_delays = delays;
  return d;
}

}  // namespace

TEST(TrueReward, HandComputedQuadratic) {
  const auto s = state(2.0, 1.0, 0.2, 4.0);
  const auto d = served(1.0, 0.5, {2, 0, 0, 1});
  TrueReward r;
  r.w_ac = 0.05;
  r.w_m = {0.01, 0.02, 0.03, 0.04};
  // revenue 0.2 * (4 - 1.5); ac deviation 1.5; delays 2 and 1.
  const double expected = 0.2 * 2.5 - 0.05 * 2.25 - 0.01 * 4.0 - 0.04 * 1.0;
  EXPECT_NEAR(true_reward(s, d, r), expected, 1e-15);
}

TEST(TrueReward, RevenueModes) {
  const auto s = state(0.0, 3.0, 0.5, 2.0);
  const auto d = served(3.0, 0.0);
  TrueReward r;
  r.discomfort_mode = DiscomfortMode::None;
  EXPECT_DOUBLE_EQ(true_reward(s, d, r), 0.0);
  r.revenue_mode = RevenueMode::Bidirectional;
  EXPECT_DOUBLE_EQ(true_reward(s, d, r), -0.5);
}

TEST(TrueReward, AbsoluteDiscomfort) {
  const auto s = state(2.0, 0.0, 0.0, 0.0);
  TrueReward r;
  r.discomfort_mode = DiscomfortMode::Absolute;
  r.w_ac = 0.5;
  r.w_m = {0.1, 0.1, 0.1, 0.1};
  EXPECT_NEAR(true_reward(s, served(0.0, 0.5, {3, 0, 0, 0}), r), -0.75 - 0.3, 1e-15);
}

TEST(Features, BasisRewardsEqualTheirFeature) {
  Rng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = state(rng.uniform(0.0, 3.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 5.0));
    std::array<int, 4> delays{};
    for (int& d : delays) d = static_cast<int>(rng.index(30));
    const auto d = served(s.ns_demand, rng.uniform(0.0, s.pc_demand), delays);
    const auto phi = features(s, d);
    for (std::size_t k = 0; k < kBasisCount; ++k) {
      EXPECT_NEAR(true_reward(s, d, TrueReward::basis(k)), phi[k], 1e-12);
      Features e{};
      e[k] = 1.0;
      EXPECT_NEAR(learned_reward(phi, LearnedReward{e}), phi[k], 1e-15);
    }
  }
}

TEST(Features, OrderingIsRevenueMajor) {
  EXPECT_EQ(basis_index(RevenueMode::ReductionOnly, DiscomfortMode::None), 0u);
  EXPECT_EQ(basis_index(RevenueMode::ReductionOnly, DiscomfortMode::Quadratic), 2u);
  EXPECT_EQ(basis_index(RevenueMode::Bidirectional, DiscomfortMode::Absolute), 4u);
  // Consumption above the baseline: reduction-only features ignore it.
  const auto phi = features(state(0.0, 3.0, 1.0, 2.0), served(3.0, 0.0));
  EXPECT_DOUBLE_EQ(phi[0], 0.0);
  EXPECT_DOUBLE_EQ(phi[3], -1.0);
}

TEST(LearnedReward, IsLinearInAlpha) {
  Rng rng(2);
  Features phi, a, b;
  for (std::size_t i = 0; i < kBasisCount; ++i) {
    phi[i] = rng.uniform(-3.0, 3.0);
    a[i] = rng.uniform(-0.5, 0.5);
    b[i] = rng.uniform(-0.5, 0.5);
  }
  Features sum;
  for (std::size_t i = 0; i < kBasisCount; ++i) sum[i] = a[i] + b[i];
  EXPECT_NEAR(learned_reward(phi, {sum}), learned_reward(phi, {a}) + learned_reward(phi, {b}), 1e-12);
  Features big{};
  big[2] = 1.5;
  EXPECT_THROW(learned_reward(phi, {big}), ContractError);
}

TEST(DelayCost, FollowsDiscomfortShape) {
  TrueReward r;
  r.w_m = {0.01, 0.02, 0.0, 0.0};
  EXPECT_NEAR(delay_cost_increment(r, 0, 3), 0.01 * (16 - 9), 1e-15);
  EXPECT_NEAR(delay_cost_increment(r, 1, 0), 0.02, 1e-15);
  r.discomfort_mode = DiscomfortMode::None;
  EXPECT_EQ(delay_cost_increment(r, 0, 3), 0.0);
  Features a{};
  a[2] = 0.5;  // quadratic
  EXPECT_NEAR(delay_cost_increment(LearnedReward{a}, 3, 2), 0.5 * (9.0 - 4.0) / (96.0 * 96.0), 1e-15);
}

TEST(Modes, ParseRoundTrip) {
  for (auto m : {RevenueMode::ReductionOnly, RevenueMode::Bidirectional})
    EXPECT_EQ(parse_revenue_mode(to_string(m)), m);
  for (auto m : {DiscomfortMode::None, DiscomfortMode::Absolute, DiscomfortMode::Quadratic})
    EXPECT_EQ(parse_discomfort_mode(to_string(m)), m);
  EXPECT_FALSE(parse_revenue_mode("Cubic"));
}
