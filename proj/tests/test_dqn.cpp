#include <gtest/gtest.h>

#include "irl_dr/data_io.hpp"
#include "irl_dr/dqn.hpp"
#include "support/oracles.hpp"

using namespace irl_dr;

TEST(ReplayBuffer, OverwritesOldestFirst) {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.action = i;
    buf.push(t);
  }
  ASSERT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).action, 2);
  EXPECT_EQ(buf.at(1).action, 3);
  EXPECT_EQ(buf.at(2).action, 4);
  EXPECT_THROW(buf.at(3), ContractError);
  EXPECT_THROW(ReplayBuffer(0), ContractError);
}

TEST(ReplayBuffer, SamplesOnlyStoredEntries) {
  ReplayBuffer buf(100);
  for (int i = 0; i < 10; ++i) {
    Transition t;
    t.action = i;
    buf.push(t);
  }
  Rng rng(1);
  std::array<int, 10> seen{};
  for (int i = 0; i < 1000; ++i) ++seen[static_cast<std::size_t>(buf.sample(rng).action)];
  for (int c : seen) EXPECT_GT(c, 50);
}

TEST(Epsilon, DecaysPerEpisodeToFloor) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(epsilon_at(cfg, 0), 1.0);
  EXPECT_NEAR(epsilon_at(cfg, 1), 0.999, 1e-15);
  EXPECT_NEAR(epsilon_at(cfg, 1000), std::pow(0.999, 1000), 1e-12);
  EXPECT_DOUBLE_EQ(epsilon_at(cfg, 100000), 0.05);
}

TEST(Argmax, TiesGoToLowerIndex) {
  EXPECT_EQ(argmax(std::array<double, 4>{1, 3, 3, 2}), 1);
  EXPECT_EQ(argmax(std::array<double, 3>{0, 0, 0}), 0);
}

TEST(TrainConfigTest, RejectsBadValues) {
  TrainConfig c;
  c.gamma = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.buffer = 8;
  EXPECT_THROW(c.validate(), ConfigError);
}

// A terminal transition's target is its reward; a zero-error batch leaves
// the network unchanged and reports zero loss.
TEST(TdUpdate, TerminalTargetIsReward) {
  Rng rng(3);
  QNet net = QNet::initialized(rng);
  const QNet target = net;
  Transition t;
  t.state[0] = 0.5;
  t.action = 4;
  t.terminal = true;
  t.reward = net.forward(t.state)[4];
  ReplayBuffer buf(1);
  buf.push(t);
  AdamState<QNet::kParamCount> opt;
  TrainConfig cfg;
  cfg.batch = 1;
  const QNet before = net;
  EXPECT_NEAR(td_update(net, target, opt, buf, rng, cfg), 0.0, 1e-30);
  EXPECT_TRUE(net == before);
}

TEST(TdUpdate, ReducesLossOnFixedBatch) {
  Rng rng(4);
  QNet net = QNet::initialized(rng);
  const QNet target = net;
  ReplayBuffer buf(64);
  for (int i = 0; i < 64; ++i) {
    Transition t;
    for (double& v : t.state) v = rng.uniform(-1.0, 1.0);
    t.next = t.state;
    t.action = static_cast<int>(rng.index(kActionLevels));
    t.reward = rng.uniform(-1.0, 1.0);
    t.terminal = rng.bernoulli(0.5);
    buf.push(t);
  }
  AdamState<QNet::kParamCount> opt;
  TrainConfig cfg;
  cfg.batch = 32;
  double first = 0.0, last = 0.0;
  for (int it = 0; it < 300; ++it) {
    const double l = td_update(net, target, opt, buf, rng, cfg);
    if (it < 10) first += l;
    if (it >= 290) last += l;
  }
  EXPECT_LT(last, 0.5 * first);
}

TEST(Train, LearnsToyChain) {
  const auto optimal = oracle::ToyChain::optimal_policy(0.9);
  EXPECT_EQ(optimal, (std::vector<int>{1, 1, 0}));
  oracle::ToyChain env;
  TrainConfig cfg;
  cfg.episodes = 1500;
  cfg.seed = 9;
  const auto r = train(env, cfg);
  ASSERT_EQ(r.curve.size(), 1500u);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(argmax(r.net.forward(oracle::ToyChain::encode(s))), optimal[s]);
}

TEST(Train, IsDeterministicPerSeed) {
  oracle::ToyChain e1, e2;
  TrainConfig cfg;
  cfg.episodes = 100;
  cfg.seed = 5;
  const auto a = train(e1, cfg);
  const auto b = train(e2, cfg);
  EXPECT_TRUE(a.net == b.net);
  cfg.seed = 6;
  EXPECT_FALSE(train(e1, cfg).net == a.net);
}

TEST(Train, ZeroEpisodesIsUntrained) {
  oracle::ToyChain env;
  TrainConfig cfg;
  cfg.episodes = 0;
  EXPECT_TRUE(train(env, cfg).untrained);
}

TEST(PolicyTest, RandomIsReproducibleAndInRange) {
  const auto p = Policy::random(12);
  EnvState s;
  std::array<int, kActionLevels> counts{};
  for (std::size_t k = 0; k < 960; ++k) {
    const int a = p.act(s, {k / 96, k % 96});
    ASSERT_GE(a, 0);
    ASSERT_LE(a, 10);
    EXPECT_EQ(a, p.act(s, {k / 96, k % 96}));
    ++counts[static_cast<std::size_t>(a)];
  }
  for (int c : counts) EXPECT_GT(c, 40);
}

TEST(PolicyTest, TabularAndConstant) {
  EXPECT_THROW(Policy::tabular({1, 12}), ContractError);
  const auto t = Policy::tabular({3, 7});
  EXPECT_EQ(t.act_state(1), 7);
  EXPECT_EQ(Policy::constant(4).act(EnvState{}, {0, 0}), 4);
}

TEST(Evaluate, ConstantFullServiceHasZeroReductionOnSeenDays) {
  const auto h = synth_household(2, Archetype::LowActivity);
  EnvConfig cfg;
  const auto days = make_days(h, {0}, cfg);
  const auto e = evaluate_policy(Policy::constant(10), days, TrueReward{}, cfg);
  ASSERT_EQ(e.trajectories.size(), 1u);
  // Day 0 uses its own demand as baseline, so full service gives zero.
  for (double p : provision_series(e.trajectories[0])) EXPECT_NEAR(p, 0.0, 1e-12);
  EXPECT_NEAR(e.mean_reward, 0.0, 1e-12);
}
