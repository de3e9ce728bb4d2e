#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "irl_dr/experiment.hpp"

using namespace irl_dr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("irl_dr_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const json& j) {
  const auto p = (dir / "config.json").string();
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const auto c = ExperimentConfig::from_json(json::parse(R"({
    "config_version": 1, "seed": 9,
    "data": {"source": "synthetic", "archetype": "no_ev"},
    "dqn": {"preset": 2500},
    "true_reward": {"w_ac": 0.2, "w_m": 0.03, "discomfort_mode": "Absolute"},
    "price": {"constant": 0.3}
  })"));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.dqn.episodes, 2500u);
  EXPECT_EQ(c.irl.agent.episodes, 2500u);
  EXPECT_EQ(c.true_reward.w_m[3], 0.03);
  EXPECT_EQ(c.true_reward.discomfort_mode, DiscomfortMode::Absolute);
  EXPECT_EQ(c.price, 0.3);
  EXPECT_EQ(c.irl.value_gamma, 0.99);
  const auto round = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(round.to_json(), c.to_json());
}

TEST(Config, RejectsInvalidValues) {
  const char* bad[] = {
      R"({"config_version": 2})",
      R"({"data": {"source": "synthetic", "archetype": "castle"}})",
      R"({"data": {"source": "csv"}})",
      R"({"dqn": {"preset": 1000}})",
      R"({"dqn": {"gamma": 1.5}})",
      R"({"true_reward": {"revenue_mode": "Both"}})",
      R"({"true_reward": {"w_ac": -1}})",
      R"({"price": {"constant": -0.1}})",
      R"({"days": {"train_dates": ["2018-02-30x"]}})",
      R"({"bench": {"gamma": 1.0}})",
      R"({"irl": {"value_gamma": 2}})",
      R"({"seed": "abc"})",
  };
  for (const char* text : bad) EXPECT_THROW(ExperimentConfig::from_json(json::parse(text)), ConfigError) << text;
  EXPECT_THROW(ExperimentConfig::load("/nonexistent/config.json"), ConfigError);
}

TEST(Workspace, SubsampleIsEvenlySpaced) {
  std::vector<std::size_t> days(100);
  std::iota(days.begin(), days.end(), 0);
  EXPECT_EQ(subsample(days, 4), (std::vector<std::size_t>{0, 25, 50, 75}));
  EXPECT_EQ(subsample(days, 0).size(), 100u);
  EXPECT_EQ(subsample(days, 500).size(), 100u);
}

TEST(Workspace, ExplicitDatesMustExist) {
  auto c = ExperimentConfig::from_json(json::parse(R"({"days": {"train_dates": ["2019-01-01"]}})"));
  EXPECT_THROW(open_workspace(c), ConfigError);
}

TEST(TrajectoryCsv, RoundTripsExactly) {
  const auto h = synth_household(1, Archetype::Full);
  const EnvConfig env;
  const auto day = make_day_data(h, 100, env);
  Rng rng(2);
  const auto t = run_episode(day, [&](const EnvState&, SlotIndex) { return static_cast<int>(rng.index(11)); },
                             TrueReward{}, env);
  const auto dir = scratch("traj");
  const auto p = (dir / "t.csv").string();
  std::ofstream(p) << trajectory_csv(t);
  const auto back = read_trajectory_csv(p);
  ASSERT_EQ(back.steps.size(), t.steps.size());
  EXPECT_EQ(back.date, t.date);
  for (std::size_t k = 0; k < t.steps.size(); ++k) {
    EXPECT_EQ(back.steps[k].reward, t.steps[k].reward);
    EXPECT_EQ(back.steps[k].phi, t.steps[k].phi);
    EXPECT_EQ(back.steps[k].dispatch.total(), t.steps[k].dispatch.total());
    EXPECT_EQ(back.steps[k].dispatch.decisions, t.steps[k].dispatch.decisions);
    EXPECT_EQ(back.steps[k].state.ts_delays, t.steps[k].state.ts_delays);
  }
  EXPECT_THROW(read_trajectory_csv((dir / "missing.csv").string()), ArtifactError);
}

TEST(Workflows, BenchWritesReport) {
  auto c = ExperimentConfig::from_json(json::parse(R"({"bench": {"grid": 4}})"));
  c.out_dir = scratch("bench").string();
  const auto files = cmd_bench_exact(c);
  EXPECT_EQ(files.size(), 3u);
  std::ifstream in(c.out_dir + "/bench/report.json");
  const auto j = json::parse(in);
  EXPECT_EQ(j.at("runs").size(), 4u);
  EXPECT_TRUE(fs::exists(c.out_dir + "/manifest-bench-exact.json"));
}

TEST(Workflows, LearnRewardNeedsExpertArtifacts) {
  auto c = ExperimentConfig::from_json(
      json::parse(R"({"days": {"train_dates": ["2018-06-10"], "test_dates": ["2018-07-10"]}})"));
  c.out_dir = scratch("noexpert").string();
  EXPECT_THROW(cmd_learn_reward(c), ArtifactError);
  EXPECT_THROW(cmd_evaluate(c), ArtifactError);
}

TEST(Workflows, SmallPipelineProducesTables) {
  auto c = ExperimentConfig::from_json(json::parse(R"({
    "seed": 3,
    "data": {"source": "synthetic", "archetype": "no_dishwasher", "seed": 2},
    "days": {"train_dates": ["2018-06-20", "2018-06-21"], "test_dates": ["2018-07-05", "2018-07-06"]},
    "dqn": {"episodes": 20}, "irl": {"iterations": 2}
  })"));
  c.out_dir = scratch("pipeline").string();
  cmd_simulate_expert(c);
  cmd_learn_reward(c);
  cmd_evaluate(c);
  for (const char* f : {"expert/expert.bin", "expert/training_curve.csv", "expert/trajectories/2018-06-20.csv",
                        "irl/irl_result.json", "eval/metrics_per_day.csv", "eval/metrics_summary.csv",
                        "eval/provision.csv", "eval/schedule_grid.csv", "eval/reward_by_iteration.csv",
                        "eval/provision.svg", "eval/schedule.svg", "manifest-evaluate.json", "config.resolved.json"})
    EXPECT_TRUE(fs::exists(c.out_dir + "/" + f)) << f;
  std::ifstream in(c.out_dir + "/eval/metrics_summary.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "metric,average,minimum,maximum,median");

  const auto result = json::parse(std::ifstream(c.out_dir + "/irl/irl_result.json"));
  EXPECT_EQ(result.at("margin_history").size(), result.at("iterations_run").get<std::size_t>());
  EXPECT_LE(result.at("iterations_run").get<std::size_t>(), 3u);
  for (const auto& it : result.at("iterations"))
    for (double a : it.at("alpha")) EXPECT_LE(std::abs(a), 1.0);

  std::ifstream prov(c.out_dir + "/eval/provision.csv");
  std::string line;
  std::size_t rows = 0;
  std::getline(prov, line);
  while (std::getline(prov, line)) ++rows;
  EXPECT_EQ(rows, 2u * 2u * 96u);

  std::ifstream grid(c.out_dir + "/eval/schedule_grid.csv");
  std::getline(grid, line);
  std::size_t cells = 0;
  while (std::getline(grid, line)) {
    const auto f = detail::split_csv_line(line);
    ASSERT_EQ(f.size(), 5u);
    const double v = std::stod(f[4]);
    if (f[3] == "ac") {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    } else {
      EXPECT_TRUE(v == -1.0 || v == 0.0 || v == 1.0) << line;
    }
    ++cells;
  }
  EXPECT_GT(cells, 0u);
}

#ifdef IRL_DR_CLI
TEST(Cli, ExitCodes) {
  const std::string cli = IRL_DR_CLI;
  const auto dir = scratch("cli");
  auto run = [](const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  EXPECT_EQ(run(cli + " evaluate --config /nonexistent.json"), 2);
  EXPECT_EQ(run(cli + " frobnicate --config x"), 2);
  const auto bad = write_config(dir, json::parse(R"({"dqn": {"preset": 7}})"));
  EXPECT_EQ(run(cli + " simulate-expert --config " + bad), 2);
  const auto ok = write_config(dir, json::parse(R"({"bench": {"grid": 3}})"));
  EXPECT_EQ(run(cli + " bench-exact --config " + ok + " --out " + (dir / "out").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "bench" / "report.csv"));
  const auto eval_cfg = write_config(
      dir, json::parse(R"({"days": {"train_dates": ["2018-06-10"], "test_dates": ["2018-07-10"]}})"));
  EXPECT_EQ(run(cli + " evaluate --config " + eval_cfg + " --out " + (dir / "empty").string()), 2);

  const auto csv_cfg = write_config(dir, json::parse(R"({"data": {"source": "csv", "path": "no_such_meter.csv",
    "mapping": {"columns": {}}}})"));
  const auto log = (dir / "stderr.txt").string();
  const int status = std::system((cli + " simulate-expert --config " + csv_cfg + " 2>" + log + " >/dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);
  std::stringstream err;
  err << std::ifstream(log).rdbuf();
  EXPECT_NE(err.str().find("no_such_meter.csv"), std::string::npos) << err.str();
}
#endif
