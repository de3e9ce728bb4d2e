// Command-line front end: simulate-expert, learn-reward, evaluate, bench-exact.
//
// Exit codes: 0 success, 1 internal failure, 2 configuration, input data or
// missing-artifact error.

#include <iostream>

#include <CLI11.hpp>

#include "irl_dr/experiment.hpp"

namespace {

using Workflow = std::vector<std::string> (*)(const irl_dr::ExperimentConfig&);

int run(Workflow wf, const std::string& config, std::optional<std::uint64_t> seed, const std::string& out) {
  try {
    auto cfg = irl_dr::ExperimentConfig::load(config);
    if (seed) {
      cfg.seed = *seed;
      cfg.dqn.seed = *seed;
      cfg.irl.seed = *seed;
    }
    if (!out.empty()) cfg.out_dir = out;
    const auto files = wf(cfg);
    for (const auto& f : files) std::cout << cfg.out_dir << '/' << f << '\n';
    return 0;
  } catch (const irl_dr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const irl_dr::LoadError& e) {
    std::cerr << "load error: " << e.what() << '\n';
  } catch (const irl_dr::ArtifactError& e) {
    std::cerr << "artifact error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse reinforcement learning for household demand response"};
  app.require_subcommand(1);

  struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
  };
  struct Command {
    const char* name;
    const char* help;
    Workflow fn;
  };
  const Command commands[] = {
      {"simulate-expert", "Train the expert under the true reward and record its days", &irl_dr::cmd_simulate_expert},
      {"learn-reward", "Run the IRL loop against the recorded expert", &irl_dr::cmd_learn_reward},
      {"evaluate", "Compare expert and learned policies on the test days", &irl_dr::cmd_evaluate},
      {"bench-exact", "Exact IRL on gridworlds over a lambda sweep", &irl_dr::cmd_bench_exact},
  };
  std::vector<Options> opts(std::size(commands));
  int code = 0;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].name, commands[i].help);
    sub->add_option("--config", opts[i].config, "Experiment config or run manifest")->required();
    sub->add_option("--seed", opts[i].seed, "Override the master seed");
    sub->add_option("--out", opts[i].out, "Override the output directory");
    sub->callback([&, i] { code = run(commands[i].fn, opts[i].config, opts[i].seed, opts[i].out); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return code;
}
