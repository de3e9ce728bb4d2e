#pragma once

// Experiment configuration and the four workflows behind the command line:
// simulate-expert, learn-reward, evaluate and bench-exact. Every workflow
// writes its artifacts under the output directory together with a manifest
// (resolved config, seeds, artifact checksums) that reproduces the run.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "irl_dr/data_io.hpp"
#include "irl_dr/dqn.hpp"
#include "irl_dr/environment.hpp"
#include "irl_dr/irl_exact.hpp"
#include "irl_dr/irl_sampled.hpp"
#include "irl_dr/metrics.hpp"
#include "irl_dr/svg.hpp"

namespace irl_dr {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kConfigVersion = 1;

/// Required input artifact is missing or unreadable (user error).
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataSourceConfig {
  std::string source = "synthetic";  // synthetic | csv | cache
  std::string archetype = "full";
  std::uint64_t synth_seed = 1;
  std::string path;
  json mapping = json::object();
};

struct DayConfig {
  SplitSpec split;
  bool allow_missing = false;
  std::vector<std::string> train_dates;
  std::vector<std::string> test_dates;
  /// Evenly spaced subsample when positive.
  std::size_t max_train_days = 0;
  std::size_t max_test_days = 0;
};

struct BenchConfig {
  std::size_t grid = 5;
  double gamma = 0.9;
  std::vector<double> lambdas{0.1, 0.3, 1.0, 3.0};
  double r_max = 1.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  DataSourceConfig data;
  DayConfig days;
  double price = 0.1;
  std::string price_profile;
  int max_ts_delay = 0;
  TrueReward true_reward;
  TrainConfig dqn;
  IrlConfig irl;
  BenchConfig bench;
  /// Directory the config file was read from; relative paths resolve here.
  std::string base_dir = ".";

  std::string resolve(const std::string& p) const {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).lexically_normal().string();
  }

  json to_json() const;
  static ExperimentConfig from_json(const json& j, const std::string& base_dir = ".");
  static ExperimentConfig load(const std::string& path);
};

namespace detail {

inline std::size_t episodes_from(const json& j, std::size_t fallback, const char* section) {
  if (j.contains("episodes") && !j.at("episodes").is_null()) return j.at("episodes").get<std::size_t>();
  if (j.contains("preset")) {
    const auto p = j.at("preset").get<std::size_t>();
    if (p != 1500 && p != 2500 && p != 3500)
      throw ConfigError(std::string(section) + ".preset must be 1500, 2500 or 3500 (or set episodes)");
    return p;
  }
  return fallback;
}

inline std::pair<unsigned, unsigned> parse_month_day(const std::string& s) {
  unsigned m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%2u-%2u", &m, &d) != 2 || m < 1 || m > 12 || d < 1 || d > 31)
    throw ConfigError("days.split: bad month-day '" + s + "' (expected MM-DD)");
  return {m, d};
}

inline std::vector<DateRange> parse_ranges(const json& j) {
  std::vector<DateRange> out;
  for (const auto& r : j) {
    const auto [m0, d0] = parse_month_day(r.at(0).get<std::string>());
    const auto [m1, d1] = parse_month_day(r.at(1).get<std::string>());
    out.push_back({m0, d0, m1, d1});
  }
  return out;
}

inline json ranges_to_json(const std::vector<DateRange>& ranges) {
  json out = json::array();
  char a[8], b[8];
  for (const auto& r : ranges) {
    std::snprintf(a, sizeof a, "%02u-%02u", r.start_month, r.start_day);
    std::snprintf(b, sizeof b, "%02u-%02u", r.end_month, r.end_day);
    out.push_back({a, b});
  }
  return out;
}

}  // namespace detail

inline json ExperimentConfig::to_json() const {
  json j;
  j["config_version"] = kConfigVersion;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["data"] = {{"source", data.source}, {"archetype", data.archetype}, {"seed", data.synth_seed},
               {"path", data.path}, {"mapping", data.mapping}};
  j["days"] = {{"split", {{"train", detail::ranges_to_json(days.split.train)}, {"test", detail::ranges_to_json(days.split.test)}}},
               {"allow_missing", days.allow_missing},
               {"train_dates", days.train_dates},
               {"test_dates", days.test_dates},
               {"max_train_days", days.max_train_days},
               {"max_test_days", days.max_test_days}};
  j["price"] = {{"constant", price}, {"profile", price_profile}};
  j["environment"] = {{"max_ts_delay", max_ts_delay}};
  j["true_reward"] = {{"revenue_mode", to_string(true_reward.revenue_mode)},
                      {"discomfort_mode", to_string(true_reward.discomfort_mode)},
                      {"w_ac", true_reward.w_ac},
                      {"w_m", true_reward.w_m},
                      {"normalized", true_reward.normalized}};
  j["dqn"] = {{"episodes", dqn.episodes},         {"batch", dqn.batch},
              {"gamma", dqn.gamma},               {"tau", dqn.tau},
              {"learning_rate", dqn.learning_rate}, {"epsilon_start", dqn.epsilon_start},
              {"epsilon_decay", dqn.epsilon_decay}, {"epsilon_floor", dqn.epsilon_floor},
              {"buffer", dqn.buffer}};
  j["irl"] = {{"iterations", irl.iterations},
              {"margin_tolerance", irl.margin_tolerance},
              {"value_gamma", irl.value_gamma},
              {"episodes", irl.agent.episodes}};
  j["bench"] = {{"grid", bench.grid}, {"gamma", bench.gamma}, {"lambdas", bench.lambdas}, {"r_max", bench.r_max}};
  return j;
}

inline ExperimentConfig ExperimentConfig::from_json(const json& root, const std::string& base) {
  ExperimentConfig c;
  c.base_dir = base;
  try {
    const int version = root.value("config_version", kConfigVersion);
    if (version != kConfigVersion) throw ConfigError("unsupported config_version " + std::to_string(version));
    c.seed = root.value("seed", c.seed);
    c.out_dir = root.value("out_dir", c.out_dir);
    if (root.contains("data")) {
      const auto& d = root.at("data");
      c.data.source = d.value("source", c.data.source);
      c.data.archetype = d.value("archetype", c.data.archetype);
      c.data.synth_seed = d.value("seed", c.data.synth_seed);
      c.data.path = d.value("path", std::string{});
      c.data.mapping = d.value("mapping", json::object());
    }
    if (c.data.source != "synthetic" && c.data.source != "csv" && c.data.source != "cache")
      throw ConfigError("data.source must be synthetic, csv or cache");
    if (c.data.source == "synthetic" && !parse_archetype(c.data.archetype))
      throw ConfigError("data.archetype: unknown archetype '" + c.data.archetype + "'");
    if (c.data.source != "synthetic" && c.data.path.empty()) throw ConfigError("data.path is required for " + c.data.source);
    if (root.contains("days")) {
      const auto& d = root.at("days");
      if (d.contains("split")) {
        if (d.at("split").contains("train")) c.days.split.train = detail::parse_ranges(d.at("split").at("train"));
        if (d.at("split").contains("test")) c.days.split.test = detail::parse_ranges(d.at("split").at("test"));
      }
      c.days.allow_missing = d.value("allow_missing", false);
      c.days.train_dates = d.value("train_dates", std::vector<std::string>{});
      c.days.test_dates = d.value("test_dates", std::vector<std::string>{});
      c.days.max_train_days = d.value("max_train_days", std::size_t{0});
      c.days.max_test_days = d.value("max_test_days", std::size_t{0});
      for (const auto& s : c.days.train_dates)
        if (!parse_day(s)) throw ConfigError("days.train_dates: bad date '" + s + "'");
      for (const auto& s : c.days.test_dates)
        if (!parse_day(s)) throw ConfigError("days.test_dates: bad date '" + s + "'");
    }
    if (root.contains("price")) {
      const auto& p = root.at("price");
      c.price = p.value("constant", c.price);
      c.price_profile = p.value("profile", std::string{});
      if (!(c.price >= 0.0)) throw ConfigError("price.constant must be >= 0");
    }
    if (root.contains("environment")) c.max_ts_delay = root.at("environment").value("max_ts_delay", 0);
    if (c.max_ts_delay < 0) throw ConfigError("environment.max_ts_delay must be >= 0");
    if (root.contains("true_reward")) {
      const auto& t = root.at("true_reward");
      const auto rev = parse_revenue_mode(t.value("revenue_mode", std::string("ReductionOnly")));
      const auto dis = parse_discomfort_mode(t.value("discomfort_mode", std::string("Quadratic")));
      if (!rev) throw ConfigError("true_reward.revenue_mode must be ReductionOnly or Bidirectional");
      if (!dis) throw ConfigError("true_reward.discomfort_mode must be None, Absolute or Quadratic");
      c.true_reward.revenue_mode = *rev;
      c.true_reward.discomfort_mode = *dis;
      c.true_reward.w_ac = t.value("w_ac", c.true_reward.w_ac);
      if (t.contains("w_m")) {
        if (t.at("w_m").is_number()) c.true_reward.w_m.fill(t.at("w_m").get<double>());
        else c.true_reward.w_m = t.at("w_m").get<std::array<double, kMaxTimeShiftable>>();
      }
      c.true_reward.normalized = t.value("normalized", false);
      if (c.true_reward.w_ac < 0.0 ||
          std::any_of(c.true_reward.w_m.begin(), c.true_reward.w_m.end(), [](double w) { return w < 0.0; }))
        throw ConfigError("true_reward weights must be >= 0");
    }
    if (root.contains("dqn")) {
      const auto& d = root.at("dqn");
      c.dqn.episodes = detail::episodes_from(d, c.dqn.episodes, "dqn");
      c.dqn.batch = d.value("batch", c.dqn.batch);
      c.dqn.gamma = d.value("gamma", c.dqn.gamma);
      c.dqn.tau = d.value("tau", c.dqn.tau);
      c.dqn.learning_rate = d.value("learning_rate", c.dqn.learning_rate);
      c.dqn.epsilon_start = d.value("epsilon_start", c.dqn.epsilon_start);
      c.dqn.epsilon_decay = d.value("epsilon_decay", c.dqn.epsilon_decay);
      c.dqn.epsilon_floor = d.value("epsilon_floor", c.dqn.epsilon_floor);
      c.dqn.buffer = d.value("buffer", c.dqn.buffer);
    }
    c.dqn.validate();
    c.irl.agent = c.dqn;
    if (root.contains("irl")) {
      const auto& i = root.at("irl");
      c.irl.iterations = i.value("iterations", c.irl.iterations);
      c.irl.margin_tolerance = i.value("margin_tolerance", c.irl.margin_tolerance);
      c.irl.value_gamma = i.value("value_gamma", c.irl.value_gamma);
      c.irl.agent.episodes = detail::episodes_from(i, c.dqn.episodes, "irl");
    }
    if (!(c.irl.value_gamma >= 0.0 && c.irl.value_gamma <= 1.0)) throw ConfigError("irl.value_gamma must lie in [0, 1]");
    if (!(c.irl.margin_tolerance >= 0.0)) throw ConfigError("irl.margin_tolerance must be >= 0");
    if (root.contains("bench")) {
      const auto& b = root.at("bench");
      c.bench.grid = b.value("grid", c.bench.grid);
      c.bench.gamma = b.value("gamma", c.bench.gamma);
      c.bench.lambdas = b.value("lambdas", c.bench.lambdas);
      c.bench.r_max = b.value("r_max", c.bench.r_max);
      if (c.bench.grid < 2) throw ConfigError("bench.grid must be >= 2");
      if (!(c.bench.gamma > 0.0 && c.bench.gamma < 1.0)) throw ConfigError("bench.gamma must lie in (0, 1)");
      if (!(c.bench.r_max > 0.0)) throw ConfigError("bench.r_max must be positive");
      for (double l : c.bench.lambdas)
        if (!(l >= 0.0)) throw ConfigError("bench.lambdas must be >= 0");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.irl.seed = c.seed;
  c.dqn.seed = c.seed;
  return c;
}

/// Reads a config file, or the "config" object of a run manifest.
inline ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  std::string base = fs::path(path).parent_path().string();
  if (base.empty()) base = ".";
  if (j.contains("manifest_version")) {
    base = j.value("base_dir", base);
    j = j.at("config");
  }
  return from_json(j, base);
}

// ---------------------------------------------------------------------------
// Artifact helpers.

/// FNV-1a 64-bit digest of a file, as 16 hex digits.
inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

class ArtifactLog {
 public:
  explicit ArtifactLog(std::string out_dir) : out_(std::move(out_dir)) {}

  std::string path(const std::string& rel) const {
    const fs::path p = fs::path(out_) / rel;
    fs::create_directories(p.parent_path());
    return p.string();
  }

  void record(const std::string& rel) { files_.push_back(rel); }

  void write_text(const std::string& rel, const std::string& text) {
    std::ofstream out(path(rel), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path(rel));
    out << text;
    record(rel);
  }

  void write_json(const std::string& rel, const json& j) { write_text(rel, j.dump(2) + "\n"); }

  const std::vector<std::string>& files() const { return files_; }
  const std::string& root() const { return out_; }

 private:
  std::string out_;
  std::vector<std::string> files_;
};

inline void write_manifest(ArtifactLog& log, const std::string& command, const ExperimentConfig& cfg, const json& seeds) {
  json m;
  m["manifest_version"] = 1;
  m["command"] = command;
  m["config"] = cfg.to_json();
  m["base_dir"] = cfg.base_dir;
  m["seeds"] = seeds;
  json arts = json::array();
  for (const auto& rel : log.files()) {
    const auto p = (fs::path(log.root()) / rel).string();
    arts.push_back({{"path", rel}, {"bytes", fs::file_size(p)}, {"fnv1a64", file_digest(p)}});
  }
  m["artifacts"] = arts;
  std::ofstream out(log.path("manifest-" + command + ".json"));
  out << m.dump(2) << '\n';
  std::ofstream snap(log.path("config.resolved.json"));
  snap << cfg.to_json().dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Trajectory CSV.
//
// Columns: date, slot, pc_demand, ns_demand, delay_0..3, price, baseline,
// level, ns, pc, ts_0..3, decision_0..3, open_0..3, phi_0..5, reward.
// Numbers use 17 significant digits so files reload bit-exactly.

inline std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream os;
  os << "date,slot,pc_demand,ns_demand,delay_0,delay_1,delay_2,delay_3,price,baseline,level,ns,pc,ts_0,ts_1,ts_2,ts_3,"
        "decision_0,decision_1,decision_2,decision_3,open_0,open_1,open_2,open_3,phi_0,phi_1,phi_2,phi_3,phi_4,phi_5,"
        "reward\n";
  const std::string date = format_day(t.date);
  for (std::size_t k = 0; k < t.steps.size(); ++k) {
    const auto& s = t.steps[k];
    os << date << ',' << k << ',' << fmt(s.state.pc_demand) << ',' << fmt(s.state.ns_demand);
    for (int d : s.state.ts_delays) os << ',' << d;
    os << ',' << fmt(s.state.price) << ',' << fmt(s.state.baseline) << ',' << s.action.level << ','
       << fmt(s.dispatch.ns) << ',' << fmt(s.dispatch.pc);
    for (double v : s.dispatch.ts) os << ',' << fmt(v);
    for (auto d : s.dispatch.decisions) os << ',' << to_string(d);
    for (int d : s.dispatch.open_delays) os << ',' << d;
    for (double v : s.phi) os << ',' << fmt(v);
    os << ',' << fmt(s.reward) << '\n';
  }
  return os.str();
}

inline Trajectory read_trajectory_csv(const std::string& path, const std::string& household_id = {}) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("missing trajectory file " + path);
  std::string line;
  std::getline(in, line);
  Trajectory t;
  t.household = household_id;
  std::size_t row = 1;
  auto decision = [&](const std::string& s) {
    for (auto d : {TsDecision::Idle, TsDecision::Running, TsDecision::Deferred, TsDecision::Started, TsDecision::ForcedStart})
      if (s == to_string(d)) return d;
    throw LoadError("trajectory: unknown decision '" + s + "'", row);
  };
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != 32) throw LoadError("trajectory: expected 32 fields", row);
    const auto date = parse_day(c[0]);
    if (!date) throw LoadError("trajectory: bad date", row, "date");
    t.date = *date;
    StepRecord s;
    std::size_t i = 2;
    auto num = [&]() { return std::stod(c[i++]); };
    auto integer = [&]() { return std::stoi(c[i++]); };
    s.state.pc_demand = num();
    s.state.ns_demand = num();
    for (int& d : s.state.ts_delays) d = integer();
    s.state.price = num();
    s.state.baseline = num();
    s.action = Action::checked(integer());
    s.dispatch.ns = num();
    s.dispatch.pc = num();
    for (double& v : s.dispatch.ts) v = num();
    for (auto& d : s.dispatch.decisions) d = decision(c[i++]);
    for (int& d : s.dispatch.open_delays) d = integer();
    for (double& v : s.phi) v = num();
    s.reward = num();
    t.steps.push_back(s);
  }
  if (t.steps.size() != kSlotsPerDay) throw LoadError("trajectory " + path + " does not have 96 steps");
  return t;
}

// ---------------------------------------------------------------------------
// Shared set-up.

struct Workspace {
  Household household;
  EnvConfig env;
  ObservationScaler scaler;
  std::vector<std::size_t> train_days;
  std::vector<std::size_t> test_days;
  LoadReport report;
  bool loaded_csv = false;
};

inline std::vector<std::size_t> subsample(const std::vector<std::size_t>& days, std::size_t max) {
  if (max == 0 || days.size() <= max) return days;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < max; ++k) out.push_back(days[k * days.size() / max]);
  return out;
}

inline PriceModel load_price_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open price profile '" + path + "'");
  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto cells = detail::split_csv_line(line);
    if (cells.empty() || cells.back().empty()) continue;
    const auto v = detail::parse_number(cells.back());
    if (!v) {
      if (row == 1) continue;  // header
      throw LoadError("price profile: unparseable value", row);
    }
    values.push_back(*v);
  }
  try {
    return PriceModel::profile(std::move(values));
  } catch (const ContractError& e) {
    throw LoadError(std::string("price profile '") + path + "': " + e.what());
  }
}

inline Workspace open_workspace(const ExperimentConfig& cfg) {
  Workspace w;
  if (cfg.data.source == "synthetic") {
    w.household = synth_household(cfg.data.synth_seed, *parse_archetype(cfg.data.archetype));
  } else if (cfg.data.source == "csv") {
    const auto path = cfg.resolve(cfg.data.path);
    if (!fs::exists(path)) throw LoadError("data path does not exist: " + path);
    auto loaded = load_household(path, ColumnMapping::from_json(cfg.data.mapping));
    w.household = std::move(loaded.household);
    w.report = std::move(loaded.report);
    w.loaded_csv = true;
  } else {
    const auto path = cfg.resolve(cfg.data.path);
    if (!fs::exists(path + ".json")) throw LoadError("data path does not exist: " + path + ".json");
    w.household = load_household_cache(path);
  }
  w.env.price = cfg.price_profile.empty() ? PriceModel::constant(cfg.price) : load_price_profile(cfg.resolve(cfg.price_profile));
  w.env.max_ts_delay = cfg.max_ts_delay;
  w.scaler = make_scaler(w.household, w.env);

  auto explicit_days = [&](const std::vector<std::string>& dates) {
    std::vector<std::size_t> out;
    for (const auto& s : dates) {
      const auto idx = w.household.day_of(*parse_day(s));
      if (!idx) throw ConfigError("date " + s + " is not in the household data");
      out.push_back(*idx);
    }
    return out;
  };
  if (!cfg.days.train_dates.empty() || !cfg.days.test_dates.empty()) {
    w.train_days = explicit_days(cfg.days.train_dates);
    w.test_days = explicit_days(cfg.days.test_dates);
  } else {
    const auto s = split(w.household, cfg.days.split, cfg.days.allow_missing);
    w.train_days = s.train;
    w.test_days = s.test;
  }
  w.train_days = subsample(w.train_days, cfg.days.max_train_days);
  w.test_days = subsample(w.test_days, cfg.days.max_test_days);
  if (w.train_days.empty()) throw ConfigError("no training days selected");
  return w;
}

inline std::string trajectory_name(DayNumber d) { return format_day(d) + ".csv"; }

inline json scaler_json(const ObservationScaler& s) {
  return {{"demand_scale", s.demand_scale}, {"price_scale", s.price_scale}};
}

inline ObservationScaler scaler_from_json(const json& j) {
  return {j.at("demand_scale").get<double>(), j.at("price_scale").get<double>()};
}

inline std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream os;
  os << "episode,epsilon,reward\n";
  for (const auto& p : curve) os << p.episode << ',' << fmt(p.epsilon) << ',' << fmt(p.reward) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Workflows.

/// Trains the expert under the configured true reward and records its
/// greedy trajectories on every training day.
inline std::vector<std::string> cmd_simulate_expert(const ExperimentConfig& cfg) {
  const Workspace w = open_workspace(cfg);
  ArtifactLog log(cfg.out_dir);
  if (w.loaded_csv) log.write_json("load_report.json", w.report.to_json());
  const auto days = make_days(w.household, w.train_days, w.env);
  TrainConfig tc = cfg.dqn;
  tc.seed = mix_seed(cfg.seed, 0xE);
  const auto run = simulate_expert(days, days, w.scaler, cfg.true_reward, tc, w.env, w.household.id());

  save_checkpoint(log.path("expert/expert"), run.training.net,
                  {{"role", "expert"},
                   {"household", w.household.id()},
                   {"episodes", tc.episodes},
                   {"untrained", run.untrained},
                   {"seed", tc.seed},
                   {"scaler", scaler_json(w.scaler)}});
  log.record("expert/expert.bin");
  log.record("expert/expert.json");
  log.write_text("expert/training_curve.csv", curve_csv(run.training.curve));
  for (const auto& t : run.trajectories) log.write_text("expert/trajectories/" + trajectory_name(t.date), trajectory_csv(t));
  write_manifest(log, "simulate-expert", cfg, {{"master", cfg.seed}, {"expert_agent", tc.seed}});
  return log.files();
}

inline std::vector<Trajectory> read_expert_trajectories(const ExperimentConfig& cfg, const Workspace& w,
                                                        const std::vector<std::size_t>& days) {
  std::vector<Trajectory> out;
  for (std::size_t d : days) {
    const auto p = (fs::path(cfg.out_dir) / "expert" / "trajectories" / trajectory_name(w.household.dates()[d])).string();
    if (!fs::exists(p)) throw ArtifactError("missing expert artifact " + p + " (run simulate-expert first)");
    out.push_back(read_trajectory_csv(p, w.household.id()));
  }
  return out;
}

inline json irl_result_json(const IrlResult& r, const IrlConfig& cfg) {
  json it = json::array();
  for (std::size_t k = 0; k < r.history.size(); ++k) {
    const auto& h = r.history[k];
    json e = {{"iteration", k},
              {"alpha", h.alpha},
              {"margins", h.margins},
              {"min_margin", h.min_margin},
              {"maxmin_margin", h.maxmin},
              {"objective", h.objective},
              {"proxy_mae", h.proxy_mae ? json(*h.proxy_mae) : json(nullptr)},
              {"checkpoint", h.proxy_mae ? json("irl/agent_" + std::to_string(k)) : json(nullptr)}};
    it.push_back(e);
  }
  std::vector<double> margins;
  for (const auto& h : r.history) margins.push_back(h.min_margin);
  return {{"alpha", r.alpha},
          {"selected_iteration", r.selected},
          {"stop_reason", to_string(r.stop)},
          {"iterations_run", r.history.size()},
          {"agents_trained", r.archive.size()},
          {"margin_history", margins},
          {"value_gamma", cfg.value_gamma},
          {"iterations", it}};
}

/// Runs the IRL loop against the recorded expert trajectories.
inline std::vector<std::string> cmd_learn_reward(const ExperimentConfig& cfg) {
  const Workspace w = open_workspace(cfg);
  const auto expert = read_expert_trajectories(cfg, w, w.train_days);
  ArtifactLog log(cfg.out_dir);
  IrlProblem problem{expert, make_days(w.household, w.train_days, w.env), w.scaler, w.env};
  const auto result = run_irl(problem, cfg.irl, [&](std::size_t k, const Features& alpha, const TrainResult& tr) {
    const std::string base = "irl/agent_" + std::to_string(k);
    save_checkpoint(log.path(base), tr.net,
                    {{"role", "learned"}, {"iteration", k}, {"alpha", alpha}, {"scaler", scaler_json(w.scaler)}});
    log.record(base + ".bin");
    log.record(base + ".json");
  });
  log.write_json("irl/irl_result.json", irl_result_json(result, cfg.irl));
  json seeds = {{"master", cfg.seed}, {"random_policy", mix_seed(cfg.seed, 1)}};
  for (std::size_t k = 0; k < result.archive.size(); ++k) seeds["agent_" + std::to_string(k)] = mix_seed(cfg.seed, 100 + k);
  write_manifest(log, "learn-reward", cfg, seeds);
  return log.files();
}

inline Policy load_policy(const std::string& base, json* meta_out = nullptr) {
  if (!fs::exists(base + ".json")) throw ArtifactError("missing checkpoint " + base + ".json");
  QNet net;
  const auto meta = load_checkpoint(base, net);
  if (meta_out) *meta_out = meta;
  return Policy::greedy(std::move(net), scaler_from_json(meta.at("scaler")));
}

/// Schedule-grid value for a time-shiftable slot: 1 while an
/// incoming request waits, 0 when it is served on arrival (or nothing
/// happens), -1 when the appliance starts without a request arriving then.
inline int schedule_code(const DayData& day, const StepRecord& s, std::size_t m, std::size_t slot) {
  const auto d = s.dispatch.decisions[m];
  if (d == TsDecision::Deferred) return 1;
  if ((d == TsDecision::Started || d == TsDecision::ForcedStart) && !day.arrival[m][slot]) return -1;
  return 0;
}

inline double ac_service(const StepRecord& s) { return s.state.pc_demand > 0.0 ? s.dispatch.pc / s.state.pc_demand : 1.0; }

/// Rolls out the expert and the selected learned agent on the test days and
/// writes comparison tables and plot data.
inline std::vector<std::string> cmd_evaluate(const ExperimentConfig& cfg) {
  const Workspace w = open_workspace(cfg);
  if (w.test_days.empty()) throw ConfigError("no test days selected");
  const fs::path out(cfg.out_dir);
  const auto result_path = (out / "irl" / "irl_result.json").string();
  if (!fs::exists((out / "expert" / "expert.json").string()))
    throw ArtifactError("missing expert artifact " + (out / "expert" / "expert.json").string());
  if (!fs::exists(result_path)) throw ArtifactError("missing learned artifact " + result_path + " (run learn-reward first)");
  std::ifstream rin(result_path);
  const json result = json::parse(rin);

  const Policy expert = load_policy((out / "expert" / "expert").string());
  const std::size_t selected = result.at("selected_iteration").get<std::size_t>();
  const auto& sel = result.at("iterations").at(selected);
  if (sel.at("checkpoint").is_null()) throw ArtifactError("selected IRL iteration has no trained agent");
  const Policy learned = load_policy((out / sel.at("checkpoint").get<std::string>()).string());
  const LearnedReward learned_spec{sel.at("alpha").get<Features>()};

  const auto days = make_days(w.household, w.test_days, w.env);
  const auto ex = evaluate_policy(expert, days, cfg.true_reward, w.env, w.household.id());
  const auto le = evaluate_policy(learned, days, learned_spec, w.env, w.household.id());

  ArtifactLog log(cfg.out_dir);
  std::ostringstream per_day, prov, grid;
  per_day << "date,mae,mse,pearson\n";
  prov << "date,slot,policy,provision,baseline,realized\n";
  grid << "date,slot,policy,appliance,value\n";
  std::vector<double> maes, mses, pears;
  bool any_undefined = false;
  const auto layout = HouseholdLayout::of(w.household);
  for (std::size_t k = 0; k < days.size(); ++k) {
    const auto a = provision_series(ex.trajectories[k]);
    const auto b = provision_series(le.trajectories[k]);
    const auto m = compare_series(a, b);
    maes.push_back(m.mae);
    mses.push_back(m.mse);
    if (m.pearson)
      pears.push_back(*m.pearson);
    else
      any_undefined = true;
    const std::string date = format_day(days[k].date);
    per_day << date << ',' << fmt_short(m.mae) << ',' << fmt_short(m.mse) << ','
            << (m.pearson ? fmt_short(*m.pearson) : std::string("undefined")) << '\n';
    for (const auto* pair : {&ex, &le}) {
      const char* name = pair == &ex ? "expert" : "learned";
      const auto& traj = pair->trajectories[k];
      for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
        const auto& st = traj.steps[s];
        prov << date << ',' << s << ',' << name << ',' << fmt_short(provision(st.state.baseline, st.dispatch.total()))
             << ',' << fmt_short(st.state.baseline) << ',' << fmt_short(st.dispatch.total()) << '\n';
        for (std::size_t m2 = 0; m2 < kMaxTimeShiftable; ++m2)
          if (layout.ts[m2])
            grid << date << ',' << s << ',' << name << ',' << layout.ts_names[m2] << ','
                 << schedule_code(days[k], st, m2, s) << '\n';
        if (layout.pc) grid << date << ',' << s << ',' << name << ",ac," << fmt_short(ac_service(st)) << '\n';
      }
    }
  }
  log.write_text("eval/metrics_per_day.csv", per_day.str());
  log.write_text("eval/provision.csv", prov.str());
  log.write_text("eval/schedule_grid.csv", grid.str());

  std::ostringstream summary;
  summary << "metric,average,minimum,maximum,median\n";
  auto row = [&](const char* name, const std::vector<double>& v, bool undefined_avg) {
    if (v.empty()) {
      summary << name << ",undefined,undefined,undefined,undefined\n";
      return;
    }
    const auto ag = aggregate(v);
    summary << name << ',' << (undefined_avg ? std::string("undefined") : fmt_short(ag.average)) << ','
            << fmt_short(ag.minimum) << ',' << fmt_short(ag.maximum) << ',' << fmt_short(ag.median) << '\n';
  };
  row("MAE", maes, false);
  row("MSE", mses, false);
  row("Pearson", pears, any_undefined);
  log.write_text("eval/metrics_summary.csv", summary.str());

  // Reward of every trained iteration under the true reward.
  auto true_mean = [&](const Evaluation& e) {
    double total = 0.0;
    for (const auto& t : e.trajectories)
      for (const auto& s : t.steps) total += true_reward(s.state, s.dispatch, cfg.true_reward);
    return total / static_cast<double>(e.trajectories.size());
  };
  const double expert_reward = true_mean(ex);
  std::ostringstream rew;
  rew << "iteration,learned_true_reward,expert_true_reward\n";
  std::vector<double> iter_rewards;
  for (const auto& it : result.at("iterations")) {
    if (it.at("checkpoint").is_null()) continue;
    const Policy p = load_policy((out / it.at("checkpoint").get<std::string>()).string());
    const auto e = evaluate_policy(p, days, LearnedReward{it.at("alpha").get<Features>()}, w.env);
    iter_rewards.push_back(true_mean(e));
    rew << it.at("iteration").get<std::size_t>() << ',' << fmt_short(iter_rewards.back()) << ','
        << fmt_short(expert_reward) << '\n';
  }
  log.write_text("eval/reward_by_iteration.csv", rew.str());

  // Plots of the first test day.
  const auto a0 = provision_series(ex.trajectories.front());
  const auto b0 = provision_series(le.trajectories.front());
  log.write_text("eval/provision.svg",
                 svg::line_chart("DR provision " + format_day(days.front().date), {{"expert", a0}, {"learned", b0}}));
  if (!iter_rewards.empty())
    log.write_text("eval/reward_by_iteration.svg",
                   svg::line_chart("True reward per IRL iteration",
                                   {{"learned", iter_rewards}, {"expert", std::vector<double>(iter_rewards.size(), expert_reward)}}));
  std::vector<std::string> labels;
  std::vector<std::vector<double>> cells;
  for (const auto* pair : {&ex, &le}) {
    const auto& traj = pair->trajectories.front();
    const std::string who = pair == &ex ? "expert " : "learned ";
    for (std::size_t m2 = 0; m2 < kMaxTimeShiftable; ++m2) {
      if (!layout.ts[m2]) continue;
      labels.push_back(who + layout.ts_names[m2]);
      std::vector<double> r;
      for (std::size_t s = 0; s < kSlotsPerDay; ++s) r.push_back(schedule_code(days.front(), traj.steps[s], m2, s));
      cells.push_back(std::move(r));
    }
    if (layout.pc) {
      labels.push_back(who + "ac");
      std::vector<double> r;
      for (const auto& st : traj.steps) r.push_back(ac_service(st));
      cells.push_back(std::move(r));
    }
  }
  log.write_text("eval/schedule.svg", svg::heatmap("Schedule " + format_day(days.front().date), labels, cells));
  write_manifest(log, "evaluate", cfg, {{"master", cfg.seed}});
  return log.files();
}

struct BenchRow {
  double lambda = 0.0;
  double agreement = 0.0;
  double l1 = 0.0;
  double max_abs = 0.0;
  std::vector<double> reward;
};

inline std::vector<BenchRow> bench_exact(const BenchConfig& b) {
  const auto g = make_gridworld(b.grid, b.gamma);
  std::vector<BenchRow> rows;
  for (double lambda : b.lambdas) {
    const auto r = recover_reward(g.mdp, {lambda, b.r_max});
    BenchRow row;
    row.lambda = lambda;
    row.agreement = policy_agreement(g.mdp, r, g.unique);
    row.l1 = r.cwiseAbs().sum();
    row.max_abs = r.cwiseAbs().maxCoeff();
    row.reward.assign(r.data(), r.data() + r.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Exact IRL on the built-in gridworld across the lambda sweep.
inline std::vector<std::string> cmd_bench_exact(const ExperimentConfig& cfg) {
  ArtifactLog log(cfg.out_dir);
  const auto g = make_gridworld(cfg.bench.grid, cfg.bench.gamma);
  const auto rows = bench_exact(cfg.bench);
  std::ostringstream csv;
  csv << "lambda,agreement_pct,unique_states,reward_l1,reward_max_abs\n";
  const auto unique = static_cast<std::size_t>(std::count(g.unique.begin(), g.unique.end(), true));
  json jr = json::array();
  for (const auto& r : rows) {
    csv << fmt_short(r.lambda) << ',' << fmt_short(100.0 * r.agreement) << ',' << unique << ',' << fmt_short(r.l1) << ','
        << fmt_short(r.max_abs) << '\n';
    jr.push_back({{"lambda", r.lambda}, {"agreement", r.agreement}, {"reward_l1", r.l1}, {"reward", r.reward}});
  }
  log.write_text("bench/report.csv", csv.str());
  log.write_json("bench/report.json", {{"grid", cfg.bench.grid}, {"gamma", cfg.bench.gamma}, {"unique_states", unique}, {"runs", jr}});
  log.write_json("bench/gridworld.json", to_json(g.mdp));
  write_manifest(log, "bench-exact", cfg, {{"master", cfg.seed}});
  return log.files();
}

}  // namespace irl_dr
