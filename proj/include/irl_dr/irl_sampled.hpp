#pragma once

// Sample-based IRL over linear basis rewards: Monte-Carlo discounted feature
// returns per policy, an LP over the basis weights, and the outer loop that
// retrains an agent against each new reward estimate.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "irl_dr/dqn.hpp"
#include "irl_dr/environment.hpp"
#include "irl_dr/linprog.hpp"
#include "irl_dr/metrics.hpp"
#include "irl_dr/rewards.hpp"

namespace irl_dr {

/// A comparison policy plus the reward whose discomfort terms steer its
/// dispatch.
struct ComparisonPolicy {
  Policy policy;
  RewardSpec dispatch_spec = LearnedReward{};
  std::string label;
};

/// Pi = [expert, pi_1, pi_2, ...]; the expert is given by recorded days.
struct PolicySet {
  std::vector<Trajectory> expert;
  std::vector<ComparisonPolicy> policies;

  std::size_t size() const { return 1 + policies.size(); }
};

/// rows[p][i]: mean over start days of sum_t gamma^t phi_i(s_t) for
/// policy p (row 0 is the expert).
struct ValueEstimates {
  std::vector<Features> rows;
};

inline Features discounted_features(const Trajectory& t, double gamma) {
  Features acc{};
  double w = 1.0;
  for (const auto& step : t.steps) {
    for (std::size_t i = 0; i < kBasisCount; ++i) acc[i] += w * step.phi[i];
    w *= gamma;
  }
  return acc;
}

inline const Trajectory& expert_for(const PolicySet& set, const DayData& day) {
  for (const auto& t : set.expert)
    if (t.date == day.date) return t;
  throw ContractError("irl: no expert trajectory for " + format_day(day.date));
}

inline ValueEstimates estimate_values(const PolicySet& set, const std::vector<DayData>& days, double gamma,
                                      const EnvConfig& cfg) {
  require(!days.empty(), "estimate_values: days must be non-empty");
  require(gamma >= 0.0 && gamma <= 1.0, "estimate_values: gamma must lie in [0, 1]");
  ValueEstimates est;
  est.rows.assign(set.size(), Features{});
  const double inv = 1.0 / static_cast<double>(days.size());
  for (const auto& day : days) {
    const auto fe = discounted_features(expert_for(set, day), gamma);
    for (std::size_t i = 0; i < kBasisCount; ++i) est.rows[0][i] += inv * fe[i];
    for (std::size_t p = 0; p < set.policies.size(); ++p) {
      const auto& cp = set.policies[p];
      const auto traj = run_episode(
          day, [&](const EnvState& s, SlotIndex t) { return cp.policy.act(s, t); }, cp.dispatch_spec, cfg);
      const auto f = discounted_features(traj, gamma);
      for (std::size_t i = 0; i < kBasisCount; ++i) est.rows[p + 1][i] += inv * f[i];
    }
  }
  return est;
}

/// Expert-minus-policy feature gaps g_j, j = 1..k.
inline std::vector<Features> feature_gaps(const ValueEstimates& est) {
  std::vector<Features> gaps;
  for (std::size_t j = 1; j < est.rows.size(); ++j) {
    Features g{};
    for (std::size_t i = 0; i < kBasisCount; ++i) g[i] = est.rows[0][i] - est.rows[j][i];
    gaps.push_back(g);
  }
  return gaps;
}

inline double dot(const Features& a, const Features& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kBasisCount; ++i) s += a[i] * b[i];
  return s;
}

/// Margin penalty: slope 1 on gains, slope 2 on violations.
inline double margin_penalty(double x) { return x >= 0.0 ? x : 2.0 * x; }

struct AlphaSolution {
  Features alpha{};
  std::vector<double> margins;
  double objective = 0.0;
};

/// maximize sum_j p(alpha . g_j) over |alpha_i| <= 1, compiled to an LP
/// with one auxiliary z_j <= min(m_j, 2 m_j) per comparison policy.
inline LpProblem build_alpha_lp(const std::vector<Features>& gaps) {
  const std::size_t k = gaps.size();
  LpProblem lp(kBasisCount + k);
  for (std::size_t i = 0; i < kBasisCount; ++i) {
    lp.lower[i] = -1.0;
    lp.upper[i] = 1.0;
  }
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t z = kBasisCount + j;
    lp.lower[z] = -kInf;
    lp.upper[z] = kInf;
    lp.objective[z] = 1.0;
    for (double slope : {1.0, 2.0}) {
      std::vector<double> row(kBasisCount + k, 0.0);
      for (std::size_t i = 0; i < kBasisCount; ++i) row[i] = -slope * gaps[j][i];
      row[z] = 1.0;
      lp.add_row(std::move(row), RowSense::LessEqual, 0.0);
    }
  }
  return lp;
}

inline AlphaSolution optimize_alpha(const ValueEstimates& est) {
  require(est.rows.size() >= 2, "optimize_alpha: need the expert and at least one comparison policy");
  const auto gaps = feature_gaps(est);
  const LpSolution sol = solve(build_alpha_lp(gaps));
  if (sol.status != LpStatus::Optimal)
    throw NumericalError(std::string("optimize_alpha: LP not optimal (") + to_string(sol.status) + ")");
  AlphaSolution out;
  for (std::size_t i = 0; i < kBasisCount; ++i) out.alpha[i] = std::clamp(sol.x[i], -1.0, 1.0);
  for (const auto& g : gaps) {
    out.margins.push_back(dot(out.alpha, g));
    out.objective += margin_penalty(out.margins.back());
  }
  return out;
}

/// max over the alpha box of min_j alpha . g_j.
inline double maxmin_margin(const std::vector<Features>& gaps) {
  const std::size_t s = kBasisCount;
  LpProblem lp(kBasisCount + 1);
  for (std::size_t i = 0; i < kBasisCount; ++i) {
    lp.lower[i] = -1.0;
    lp.upper[i] = 1.0;
  }
  lp.lower[s] = -kInf;
  lp.upper[s] = kInf;
  lp.objective[s] = 1.0;
  for (const auto& g : gaps) {
    std::vector<double> row(kBasisCount + 1, 0.0);
    for (std::size_t i = 0; i < kBasisCount; ++i) row[i] = -g[i];
    row[s] = 1.0;
    lp.add_row(std::move(row), RowSense::LessEqual, 0.0);
  }
  const auto sol = solve(lp);
  if (sol.status != LpStatus::Optimal) throw NumericalError("maxmin_margin: LP not optimal");
  return sol.objective;
}

enum class StopReason { MaxIterations, MarginConverged };

inline const char* to_string(StopReason r) {
  return r == StopReason::MaxIterations ? "MaxIterations" : "MarginConverged";
}

struct IrlConfig {
  /// Cap on agents trained (one per loop iteration).
  std::size_t iterations = 10;
  double margin_tolerance = 1e-3;
  /// Discount of the Monte-Carlo feature returns.
  double value_gamma = 0.99;
  TrainConfig agent;
  std::uint64_t seed = 0;
};

struct IrlIteration {
  Features alpha{};
  std::vector<double> margins;
  double min_margin = 0.0;
  double maxmin = 0.0;
  double objective = 0.0;
  /// Provision MAE of the agent trained on this alpha against the expert
  /// on the selection day; absent when no agent was trained.
  std::optional<double> proxy_mae;
};

struct IrlResult {
  Features alpha{};
  std::size_t selected = 0;
  std::vector<IrlIteration> history;
  /// archive[k] is the agent trained on history[k].alpha.
  std::vector<Policy> archive;
  StopReason stop = StopReason::MaxIterations;
};

/// Inputs of the outer loop. `days` are the training days; with two or
/// more, the last one is held out for choosing the final iteration.
struct IrlProblem {
  std::vector<Trajectory> expert;
  std::vector<DayData> days;
  ObservationScaler scaler;
  EnvConfig env;
};

using AgentCallback = std::function<void(std::size_t iteration, const Features& alpha, const TrainResult&)>;

inline double provision_mae(const Trajectory& a, const Trajectory& b) {
  return mae(provision_series(a), provision_series(b));
}

inline IrlResult run_irl(const IrlProblem& problem, const IrlConfig& cfg, const AgentCallback& on_agent = {}) {
  require(!problem.days.empty(), "run_irl: no training days");
  std::vector<DayData> fit_days = problem.days;
  DayData selection_day = problem.days.back();
  if (fit_days.size() >= 2) fit_days.pop_back();

  PolicySet set;
  set.expert = problem.expert;
  set.policies.push_back({Policy::random(mix_seed(cfg.seed, 1)), LearnedReward{}, "random"});
  const Trajectory& expert_selection = expert_for(set, selection_day);
  for (const auto& d : fit_days) (void)expert_for(set, d);

  auto shared_days = std::make_shared<const std::vector<DayData>>(fit_days);
  IrlResult result;
  for (std::size_t k = 0;; ++k) {
    const auto est = estimate_values(set, fit_days, cfg.value_gamma, problem.env);
    const auto gaps = feature_gaps(est);
    const auto sol = optimize_alpha(est);
    IrlIteration it;
    it.alpha = sol.alpha;
    it.margins = sol.margins;
    it.min_margin = *std::min_element(sol.margins.begin(), sol.margins.end());
    it.maxmin = maxmin_margin(gaps);
    it.objective = sol.objective;
    result.history.push_back(it);

    const bool degenerate = std::all_of(gaps.begin(), gaps.end(), [](const Features& g) {
      return std::all_of(g.begin(), g.end(), [](double v) { return std::abs(v) < 1e-12; });
    });
    if (degenerate) {
      result.stop = StopReason::MarginConverged;
      break;
    }
    if (k > 0 && std::abs(it.min_margin - result.history[k - 1].min_margin) < cfg.margin_tolerance) {
      result.stop = StopReason::MarginConverged;
      break;
    }
    if (k == cfg.iterations) {
      result.stop = StopReason::MaxIterations;
      break;
    }

    const LearnedReward learned{sol.alpha};
    HouseholdEnv env(shared_days, problem.scaler, learned, problem.env);
    TrainConfig tc = cfg.agent;
    tc.seed = mix_seed(cfg.seed, 100 + k);
    TrainResult trained = train(env, tc);
    if (on_agent) on_agent(k, sol.alpha, trained);
    Policy policy = Policy::greedy(std::move(trained.net), problem.scaler);
    const auto traj = run_episode(
        selection_day, [&](const EnvState& s, SlotIndex t) { return policy.act(s, t); }, learned, problem.env);
    result.history[k].proxy_mae = provision_mae(expert_selection, traj);
    result.archive.push_back(policy);
    set.policies.push_back({std::move(policy), learned, "iteration-" + std::to_string(k)});
  }

  result.selected = 0;
  double best = INFINITY;
  for (std::size_t k = 0; k < result.history.size(); ++k) {
    const auto& p = result.history[k].proxy_mae;
    if (p && *p < best) {
      best = *p;
      result.selected = k;
    }
  }
  result.alpha = result.history[result.selected].alpha;
  return result;
}

struct ExpertRun {
  Policy policy;
  TrainResult training;
  std::vector<Trajectory> trajectories;
  bool untrained = false;
};

/// Trains a DQN under the generating reward and records its greedy days.
inline ExpertRun simulate_expert(const std::vector<DayData>& train_days, const std::vector<DayData>& record_days,
                                 const ObservationScaler& scaler, const TrueReward& reward, const TrainConfig& cfg,
                                 const EnvConfig& env_cfg, const std::string& household_id = {}) {
  auto shared = std::make_shared<const std::vector<DayData>>(train_days);
  HouseholdEnv env(shared, scaler, reward, env_cfg);
  ExpertRun run;
  run.training = train(env, cfg);
  run.untrained = run.training.untrained;
  run.policy = Policy::greedy(run.training.net, scaler);
  run.trajectories = evaluate_policy(run.policy, record_days, reward, env_cfg, household_id).trajectories;
  return run;
}

}  // namespace irl_dr
