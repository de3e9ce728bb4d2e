#pragma once

// Deep Q-learning: replay buffer, per-episode epsilon decay, soft-updated
// target network. The trainer is generic over any environment exposing
// reset(Rng&) -> Observation and step(int) -> EnvStep.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <numeric>
#include <variant>
#include <vector>

#include "irl_dr/environment.hpp"
#include "irl_dr/qnet.hpp"
#include "irl_dr/rng.hpp"

namespace irl_dr {

template <class E>
concept Environment = requires(E env, Rng& rng, int action) {
  { env.reset(rng) } -> std::same_as<Observation>;
  { env.step(action) } -> std::same_as<EnvStep>;
};

struct Transition {
  Observation state{};
  int action = 0;
  double reward = 0.0;
  Observation next{};
  bool terminal = false;
};

/// Fixed-capacity ring of transitions; the oldest entry is overwritten.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000) : capacity_(capacity) {
    require(capacity > 0, "replay buffer: capacity must be positive");
    ring_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void push(const Transition& t) {
    if (ring_.size() < capacity_) {
      ring_.push_back(t);
    } else {
      ring_[next_] = t;
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const {
    require(i < ring_.size(), "replay buffer: index out of range");
    return ring_.size() < capacity_ ? ring_[i] : ring_[(next_ + i) % capacity_];
  }

  const Transition& sample(Rng& rng) const { return ring_[rng.index(ring_.size())]; }

 private:
  std::size_t capacity_;
  std::vector<Transition> ring_;
  std::size_t next_ = 0;
};

struct TrainConfig {
  std::size_t episodes = 1500;
  std::size_t batch = 32;
  double gamma = 0.9;
  double tau = 0.001;
  double learning_rate = 0.001;
  double epsilon_start = 1.0;
  double epsilon_decay = 0.999;
  double epsilon_floor = 0.05;
  std::size_t buffer = 10000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("dqn: gamma must lie in [0, 1)");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("dqn: tau must lie in (0, 1]");
    if (batch == 0 || buffer < batch) throw ConfigError("dqn: need 0 < batch <= buffer");
    if (!(learning_rate > 0.0)) throw ConfigError("dqn: learning rate must be positive");
    if (!(epsilon_floor >= 0.0 && epsilon_floor <= epsilon_start && epsilon_start <= 1.0))
      throw ConfigError("dqn: need 0 <= epsilon_floor <= epsilon_start <= 1");
  }
};

/// Exploration rate during episode n (0-based).
inline double epsilon_at(const TrainConfig& cfg, std::size_t episode) {
  return std::max(cfg.epsilon_floor, cfg.epsilon_start * std::pow(cfg.epsilon_decay, static_cast<double>(episode)));
}

/// Index of the largest value; ties go to the lower index.
template <class Range>
int argmax(const Range& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(std::size(values)); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

struct CurvePoint {
  std::size_t episode = 0;
  double epsilon = 0.0;
  double reward = 0.0;
};

struct TrainResult {
  QNet net;
  std::vector<CurvePoint> curve;
  bool untrained = false;
};

/// One minibatch TD step on `net` against the frozen `target`; returns the
/// mean squared TD error measured before the update.
inline double td_update(QNet& net, const QNet& target, AdamState<QNet::kParamCount>& opt, const ReplayBuffer& buffer,
                        Rng& rng, const TrainConfig& cfg) {
  QNet::Params grad{};
  QNet::Cache cache;
  const double scale = 1.0 / static_cast<double>(cfg.batch);
  double loss = 0.0;
  for (std::size_t b = 0; b < cfg.batch; ++b) {
    const Transition& t = buffer.sample(rng);
    double y = t.reward;
    if (!t.terminal && cfg.gamma > 0.0) {
      const auto q_next = target.forward(t.next);
      y += cfg.gamma * *std::max_element(q_next.begin(), q_next.end());
    }
    net.forward(t.state, cache);
    const double err = cache.q[static_cast<std::size_t>(t.action)] - y;
    loss += err * err * scale;
    net.accumulate_gradient(cache, static_cast<std::size_t>(t.action), y, grad, scale);
  }
  apply_update(net.p(), grad, opt);
  return loss;
}

template <Environment Env>
TrainResult train(Env& env, const TrainConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  TrainResult result{QNet::initialized(rng), {}, cfg.episodes == 0};
  QNet& net = result.net;
  QNet target = net;
  AdamState<QNet::kParamCount> opt;
  opt.learning_rate = cfg.learning_rate;
  ReplayBuffer buffer(cfg.buffer);
  result.curve.reserve(cfg.episodes);

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    const double eps = epsilon_at(cfg, ep);
    Observation obs = env.reset(rng);
    double total = 0.0;
    for (;;) {
      int action;
      if (rng.uniform() < eps)
        action = static_cast<int>(rng.index(kActionLevels));
      else
        action = argmax(net.forward(obs));
      const EnvStep st = env.step(action);
      buffer.push({obs, action, st.reward, st.next, st.terminal});
      total += st.reward;
      if (buffer.size() >= cfg.batch) {
        td_update(net, target, opt, buffer, rng, cfg);
        blend(target, net, cfg.tau);
      }
      obs = st.next;
      if (st.terminal) break;
    }
    if (!net.all_finite()) throw NumericalError("dqn: non-finite parameters after episode " + std::to_string(ep));
    result.curve.push_back({ep, eps, total});
  }
  return result;
}

/// Maps a household observation (or a finite-MDP state) to a level.
class Policy {
 public:
  struct Greedy {
    QNet net;
    ObservationScaler scaler;
  };
  struct Random {
    std::uint64_t seed = 0;
  };
  /// Level per key: the slot of the day for household rollouts, the state
  /// index for finite MDPs.
  struct Tabular {
    std::vector<int> table;
  };
  struct Constant {
    int level = 10;
  };

  Policy() : impl_(Constant{}) {}
  static Policy greedy(QNet net, ObservationScaler scaler) { return Policy(Greedy{std::move(net), scaler}); }
  static Policy random(std::uint64_t seed) { return Policy(Random{seed}); }
  static Policy tabular(std::vector<int> table) {
    for (int v : table) Action::checked(v);
    return Policy(Tabular{std::move(table)});
  }
  static Policy constant(int level) { return Policy(Constant{Action::checked(level).level}); }

  int act(const EnvState& s, SlotIndex t) const {
    return std::visit(
        [&](const auto& p) -> int {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Greedy>) {
            return argmax(p.net.forward(p.scaler.apply(s)));
          } else if constexpr (std::is_same_v<T, Random>) {
            return static_cast<int>(mix_seed(p.seed, t.flat()) % kActionLevels);
          } else if constexpr (std::is_same_v<T, Tabular>) {
            return p.table.at(t.slot % p.table.size());
          } else {
            return p.level;
          }
        },
        impl_);
  }

  /// Greedy action on an already-scaled observation.
  int act_observation(const Observation& obs) const {
    if (const auto* g = std::get_if<Greedy>(&impl_)) return argmax(g->net.forward(obs));
    if (const auto* c = std::get_if<Constant>(&impl_)) return c->level;
    throw ContractError("policy: act_observation needs a greedy or constant policy");
  }

  int act_state(std::size_t state) const { return std::get<Tabular>(impl_).table.at(state); }

  bool is_greedy() const { return std::holds_alternative<Greedy>(impl_); }
  const Greedy& greedy_parts() const { return std::get<Greedy>(impl_); }

 private:
  template <class T>
  explicit Policy(T impl) : impl_(std::move(impl)) {}
  std::variant<Greedy, Random, Tabular, Constant> impl_;
};

struct Evaluation {
  std::vector<Trajectory> trajectories;
  double mean_reward = 0.0;
};

inline double episode_reward(const Trajectory& t) {
  return std::accumulate(t.steps.begin(), t.steps.end(), 0.0,
                         [](double acc, const StepRecord& r) { return acc + r.reward; });
}

/// Pure greedy rollouts over the given days.
inline Evaluation evaluate_policy(const Policy& policy, const std::vector<DayData>& days, const RewardSpec& spec,
                                  const EnvConfig& cfg, const std::string& household_id = {}) {
  Evaluation out;
  for (const auto& day : days) {
    out.trajectories.push_back(run_episode(
        day, [&](const EnvState& s, SlotIndex t) { return policy.act(s, t); }, spec, cfg, household_id));
    out.mean_reward += episode_reward(out.trajectories.back());
  }
  if (!days.empty()) out.mean_reward /= static_cast<double>(days.size());
  return out;
}

}  // namespace irl_dr
