#pragma once

// Generating ("true") reward, the six basis features and linear learned
// rewards over them.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string_view>
#include <variant>

#include "irl_dr/state.hpp"

namespace irl_dr {

enum class RevenueMode { ReductionOnly = 0, Bidirectional = 1 };
enum class DiscomfortMode { None = 0, Absolute = 1, Quadratic = 2 };

inline std::string_view to_string(RevenueMode m) {
  return m == RevenueMode::ReductionOnly ? "ReductionOnly" : "Bidirectional";
}

inline std::string_view to_string(DiscomfortMode m) {
  switch (m) {
    case DiscomfortMode::None: return "None";
    case DiscomfortMode::Absolute: return "Absolute";
    case DiscomfortMode::Quadratic: return "Quadratic";
  }
  return "?";
}

inline std::optional<RevenueMode> parse_revenue_mode(std::string_view s) {
  if (s == "ReductionOnly") return RevenueMode::ReductionOnly;
  if (s == "Bidirectional") return RevenueMode::Bidirectional;
  return std::nullopt;
}

inline std::optional<DiscomfortMode> parse_discomfort_mode(std::string_view s) {
  if (s == "None") return DiscomfortMode::None;
  if (s == "Absolute") return DiscomfortMode::Absolute;
  if (s == "Quadratic") return DiscomfortMode::Quadratic;
  return std::nullopt;
}

/// Basis ordering: index = 3 * revenue_mode + discomfort_mode.
constexpr std::size_t basis_index(RevenueMode r, DiscomfortMode d) {
  return 3 * static_cast<std::size_t>(r) + static_cast<std::size_t>(d);
}

/// Revenue minus weighted discomfort. With `normalized` set, the AC
/// deviation is taken relative to the AC demand and delays in days, the same
/// scaling the basis features use.
struct TrueReward {
  double w_ac = 0.05;
  std::array<double, kMaxTimeShiftable> w_m{0.01, 0.01, 0.01, 0.01};
  RevenueMode revenue_mode = RevenueMode::ReductionOnly;
  DiscomfortMode discomfort_mode = DiscomfortMode::Quadratic;
  bool normalized = false;

  /// The household whose reward is exactly basis function k.
  static TrueReward basis(std::size_t k) {
    TrueReward r;
    r.w_ac = 1.0;
    r.w_m = {1.0, 1.0, 1.0, 1.0};
    r.revenue_mode = static_cast<RevenueMode>(k / 3);
    r.discomfort_mode = static_cast<DiscomfortMode>(k % 3);
    r.normalized = true;
    return r;
  }
};

struct LearnedReward {
  Features alpha{};
};

using RewardSpec = std::variant<TrueReward, LearnedReward>;

namespace detail {

inline double shape(DiscomfortMode mode, double x) {
  switch (mode) {
    case DiscomfortMode::None: return 0.0;
    case DiscomfortMode::Absolute: return std::abs(x);
    case DiscomfortMode::Quadratic: return x * x;
  }
  return 0.0;
}

inline double revenue(RevenueMode mode, const EnvState& s, const Dispatch& d) {
  const double gap = s.baseline - d.total();
  return s.price * (mode == RevenueMode::ReductionOnly ? std::max(0.0, gap) : gap);
}

inline double ac_deviation(const EnvState& s, const Dispatch& d) { return std::max(0.0, s.pc_demand - d.pc); }

inline double ac_deviation_normalized(const EnvState& s, const Dispatch& d) {
  return s.pc_demand > 0.0 ? ac_deviation(s, d) / s.pc_demand : 0.0;
}

inline constexpr double kDelayScale = static_cast<double>(kSlotsPerDay);

inline double unit_discomfort(DiscomfortMode mode, const EnvState& s, const Dispatch& d) {
  double total = shape(mode, ac_deviation_normalized(s, d));
  for (int delay : d.open_delays) total += shape(mode, delay / kDelayScale);
  return total;
}

}  // namespace detail

inline double true_reward(const EnvState& s, const Dispatch& d, const TrueReward& spec) {
  const double rev = detail::revenue(spec.revenue_mode, s, d);
  const double dev = spec.normalized ? detail::ac_deviation_normalized(s, d) : detail::ac_deviation(s, d);
  double discomfort = spec.w_ac * detail::shape(spec.discomfort_mode, dev);
  for (std::size_t m = 0; m < kMaxTimeShiftable; ++m) {
    const double delay = spec.normalized ? d.open_delays[m] / detail::kDelayScale : d.open_delays[m];
    discomfort += spec.w_m[m] * detail::shape(spec.discomfort_mode, delay);
  }
  return rev - discomfort;
}

/// phi_k = revenue_k - unit-weight discomfort_k for the six mode pairs.
inline Features features(const EnvState& s, const Dispatch& d) {
  Features phi{};
  for (int r = 0; r < 2; ++r) {
    const double rev = detail::revenue(static_cast<RevenueMode>(r), s, d);
    for (int m = 0; m < 3; ++m) {
      const auto mode = static_cast<DiscomfortMode>(m);
      phi[basis_index(static_cast<RevenueMode>(r), mode)] = rev - detail::unit_discomfort(mode, s, d);
    }
  }
  return phi;
}

inline double learned_reward(const Features& phi, const LearnedReward& r) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kBasisCount; ++i) {
    if (std::abs(r.alpha[i]) > 1.0 + 1e-12) throw ContractError("learned reward: |alpha_i| must be <= 1");
    sum += r.alpha[i] * phi[i];
  }
  return sum;
}

inline double evaluate_reward(const RewardSpec& spec, const EnvState& s, const Dispatch& d) {
  if (const auto* t = std::get_if<TrueReward>(&spec)) return true_reward(s, d, *t);
  return learned_reward(features(s, d), std::get<LearnedReward>(spec));
}

/// Extra discomfort charged when time-shiftable slot `m` is deferred once
/// more from `delay` to `delay + 1`, under the reward's discomfort terms.
inline double delay_cost_increment(const RewardSpec& spec, std::size_t m, int delay) {
  const double t0 = delay, t1 = delay + 1.0;
  if (const auto* t = std::get_if<TrueReward>(&spec)) {
    const double scale = t->normalized ? detail::kDelayScale : 1.0;
    return t->w_m[m] * (detail::shape(t->discomfort_mode, t1 / scale) - detail::shape(t->discomfort_mode, t0 / scale));
  }
  const auto& a = std::get<LearnedReward>(spec).alpha;
  const double abs_weight = a[basis_index(RevenueMode::ReductionOnly, DiscomfortMode::Absolute)] +
                            a[basis_index(RevenueMode::Bidirectional, DiscomfortMode::Absolute)];
  const double quad_weight = a[basis_index(RevenueMode::ReductionOnly, DiscomfortMode::Quadratic)] +
                             a[basis_index(RevenueMode::Bidirectional, DiscomfortMode::Quadratic)];
  const double s = detail::kDelayScale;
  return abs_weight * (t1 - t0) / s + quad_weight * (t1 * t1 - t0 * t0) / (s * s);
}

}  // namespace irl_dr
