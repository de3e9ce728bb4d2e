#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "irl_dr/core.hpp"
#include "irl_dr/error.hpp"

namespace irl_dr {

inline constexpr std::size_t kActionLevels = 11;
inline constexpr std::size_t kObservationSize = 8;
inline constexpr std::size_t kBasisCount = 6;

using Observation = std::array<double, kObservationSize>;
using Features = std::array<double, kBasisCount>;

/// Observation at one 15-minute slot: curtailable and non-shiftable demand,
/// open delay counters of the four time-shiftable slots, flexibility price
/// and baseline.
struct EnvState {
  double pc_demand = 0.0;
  double ns_demand = 0.0;
  std::array<int, kMaxTimeShiftable> ts_delays{};
  double price = 0.0;
  double baseline = 0.0;

  /// Unscaled observation vector in fixed order
  /// [pc, ns, delay0..delay3, price, baseline].
  Observation raw() const {
    return {pc_demand, ns_demand, double(ts_delays[0]), double(ts_delays[1]),
            double(ts_delays[2]), double(ts_delays[3]), price, baseline};
  }

  bool operator==(const EnvState&) const = default;
};

/// Target total consumption of level/10 times the slot's demand.
struct Action {
  int level = 10;

  static Action checked(int level) {
    if (level < 0 || level >= static_cast<int>(kActionLevels))
      throw ContractError("action level " + std::to_string(level) + " outside 0..10");
    return Action{level};
  }

  double fraction() const { return level / 10.0; }
};

enum class TsDecision { Idle, Running, Deferred, Started, ForcedStart };

inline const char* to_string(TsDecision d) {
  switch (d) {
    case TsDecision::Idle: return "idle";
    case TsDecision::Running: return "running";
    case TsDecision::Deferred: return "deferred";
    case TsDecision::Started: return "started";
    case TsDecision::ForcedStart: return "forced";
  }
  return "?";
}

/// Realized per-appliance consumption at one slot.
struct Dispatch {
  double ns = 0.0;
  double pc = 0.0;
  std::array<double, kMaxTimeShiftable> ts{};
  std::array<TsDecision, kMaxTimeShiftable> decisions{};
  /// Delay counter of each slot's still-open request after this slot's
  /// decisions (0 when nothing is waiting).
  std::array<int, kMaxTimeShiftable> open_delays{};

  double total() const { return ns + pc + ts[0] + ts[1] + ts[2] + ts[3]; }

  bool operator==(const Dispatch&) const = default;
};

}  // namespace irl_dr
