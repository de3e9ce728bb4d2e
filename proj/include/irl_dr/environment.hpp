#pragma once

// Demand-response MDP: baseline, per-slot dispatch of the chosen total
// consumption to appliances, and episode stepping over one day.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "irl_dr/core.hpp"
#include "irl_dr/rewards.hpp"
#include "irl_dr/rng.hpp"
#include "irl_dr/state.hpp"

namespace irl_dr {

/// Flexibility price per slot of the day, repeated daily.
struct PriceModel {
  std::vector<double> per_slot = std::vector<double>(kSlotsPerDay, 0.1);

  static PriceModel constant(double price) { return PriceModel{std::vector<double>(kSlotsPerDay, price)}; }

  static PriceModel profile(std::vector<double> values) {
    if (values.size() != kSlotsPerDay) throw ContractError("price profile must have 96 values");
    for (double v : values)
      if (!(v >= 0.0)) throw ContractError("price profile values must be >= 0");
    return PriceModel{std::move(values)};
  }

  double at(std::size_t slot) const { return per_slot[slot]; }
  double max() const { return *std::max_element(per_slot.begin(), per_slot.end()); }
};

struct EnvConfig {
  PriceModel price;
  /// A request deferred this many slots is started regardless of the
  /// target. Zero disables forced starts.
  int max_ts_delay = 0;
};

inline constexpr std::size_t kBaselineDays = 10;

/// Same-hour mean of the no-DR total demand over up to ten previous days;
/// on the first day, the slot's own demand.
inline double baseline(const Household& h, SlotIndex t) {
  if (t.day >= h.days() || t.slot >= kSlotsPerDay) throw std::out_of_range("baseline: slot out of range");
  if (t.day == 0) return total_demand(h, t);
  const std::size_t first = t.day >= kBaselineDays ? t.day - kBaselineDays : 0;
  const std::size_t hour_start = t.hour() * 4;
  double sum = 0.0;
  for (std::size_t d = first; d < t.day; ++d)
    for (std::size_t s = hour_start; s < hour_start + 4; ++s) sum += total_demand(h, {d, s});
  return sum / (4.0 * static_cast<double>(t.day - first));
}

/// Which inventory entries feed each part of the observation.
struct HouseholdLayout {
  std::array<std::optional<std::size_t>, kMaxTimeShiftable> ts;
  std::array<std::string, kMaxTimeShiftable> ts_names;
  std::optional<std::size_t> pc;
  std::vector<std::size_t> ns;

  static HouseholdLayout of(const Household& h) {
    HouseholdLayout layout;
    std::size_t next_ts = 0;
    for (std::size_t i = 0; i < h.appliances().size(); ++i) {
      const auto& a = h.appliances()[i];
      switch (a.cls) {
        case ApplianceClass::TimeShiftable:
          layout.ts_names[next_ts] = a.name;
          layout.ts[next_ts++] = i;
          break;
        case ApplianceClass::PowerCurtailable: layout.pc = i; break;
        case ApplianceClass::NonShiftable: layout.ns.push_back(i); break;
      }
    }
    return layout;
  }
};

/// Exogenous inputs of one episode, precomputed from the household.
struct DayData {
  std::size_t day = 0;
  DayNumber date = 0;
  std::array<double, kSlotsPerDay> ns{};
  std::array<double, kSlotsPerDay> pc{};
  std::array<double, kSlotsPerDay> total{};
  std::array<double, kSlotsPerDay> baseline{};
  std::array<double, kSlotsPerDay> price{};
  std::array<std::vector<TsRequest>, kMaxTimeShiftable> requests;
  /// Request arrival flags, used for schedule encodings.
  std::array<std::array<bool, kSlotsPerDay>, kMaxTimeShiftable> arrival{};
};

inline DayData make_day_data(const Household& h, std::size_t day, const EnvConfig& cfg) {
  if (day >= h.days()) throw std::out_of_range("make_day_data: day out of range");
  const auto layout = HouseholdLayout::of(h);
  DayData d;
  d.day = day;
  d.date = h.dates()[day];
  for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
    for (std::size_t i : layout.ns) d.ns[s] += h.day_series(i, day)[s];
    if (layout.pc) d.pc[s] = h.day_series(*layout.pc, day)[s];
    d.total[s] = total_demand(h, {day, s});
    d.price[s] = cfg.price.at(s);
  }
  // Baseline is hourly; compute once per hour and broadcast.
  for (std::size_t hour = 0; hour < 24; ++hour) {
    if (day == 0) {
      for (std::size_t s = hour * 4; s < hour * 4 + 4; ++s) d.baseline[s] = d.total[s];
    } else {
      const double b = baseline(h, {day, hour * 4});
      for (std::size_t s = hour * 4; s < hour * 4 + 4; ++s) d.baseline[s] = b;
    }
  }
  for (std::size_t m = 0; m < kMaxTimeShiftable; ++m) {
    if (!layout.ts[m]) continue;
    d.requests[m] = extract_requests(h.day_series(*layout.ts[m], day));
    for (const auto& r : d.requests[m]) d.arrival[m][r.arrival] = true;
  }
  return d;
}

inline std::vector<DayData> make_days(const Household& h, const std::vector<std::size_t>& days, const EnvConfig& cfg) {
  std::vector<DayData> out;
  out.reserve(days.size());
  for (std::size_t d : days) out.push_back(make_day_data(h, d, cfg));
  return out;
}

/// Per-slot inputs of the dispatch rule.
struct DispatchInputs {
  double target = 0.0;
  double ns_demand = 0.0;
  double pc_demand = 0.0;
  /// Draw of already-running appliances at this slot (0 when idle).
  std::array<double, kMaxTimeShiftable> committed{};
  std::array<bool, kMaxTimeShiftable> running{};
  /// First-slot draw of a startable open request, if any.
  std::array<std::optional<double>, kMaxTimeShiftable> candidate{};
  std::array<int, kMaxTimeShiftable> delays{};
};

inline constexpr double kFitTolerance = 1e-9;

/// Greedy priority dispatch:
///  1. non-shiftable demand and running appliances are always served;
///  2. open requests start in order of decreasing deferral cost under the
///     active reward (ties by slot index) while their first draw fits;
///  3. leftover headroom serves the curtailable appliance;
///  4. a target below the unconditional floor realizes the floor.
/// `open_delays` is left for the caller, which owns the request queues.
inline Dispatch dispatch(const DispatchInputs& in, const RewardSpec& spec, int max_ts_delay = 0) {
  require(in.target >= 0.0, "dispatch: target must be >= 0");
  Dispatch out;
  out.ns = in.ns_demand;
  double used = in.ns_demand;
  for (std::size_t m = 0; m < kMaxTimeShiftable; ++m) {
    if (in.running[m]) {
      out.ts[m] = in.committed[m];
      out.decisions[m] = TsDecision::Running;
      used += in.committed[m];
    }
  }

  std::array<std::size_t, kMaxTimeShiftable> order{};
  std::size_t n = 0;
  for (std::size_t m = 0; m < kMaxTimeShiftable; ++m) {
    if (!in.candidate[m]) continue;
    if (max_ts_delay > 0 && in.delays[m] >= max_ts_delay) {
      out.ts[m] = *in.candidate[m];
      out.decisions[m] = TsDecision::ForcedStart;
      used += *in.candidate[m];
    } else {
      order[n++] = m;
    }
  }
  std::array<double, kMaxTimeShiftable> cost{};
  for (std::size_t k = 0; k < n; ++k) cost[order[k]] = delay_cost_increment(spec, order[k], in.delays[order[k]]);
  std::stable_sort(order.begin(), order.begin() + n, [&](std::size_t a, std::size_t b) { return cost[a] > cost[b]; });

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t m = order[k];
    const double draw = *in.candidate[m];
    if (used + draw <= in.target + kFitTolerance) {
      out.ts[m] = draw;
      out.decisions[m] = TsDecision::Started;
      used += draw;
    } else {
      out.decisions[m] = TsDecision::Deferred;
    }
  }

  const double headroom = in.target - used;
  if (headroom >= in.pc_demand - kFitTolerance)
    out.pc = in.pc_demand;
  else
    out.pc = std::max(0.0, headroom);
  return out;
}

/// Open requests and running profiles of the time-shiftable slots.
struct TsBook {
  struct Pending {
    TsRequest request;
    int delay = 0;
  };
  std::array<std::deque<Pending>, kMaxTimeShiftable> pending;
  std::array<std::vector<double>, kMaxTimeShiftable> running;
  std::array<std::size_t, kMaxTimeShiftable> run_pos{};

  bool is_running(std::size_t m) const { return run_pos[m] < running[m].size(); }

  /// Admits requests arriving at `slot`.
  void admit(const DayData& day, std::size_t slot) {
    for (std::size_t m = 0; m < kMaxTimeShiftable; ++m)
      for (const auto& r : day.requests[m])
        if (r.arrival == slot) pending[m].push_back({r, 0});
  }

  std::array<int, kMaxTimeShiftable> delays() const {
    std::array<int, kMaxTimeShiftable> out{};
    for (std::size_t m = 0; m < kMaxTimeShiftable; ++m)
      if (!pending[m].empty()) out[m] = pending[m].front().delay;
    return out;
  }

  bool operator==(const TsBook& o) const {
    if (running != o.running || run_pos != o.run_pos) return false;
    for (std::size_t m = 0; m < kMaxTimeShiftable; ++m) {
      if (pending[m].size() != o.pending[m].size()) return false;
      for (std::size_t i = 0; i < pending[m].size(); ++i)
        if (pending[m][i].delay != o.pending[m][i].delay ||
            pending[m][i].request.arrival != o.pending[m][i].request.arrival)
          return false;
    }
    return true;
  }
};

inline EnvState observe(const DayData& day, std::size_t slot, const TsBook& book) {
  EnvState s;
  s.pc_demand = day.pc[slot];
  s.ns_demand = day.ns[slot];
  s.ts_delays = book.delays();
  s.price = day.price[slot];
  s.baseline = day.baseline[slot];
  return s;
}

struct StepResult {
  Dispatch dispatch;
  /// Observation at slot + 1 (meaningless after the last slot).
  EnvState next;
};

/// Advances one slot. `book` must already hold the arrivals of `slot`
/// (see TsBook::admit); on return it holds those of `slot + 1`.
inline StepResult step(const EnvState& state, Action action, const DayData& day, std::size_t slot, TsBook& book,
                       const RewardSpec& spec, int max_ts_delay = 0) {
  require(action.level >= 0 && action.level <= 10, "step: action level outside 0..10");
  require(slot < kSlotsPerDay, "step: slot outside the day");
  DispatchInputs in;
  in.target = action.fraction() * day.total[slot];
  in.ns_demand = state.ns_demand;
  in.pc_demand = state.pc_demand;
  for (std::size_t m = 0; m < kMaxTimeShiftable; ++m) {
    if (book.is_running(m)) {
      in.running[m] = true;
      in.committed[m] = book.running[m][book.run_pos[m]];
    } else if (!book.pending[m].empty()) {
      in.candidate[m] = book.pending[m].front().request.profile.front();
    }
    in.delays[m] = book.pending[m].empty() ? 0 : book.pending[m].front().delay;
  }
  StepResult result;
  result.dispatch = dispatch(in, spec, max_ts_delay);
  auto& d = result.dispatch;

  for (std::size_t m = 0; m < kMaxTimeShiftable; ++m) {
    if (in.running[m]) ++book.run_pos[m];
    if (d.decisions[m] == TsDecision::Started || d.decisions[m] == TsDecision::ForcedStart) {
      book.running[m] = std::move(book.pending[m].front().request.profile);
      book.run_pos[m] = 1;
      book.pending[m].pop_front();
    }
    for (auto& p : book.pending[m]) ++p.delay;
    d.open_delays[m] = book.pending[m].empty() ? 0 : book.pending[m].front().delay;
    if (d.decisions[m] == TsDecision::Idle && !book.pending[m].empty()) d.decisions[m] = TsDecision::Deferred;
  }

  if (slot + 1 < kSlotsPerDay) {
    book.admit(day, slot + 1);
    result.next = observe(day, slot + 1, book);
  } else {
    result.next = state;
  }
  return result;
}

struct StepRecord {
  EnvState state;
  Action action;
  Dispatch dispatch;
  Features phi{};
  double reward = 0.0;
};

struct Trajectory {
  std::string household;
  std::size_t day = 0;
  DayNumber date = 0;
  std::vector<StepRecord> steps;
};

/// Stateful single-day episode; copyable, so a run can be forked mid-day.
class Episode {
 public:
  Episode(const DayData& day, const EnvConfig& cfg) : day_(&day), max_ts_delay_(cfg.max_ts_delay) {
    book_.admit(day, 0);
    state_ = observe(day, 0, book_);
  }

  std::size_t slot() const { return slot_; }
  bool done() const { return slot_ >= kSlotsPerDay; }
  const EnvState& state() const { return state_; }
  const TsBook& book() const { return book_; }
  const DayData& day() const { return *day_; }

  StepRecord advance(Action action, const RewardSpec& spec) {
    require(!done(), "episode: already finished");
    StepRecord rec;
    rec.state = state_;
    rec.action = action;
    auto result = step(state_, action, *day_, slot_, book_, spec, max_ts_delay_);
    rec.dispatch = result.dispatch;
    rec.phi = features(rec.state, rec.dispatch);
    rec.reward = evaluate_reward(spec, rec.state, rec.dispatch);
    state_ = result.next;
    ++slot_;
    return rec;
  }

 private:
  const DayData* day_;
  int max_ts_delay_;
  TsBook book_;
  EnvState state_;
  std::size_t slot_ = 0;
};

/// Rolls out one day. `policy(state, slot_index)` returns a level; any
/// value outside 0..10 is a contract violation.
template <class PolicyFn>
Trajectory run_episode(const DayData& day, PolicyFn&& policy, const RewardSpec& spec, const EnvConfig& cfg,
                       std::string household_id = {}) {
  Trajectory traj{std::move(household_id), day.day, day.date, {}};
  traj.steps.reserve(kSlotsPerDay);
  Episode ep(day, cfg);
  while (!ep.done()) {
    const int level = policy(ep.state(), SlotIndex{day.day, ep.slot()});
    traj.steps.push_back(ep.advance(Action::checked(level), spec));
  }
  return traj;
}

/// Scales raw observations for the Q-network: demands and baseline by the
/// household's 95th-percentile slot demand, delays by a day, price by its
/// maximum.
struct ObservationScaler {
  double demand_scale = 1.0;
  double price_scale = 1.0;

  Observation apply(const EnvState& s) const {
    constexpr double delay_scale = static_cast<double>(kSlotsPerDay);
    return {s.pc_demand / demand_scale,       s.ns_demand / demand_scale,       s.ts_delays[0] / delay_scale,
            s.ts_delays[1] / delay_scale,     s.ts_delays[2] / delay_scale,     s.ts_delays[3] / delay_scale,
            s.price / price_scale,            s.baseline / demand_scale};
  }
};

inline ObservationScaler make_scaler(const Household& h, const EnvConfig& cfg) {
  std::vector<double> totals(h.days() * kSlotsPerDay, 0.0);
  for (std::size_t i = 0; i < h.appliances().size(); ++i) {
    const auto s = h.series(i);
    for (std::size_t k = 0; k < totals.size(); ++k) totals[k] += s[k];
  }
  ObservationScaler scaler;
  if (!totals.empty()) {
    const std::size_t k = static_cast<std::size_t>(0.95 * static_cast<double>(totals.size() - 1));
    std::nth_element(totals.begin(), totals.begin() + static_cast<std::ptrdiff_t>(k), totals.end());
    scaler.demand_scale = totals[k] > 0.0 ? totals[k] : 1.0;
  }
  const double pmax = cfg.price.max();
  scaler.price_scale = pmax > 0.0 ? pmax : 1.0;
  return scaler;
}

/// One transition as seen by a learning agent.
struct EnvStep {
  Observation next{};
  double reward = 0.0;
  bool terminal = false;
};

/// Training environment: each reset starts a uniformly drawn day.
class HouseholdEnv {
 public:
  HouseholdEnv(std::shared_ptr<const std::vector<DayData>> days, ObservationScaler scaler, RewardSpec spec,
               EnvConfig cfg)
      : days_(std::move(days)), scaler_(scaler), spec_(std::move(spec)), cfg_(std::move(cfg)) {
    require(days_ && !days_->empty(), "household env: day range must be non-empty");
  }

  Observation reset(Rng& rng) { return reset_to(rng.index(days_->size())); }

  Observation reset_to(std::size_t index) {
    episode_.emplace((*days_)[index], cfg_);
    return scaler_.apply(episode_->state());
  }

  EnvStep step(int level) {
    const auto rec = episode_->advance(Action::checked(level), spec_);
    EnvStep out;
    out.reward = rec.reward;
    out.terminal = episode_->done();
    out.next = scaler_.apply(episode_->state());
    return out;
  }

  const ObservationScaler& scaler() const { return scaler_; }
  const RewardSpec& spec() const { return spec_; }

 private:
  std::shared_ptr<const std::vector<DayData>> days_;
  ObservationScaler scaler_;
  RewardSpec spec_;
  EnvConfig cfg_;
  std::optional<Episode> episode_;
};

/// Normalized DR provision (b - p) / max(b, eps), clipped to [-1, 1].
inline double provision(double baseline_kw, double realized_kw) {
  constexpr double eps = 1e-3;
  return std::clamp((baseline_kw - realized_kw) / std::max(baseline_kw, eps), -1.0, 1.0);
}

inline std::vector<double> provision_series(const Trajectory& t) {
  std::vector<double> out;
  out.reserve(t.steps.size());
  for (const auto& s : t.steps) out.push_back(provision(s.state.baseline, s.dispatch.total()));
  return out;
}

}  // namespace irl_dr
