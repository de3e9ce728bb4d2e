#pragma once

// Appliance and household data model shared by every other module.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "irl_dr/calendar.hpp"
#include "irl_dr/error.hpp"

namespace irl_dr {

inline constexpr std::size_t kSlotsPerDay = 96;
inline constexpr double kSlotHours = 0.25;
inline constexpr std::size_t kMaxTimeShiftable = 4;

enum class ApplianceClass { TimeShiftable, PowerCurtailable, NonShiftable };

inline std::string_view to_string(ApplianceClass c) {
  switch (c) {
    case ApplianceClass::TimeShiftable: return "TimeShiftable";
    case ApplianceClass::PowerCurtailable: return "PowerCurtailable";
    case ApplianceClass::NonShiftable: return "NonShiftable";
  }
  return "?";
}

inline std::optional<ApplianceClass> parse_appliance_class(std::string_view s) {
  if (s == "TimeShiftable" || s == "time_shiftable") return ApplianceClass::TimeShiftable;
  if (s == "PowerCurtailable" || s == "power_curtailable") return ApplianceClass::PowerCurtailable;
  if (s == "NonShiftable" || s == "non_shiftable") return ApplianceClass::NonShiftable;
  return std::nullopt;
}

struct Appliance {
  std::string id;
  ApplianceClass cls = ApplianceClass::NonShiftable;
  std::string name;
  /// Nominal per-slot draw in kW once started; time-shiftable only.
  std::vector<double> run_profile;
};

struct SlotIndex {
  std::size_t day = 0;
  std::size_t slot = 0;

  std::size_t hour() const { return slot / 4; }
  std::size_t flat() const { return day * kSlotsPerDay + slot; }
};

/// Appliance inventory plus each appliance's no-DR demand in kW at
/// 15-minute resolution. Immutable after construction.
class Household {
 public:
  Household() = default;

  /// demand[i] is the series of appliances[i]. `dates` gives the calendar
  /// day of each whole day in the series; empty means consecutive days from
  /// the epoch.
  Household(std::string id, std::vector<Appliance> appliances, std::vector<std::vector<double>> demand,
            std::vector<DayNumber> dates = {})
      : id_(std::move(id)), appliances_(std::move(appliances)), demand_(std::move(demand)), dates_(std::move(dates)) {
    validate();
  }

  const std::string& id() const { return id_; }
  const std::vector<Appliance>& appliances() const { return appliances_; }
  std::size_t days() const { return demand_.empty() ? 0 : demand_.front().size() / kSlotsPerDay; }
  const std::vector<DayNumber>& dates() const { return dates_; }

  std::span<const double> series(std::size_t appliance) const { return demand_.at(appliance); }

  std::span<const double> day_series(std::size_t appliance, std::size_t day) const {
    return series(appliance).subspan(day * kSlotsPerDay, kSlotsPerDay);
  }

  std::optional<std::size_t> find(std::string_view appliance_id) const {
    for (std::size_t i = 0; i < appliances_.size(); ++i)
      if (appliances_[i].id == appliance_id) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> day_of(DayNumber date) const {
    const auto it = std::lower_bound(dates_.begin(), dates_.end(), date);
    if (it == dates_.end() || *it != date) return std::nullopt;
    return static_cast<std::size_t>(it - dates_.begin());
  }

 private:
  void validate() {
    if (demand_.size() != appliances_.size())
      throw ContractError("household: demand series count does not match the appliance inventory");
    std::set<std::string> ids;
    std::size_t ts = 0, pc = 0;
    for (const auto& a : appliances_) {
      if (!ids.insert(a.id).second) throw ContractError("household: duplicate appliance id '" + a.id + "'");
      if (a.cls == ApplianceClass::TimeShiftable) {
        ++ts;
        if (a.run_profile.empty() ||
            std::any_of(a.run_profile.begin(), a.run_profile.end(), [](double v) { return !(v > 0.0); }))
          throw ContractError("household: time-shiftable '" + a.id + "' needs a strictly positive run profile");
      } else {
        if (!a.run_profile.empty())
          throw ContractError("household: run profile given for non time-shiftable '" + a.id + "'");
        if (a.cls == ApplianceClass::PowerCurtailable) ++pc;
      }
    }
    if (ts > kMaxTimeShiftable) throw ContractError("household: more than four time-shiftable appliances");
    if (pc > 1) throw ContractError("household: more than one power-curtailable appliance");
    const std::size_t length = demand_.empty() ? 0 : demand_.front().size();
    if (length % kSlotsPerDay != 0) throw ContractError("household: series length is not whole days");
    for (const auto& s : demand_) {
      if (s.size() != length) throw ContractError("household: series lengths differ");
      for (double v : s)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("household: demand must be finite and >= 0");
    }
    const std::size_t n_days = length / kSlotsPerDay;
    if (dates_.empty()) {
      dates_.resize(n_days);
      for (std::size_t d = 0; d < n_days; ++d) dates_[d] = static_cast<DayNumber>(d);
    }
    if (dates_.size() != n_days) throw ContractError("household: dates do not match day count");
    if (!std::is_sorted(dates_.begin(), dates_.end()) ||
        std::adjacent_find(dates_.begin(), dates_.end()) != dates_.end())
      throw ContractError("household: dates must be strictly increasing");
  }

  std::string id_;
  std::vector<Appliance> appliances_;
  std::vector<std::vector<double>> demand_;
  std::vector<DayNumber> dates_;
};

/// Sum of all appliance demands at `t` in kW.
inline double total_demand(const Household& h, SlotIndex t) {
  if (t.slot >= kSlotsPerDay || t.day >= h.days()) throw std::out_of_range("total_demand: slot out of range");
  double total = 0.0;
  for (std::size_t i = 0; i < h.appliances().size(); ++i) total += h.series(i)[t.flat()];
  return total;
}

struct Partition {
  std::vector<Appliance> time_shiftable;
  std::vector<Appliance> power_curtailable;
  std::vector<Appliance> non_shiftable;
};

inline Partition classify_partition(const Household& h) {
  Partition p;
  for (const auto& a : h.appliances()) {
    switch (a.cls) {
      case ApplianceClass::TimeShiftable: p.time_shiftable.push_back(a); break;
      case ApplianceClass::PowerCurtailable: p.power_curtailable.push_back(a); break;
      case ApplianceClass::NonShiftable: p.non_shiftable.push_back(a); break;
    }
  }
  return p;
}

/// A request to start a time-shiftable appliance, raised at the first slot
/// of a contiguous positive-demand run; the run itself is the profile.
struct TsRequest {
  std::size_t arrival = 0;
  std::vector<double> profile;
};

inline std::vector<TsRequest> extract_requests(std::span<const double> day) {
  std::vector<TsRequest> out;
  std::size_t i = 0;
  while (i < day.size()) {
    if (day[i] > 0.0) {
      TsRequest r{i, {}};
      while (i < day.size() && day[i] > 0.0) r.profile.push_back(day[i++]);
      out.push_back(std::move(r));
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace irl_dr
