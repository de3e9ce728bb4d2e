#pragma once

// Per-appliance consumption CSV ingestion, calendar train/test splitting and
// a synthetic household generator with the same schema.
//
// CSV schema: a header row, one ISO-8601 timestamp column at 15-minute
// cadence, one numeric kW column per appliance. A column mapping assigns
// columns to appliance classes; unmapped numeric columns are summed into a
// single non-shiftable "base" appliance.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "irl_dr/calendar.hpp"
#include "irl_dr/core.hpp"
#include "irl_dr/error.hpp"
#include "irl_dr/rng.hpp"

namespace irl_dr {

struct ColumnRole {
  std::string column;
  std::string class_name;
  std::string name;
  /// Nominal draw used as run profile when a time-shiftable column never runs.
  double rated_kw = 1.0;
};

struct ColumnMapping {
  std::string timestamp_column = "timestamp";
  std::string household_id;
  std::vector<ColumnRole> columns;
  /// Columns to skip entirely (ids, flags).
  std::vector<std::string> ignore;

  /// {"timestamp": "...", "household_id": "...", "ignore": [...],
  ///  "columns": {"<csv column>": {"class": "TimeShiftable", "name": "ev",
  ///  "rated_kw": 3.3}}}
  static ColumnMapping from_json(const nlohmann::json& j) {
    ColumnMapping m;
    m.timestamp_column = j.value("timestamp", m.timestamp_column);
    m.household_id = j.value("household_id", std::string{});
    m.ignore = j.value("ignore", std::vector<std::string>{});
    if (j.contains("columns")) {
      for (const auto& [column, role] : j.at("columns").items()) {
        ColumnRole r;
        r.column = column;
        r.class_name = role.value("class", std::string{});
        r.name = role.value("name", column);
        r.rated_kw = role.value("rated_kw", 1.0);
        m.columns.push_back(std::move(r));
      }
    }
    return m;
  }

  nlohmann::json to_json() const {
    nlohmann::json cols = nlohmann::json::object();
    for (const auto& c : columns) cols[c.column] = {{"class", c.class_name}, {"name", c.name}, {"rated_kw", c.rated_kw}};
    return {{"timestamp", timestamp_column}, {"household_id", household_id}, {"ignore", ignore}, {"columns", cols}};
  }
};

struct LoadReport {
  struct Repair {
    std::string after;
    std::size_t slots = 0;
  };
  std::size_t rows = 0;
  std::vector<Repair> repairs;
  std::vector<std::string> dropped_days;
  std::size_t clamped_negatives = 0;
  std::vector<std::string> missing_columns;
  std::vector<std::string> base_columns;

  nlohmann::json to_json() const {
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& r : repairs) reps.push_back({{"after", r.after}, {"slots", r.slots}});
    return {{"rows", rows},
            {"repairs", reps},
            {"repair_count", repairs.size()},
            {"dropped_days", dropped_days},
            {"clamped_negatives", clamped_negatives},
            {"missing_columns", missing_columns},
            {"base_columns", base_columns}};
  }
};

struct LoadedHousehold {
  Household household;
  LoadReport report;
};

inline constexpr std::size_t kMaxRepairSlots = 4;

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r\"");
    const auto e = cell.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace detail

inline LoadedHousehold load_household(const std::string& path, const ColumnMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open data file '" + path + "'");

  // Validate the mapping before touching data.
  std::map<std::string, std::pair<ApplianceClass, const ColumnRole*>> roles;
  for (const auto& role : mapping.columns) {
    const auto cls = parse_appliance_class(role.class_name);
    if (!cls) throw LoadError("mapping key 'columns." + role.column + ".class': unknown class '" + role.class_name + "'", 0, role.column);
    roles[role.column] = {*cls, &role};
  }

  std::string line;
  if (!std::getline(in, line)) throw LoadError("data file '" + path + "' is empty", 1);
  const auto header = detail::split_csv_line(line);
  std::optional<std::size_t> ts_col;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == mapping.timestamp_column) ts_col = c;
  if (!ts_col) throw LoadError("missing timestamp column '" + mapping.timestamp_column + "'", 1, mapping.timestamp_column);

  const std::set<std::string> ignored(mapping.ignore.begin(), mapping.ignore.end());
  std::vector<std::size_t> value_cols;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != *ts_col && !ignored.count(header[c])) value_cols.push_back(c);

  LoadReport report;
  std::vector<std::int64_t> stamps;
  std::vector<std::vector<double>> values(value_cols.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) throw LoadError("wrong number of fields", row);
    const auto t = parse_timestamp_minutes(cells[*ts_col]);
    if (!t) throw LoadError("unparseable timestamp '" + cells[*ts_col] + "'", row, header[*ts_col]);
    if (*t % 15 != 0) throw LoadError("timestamp not on the 15-minute grid", row, header[*ts_col]);
    if (!stamps.empty() && *t <= stamps.back()) throw LoadError("timestamps are not strictly increasing", row, header[*ts_col]);
    stamps.push_back(*t);
    for (std::size_t k = 0; k < value_cols.size(); ++k) {
      const auto v = detail::parse_number(cells[value_cols[k]]);
      if (!v) throw LoadError("unparseable number '" + cells[value_cols[k]] + "'", row, header[value_cols[k]]);
      double x = *v;
      if (x < 0.0) {
        x = 0.0;
        ++report.clamped_negatives;
      }
      values[k].push_back(x);
    }
  }
  report.rows = stamps.size();
  if (stamps.empty()) throw LoadError("data file '" + path + "' has no rows", 2);

  // Place readings on a dense whole-day grid, repairing short gaps.
  const auto floor_day = [](std::int64_t minutes) {
    return static_cast<DayNumber>(minutes >= 0 ? minutes / 1440 : (minutes - 1439) / 1440);
  };
  const DayNumber first_day = floor_day(stamps.front());
  const DayNumber last_day = floor_day(stamps.back());
  const std::size_t n_days = static_cast<std::size_t>(last_day - first_day + 1);
  const std::size_t n_slots = n_days * kSlotsPerDay;
  const std::int64_t origin = static_cast<std::int64_t>(first_day) * 1440;
  std::vector<bool> present(n_slots, false);
  std::vector<std::vector<double>> grid(value_cols.size(), std::vector<double>(n_slots, 0.0));
  for (std::size_t r = 0; r < stamps.size(); ++r) {
    const auto idx = static_cast<std::size_t>((stamps[r] - origin) / 15);
    present[idx] = true;
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k][idx] = values[k][r];
  }
  std::vector<bool> bad_day(n_days, false);
  std::size_t i = 0;
  while (i < n_slots) {
    if (present[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n_slots && !present[j]) ++j;
    const std::size_t len = j - i;
    if (i > 0 && j < n_slots && len <= kMaxRepairSlots) {
      for (std::size_t k = 0; k < grid.size(); ++k)
        for (std::size_t s = i; s < j; ++s) {
          const double w = static_cast<double>(s - i + 1) / static_cast<double>(len + 1);
          grid[k][s] = (1.0 - w) * grid[k][i - 1] + w * grid[k][j];
        }
      report.repairs.push_back({format_timestamp_minutes(origin + static_cast<std::int64_t>(i - 1) * 15), len});
    } else {
      for (std::size_t s = i; s < j; ++s) bad_day[s / kSlotsPerDay] = true;
    }
    i = j;
  }

  std::vector<std::size_t> keep;
  std::vector<DayNumber> dates;
  for (std::size_t d = 0; d < n_days; ++d) {
    const DayNumber date = first_day + static_cast<DayNumber>(d);
    if (bad_day[d]) {
      report.dropped_days.push_back(format_day(date));
    } else {
      keep.push_back(d);
      dates.push_back(date);
    }
  }
  if (keep.empty()) throw LoadError("no complete day in '" + path + "'");
  auto compact = [&](const std::vector<double>& series) {
    std::vector<double> out;
    out.reserve(keep.size() * kSlotsPerDay);
    for (std::size_t d : keep)
      out.insert(out.end(), series.begin() + static_cast<std::ptrdiff_t>(d * kSlotsPerDay),
                 series.begin() + static_cast<std::ptrdiff_t>((d + 1) * kSlotsPerDay));
    return out;
  };

  std::vector<Appliance> appliances;
  std::vector<std::vector<double>> demand;
  std::vector<double> base(keep.size() * kSlotsPerDay, 0.0);
  std::set<std::string> seen;
  for (std::size_t k = 0; k < value_cols.size(); ++k) {
    const std::string& name = header[value_cols[k]];
    seen.insert(name);
    auto series = compact(grid[k]);
    const auto it = roles.find(name);
    if (it == roles.end()) {
      for (std::size_t s = 0; s < base.size(); ++s) base[s] += series[s];
      report.base_columns.push_back(name);
      continue;
    }
    Appliance a{name, it->second.first, it->second.second->name, {}};
    if (a.cls == ApplianceClass::TimeShiftable) {
      const auto runs = extract_requests(series);
      a.run_profile = runs.empty() ? std::vector<double>{it->second.second->rated_kw} : runs.front().profile;
    }
    appliances.push_back(std::move(a));
    demand.push_back(std::move(series));
  }
  for (const auto& role : mapping.columns) {
    if (seen.count(role.column)) continue;
    report.missing_columns.push_back(role.column);
    const auto cls = roles[role.column].first;
    Appliance a{role.column, cls, role.name, {}};
    if (cls == ApplianceClass::TimeShiftable) a.run_profile = {role.rated_kw};
    appliances.push_back(std::move(a));
    demand.emplace_back(base.size(), 0.0);
  }
  if (!report.base_columns.empty() || appliances.empty()) {
    appliances.push_back({"base", ApplianceClass::NonShiftable, "base", {}});
    demand.push_back(std::move(base));
  }
  std::string id = mapping.household_id;
  if (id.empty()) {
    const auto slash = path.find_last_of('/');
    id = path.substr(slash == std::string::npos ? 0 : slash + 1);
    if (const auto dot = id.find_last_of('.'); dot != std::string::npos) id = id.substr(0, dot);
  }
  try {
    return {Household(id, std::move(appliances), std::move(demand), std::move(dates)), std::move(report)};
  } catch (const ContractError& e) {
    throw LoadError(std::string("invalid household: ") + e.what());
  }
}

/// Writes the household in the ingestion schema ("timestamp" plus one
/// column per appliance id).
inline void save_household_csv(const std::string& path, const Household& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "timestamp";
  for (const auto& a : h.appliances()) out << ',' << a.id;
  out << '\n';
  char buf[32];
  for (std::size_t d = 0; d < h.days(); ++d) {
    for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
      out << format_timestamp_minutes(static_cast<std::int64_t>(h.dates()[d]) * 1440 + static_cast<std::int64_t>(s) * 15);
      for (std::size_t i = 0; i < h.appliances().size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", h.series(i)[d * kSlotsPerDay + s]);
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

/// Mapping that reloads a file written by save_household_csv.
inline ColumnMapping mapping_for(const Household& h) {
  ColumnMapping m;
  m.household_id = h.id();
  for (const auto& a : h.appliances()) {
    ColumnRole r{a.id, std::string(to_string(a.cls)), a.name, a.run_profile.empty() ? 1.0 : a.run_profile.front()};
    m.columns.push_back(std::move(r));
  }
  return m;
}

// Household cache: <base>.bin is every series as little-endian float64,
// appliance-major ([appliance][slot]); <base>.json records id, dates and the
// inventory.

inline void save_household_cache(const std::string& base, const Household& h) {
  nlohmann::json side;
  side["format"] = "irl-dr-household";
  side["version"] = 1;
  side["dtype"] = "float64-le";
  side["id"] = h.id();
  side["shape"] = {h.appliances().size(), h.days() * kSlotsPerDay};
  std::vector<std::string> dates;
  for (auto d : h.dates()) dates.push_back(format_day(d));
  side["dates"] = dates;
  side["appliances"] = nlohmann::json::array();
  for (const auto& a : h.appliances())
    side["appliances"].push_back({{"id", a.id}, {"class", to_string(a.cls)}, {"name", a.name}, {"run_profile", a.run_profile}});
  std::ofstream js(base + ".json");
  js << side.dump(2) << '\n';
  std::ofstream bin(base + ".bin", std::ios::binary);
  for (std::size_t i = 0; i < h.appliances().size(); ++i)
    for (double v : h.series(i)) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      char bytes[8];
      for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xFF);
      bin.write(bytes, 8);
    }
  if (!js || !bin) throw std::runtime_error("cannot write household cache " + base);
}

inline Household load_household_cache(const std::string& base) {
  std::ifstream js(base + ".json");
  if (!js) throw LoadError("missing household cache sidecar " + base + ".json");
  const auto side = nlohmann::json::parse(js);
  std::vector<Appliance> appliances;
  for (const auto& a : side.at("appliances")) {
    const auto cls = parse_appliance_class(a.at("class").get<std::string>());
    if (!cls) throw LoadError("household cache: unknown class", 0, "class");
    appliances.push_back({a.at("id"), *cls, a.at("name"), a.at("run_profile").get<std::vector<double>>()});
  }
  std::vector<DayNumber> dates;
  for (const auto& d : side.at("dates")) {
    const auto day = parse_day(d.get<std::string>());
    if (!day) throw LoadError("household cache: bad date");
    dates.push_back(*day);
  }
  const auto length = side.at("shape").at(1).get<std::size_t>();
  std::ifstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw LoadError("missing household cache " + base + ".bin");
  std::vector<std::vector<double>> demand(appliances.size(), std::vector<double>(length));
  for (auto& series : demand)
    for (double& v : series) {
      unsigned char bytes[8];
      if (!bin.read(reinterpret_cast<char*>(bytes), 8)) throw LoadError("household cache truncated");
      std::uint64_t bits = 0;
      for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
      v = std::bit_cast<double>(bits);
    }
  return Household(side.at("id"), std::move(appliances), std::move(demand), std::move(dates));
}

/// Month/day range [start, end) within the household's year.
struct DateRange {
  unsigned start_month = 1, start_day = 1;
  unsigned end_month = 1, end_day = 1;

  DayNumber start(int year) const { return make_day(year, start_month, start_day); }
  DayNumber end(int year) const { return make_day(year, end_month, end_day); }
};

/// Training covers April 1 through July 1 and August 2 through November 1
/// (both inclusive); the 31 days in between are the test period.
struct SplitSpec {
  std::vector<DateRange> train{{4, 1, 7, 2}, {8, 2, 11, 2}};
  std::vector<DateRange> test{{7, 2, 8, 2}};
};

struct DaySplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Day indices per split. Every calendar day of the split's ranges must be
/// present in the household unless `allow_missing` is set.
inline DaySplit split(const Household& h, const SplitSpec& spec, bool allow_missing = false) {
  if (h.days() == 0) throw LoadError("split: household has no days");
  const int year = static_cast<int>(to_ymd(h.dates().front()).year());
  std::vector<std::string> missing;
  auto collect = [&](const std::vector<DateRange>& ranges) {
    std::vector<std::size_t> out;
    for (const auto& r : ranges)
      for (DayNumber d = r.start(year); d < r.end(year); ++d) {
        if (const auto idx = h.day_of(d))
          out.push_back(*idx);
        else
          missing.push_back(format_day(d));
      }
    std::sort(out.begin(), out.end());
    return out;
  };
  DaySplit s{collect(spec.train), collect(spec.test)};
  if (!missing.empty() && !allow_missing) {
    std::string list;
    for (std::size_t k = 0; k < missing.size(); ++k) {
      if (k == 8) {
        list += ", ... (" + std::to_string(missing.size()) + " total)";
        break;
      }
      list += (k ? ", " : "") + missing[k];
    }
    throw LoadError("split: household does not cover dates " + list);
  }
  std::vector<std::size_t> both;
  std::set_intersection(s.train.begin(), s.train.end(), s.test.begin(), s.test.end(), std::back_inserter(both));
  if (!both.empty()) throw ConfigError("split: train and test ranges overlap");
  return s;
}

enum class Archetype { Full, NoEv, NoDishwasher, LowActivity, NoAc };

inline std::optional<Archetype> parse_archetype(std::string_view s) {
  if (s == "full") return Archetype::Full;
  if (s == "no_ev" || s == "no-EV" || s == "no-ev") return Archetype::NoEv;
  if (s == "no_dishwasher") return Archetype::NoDishwasher;
  if (s == "low_activity") return Archetype::LowActivity;
  if (s == "no_ac") return Archetype::NoAc;
  return std::nullopt;
}

inline const char* to_string(Archetype a) {
  switch (a) {
    case Archetype::Full: return "full";
    case Archetype::NoEv: return "no_ev";
    case Archetype::NoDishwasher: return "no_dishwasher";
    case Archetype::LowActivity: return "low_activity";
    case Archetype::NoAc: return "no_ac";
  }
  return "?";
}

/// Synthetic household from April 1 to November 1, 2018: diurnal
/// non-shiftable load, temperature-driven AC and randomized time-shiftable
/// runs. Every archetype carries the same inventory
/// (ev, washing_machine, dishwasher, dryer, ac, base); absent appliances are
/// zero-filled.
inline Household synth_household(std::uint64_t seed, Archetype archetype) {
  Rng rng(mix_seed(seed, 0x5e7));
  const DayNumber first = make_day(2018, 4, 1);
  const DayNumber last = make_day(2018, 11, 1);
  const std::size_t days = static_cast<std::size_t>(last - first + 1);
  const std::size_t n = days * kSlotsPerDay;
  std::vector<double> ev(n, 0.0), washer(n, 0.0), dish(n, 0.0), dryer(n, 0.0), ac(n, 0.0), base(n, 0.0);

  const bool has_ev = archetype != Archetype::NoEv && archetype != Archetype::LowActivity;
  const bool has_dish = archetype != Archetype::NoDishwasher && archetype != Archetype::LowActivity;
  const bool has_laundry = archetype != Archetype::LowActivity;
  const bool has_ac = archetype != Archetype::NoAc;
  const double ev_kw = rng.bernoulli(0.5) ? 3.3 : 6.6;
  const double ac_gain = rng.uniform(0.35, 0.55);
  const double base_level = rng.uniform(0.2, 0.4);

  auto place = [&](std::vector<double>& series, std::size_t day, std::size_t start, std::size_t len, double kw,
                   double jitter) {
    for (std::size_t s = start; s < std::min(start + len, kSlotsPerDay); ++s)
      series[day * kSlotsPerDay + s] = std::max(0.05, kw + rng.uniform(-jitter, jitter));
  };

  for (std::size_t d = 0; d < days; ++d) {
    const auto ymd = to_ymd(first + static_cast<DayNumber>(d));
    const double doy = static_cast<double>(
        (first + static_cast<DayNumber>(d)) - make_day(static_cast<int>(ymd.year()), 1, 1));
    const double t_mean = 19.0 + 10.0 * std::exp(-std::pow((doy - 205.0) / 55.0, 2.0)) + rng.normal(0.0, 1.5);
    const double day_factor = rng.uniform(0.85, 1.15);
    for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
      const double hour = static_cast<double>(s) / 4.0;
      const double morning = std::exp(-std::pow((hour - 7.5) / 1.2, 2.0));
      const double evening = std::exp(-std::pow((hour - 19.5) / 2.0, 2.0));
      const double load = base_level + 0.35 * morning + 0.8 * evening + rng.normal(0.0, 0.04);
      base[d * kSlotsPerDay + s] = std::max(0.05, day_factor * load);
      if (has_ac) {
        const double temp = t_mean + 5.0 * std::sin(2.0 * std::numbers::pi * (hour - 9.0) / 24.0);
        const double kw = std::clamp(ac_gain * (temp - 25.0), 0.0, 3.5);
        ac[d * kSlotsPerDay + s] = kw > 0.1 ? kw : 0.0;
      }
    }
    if (has_ev && rng.bernoulli(0.45)) {
      const std::size_t start = 68 + rng.index(13);
      place(ev, d, start, 8 + rng.index(9), ev_kw, 0.0);
    }
    if (has_laundry && rng.bernoulli(0.45)) {
      const std::size_t start = 32 + rng.index(40);
      const std::size_t len = 4 + rng.index(3);
      place(washer, d, start, len, 0.5, 0.1);
      if (rng.bernoulli(0.6)) place(dryer, d, start + len + 1 + rng.index(3), 4 + rng.index(2), 2.8, 0.2);
    }
    if (has_dish && rng.bernoulli(0.5)) place(dish, d, 76 + rng.index(11), 4 + rng.index(3), 1.2, 0.1);
  }

  std::vector<Appliance> inv{
      {"ev", ApplianceClass::TimeShiftable, "ev", std::vector<double>(12, ev_kw)},
      {"washing_machine", ApplianceClass::TimeShiftable, "washing_machine", std::vector<double>(5, 0.5)},
      {"dishwasher", ApplianceClass::TimeShiftable, "dishwasher", std::vector<double>(5, 1.2)},
      {"dryer", ApplianceClass::TimeShiftable, "dryer", std::vector<double>(4, 2.8)},
      {"ac", ApplianceClass::PowerCurtailable, "ac", {}},
      {"base", ApplianceClass::NonShiftable, "base", {}},
  };
  std::vector<DayNumber> dates(days);
  for (std::size_t d = 0; d < days; ++d) dates[d] = first + static_cast<DayNumber>(d);
  return Household(std::string("synth-") + to_string(archetype) + "-" + std::to_string(seed), std::move(inv),
                   {std::move(ev), std::move(washer), std::move(dish), std::move(dryer), std::move(ac), std::move(base)},
                   std::move(dates));
}

/// Number of controllable appliances (time-shiftable or curtailable) with
/// any demand on `day`.
inline std::size_t active_controllables(const Household& h, std::size_t day) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < h.appliances().size(); ++i) {
    if (h.appliances()[i].cls == ApplianceClass::NonShiftable) continue;
    const auto s = h.day_series(i, day);
    if (std::any_of(s.begin(), s.end(), [](double v) { return v > 0.0; })) ++count;
  }
  return count;
}

}  // namespace irl_dr
