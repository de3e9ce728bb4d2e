#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace irl_dr {

/// Calendar day as days since 1970-01-01.
using DayNumber = std::int32_t;

inline DayNumber make_day(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  return static_cast<DayNumber>(sys_days{ymd}.time_since_epoch().count());
}

inline std::chrono::year_month_day to_ymd(DayNumber d) {
  return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{d}}};
}

inline std::string format_day(DayNumber d) {
  const auto ymd = to_ymd(d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

/// Parses "YYYY-MM-DD". Returns nullopt on malformed or invalid dates.
inline std::optional<DayNumber> parse_day(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (text.size() < 10) return std::nullopt;
  const std::string head(text.substr(0, 10));
  if (std::sscanf(head.c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return make_day(y, m, d);
}

/// Parses an ISO-8601 timestamp ("YYYY-MM-DD HH:MM[:SS]" or with 'T';
/// a trailing zone suffix is ignored) to minutes since the epoch.
inline std::optional<std::int64_t> parse_timestamp_minutes(std::string_view text) {
  const auto day = parse_day(text);
  if (!day || text.size() < 16) return std::nullopt;
  if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
  unsigned hh = 0, mm = 0;
  const std::string clock(text.substr(11, 5));
  if (std::sscanf(clock.c_str(), "%2u:%2u", &hh, &mm) != 2 || hh > 23 || mm > 59) return std::nullopt;
  return static_cast<std::int64_t>(*day) * 1440 + hh * 60 + mm;
}

inline std::string format_timestamp_minutes(std::int64_t minutes) {
  const auto day = static_cast<DayNumber>(minutes >= 0 ? minutes / 1440 : (minutes - 1439) / 1440);
  const auto rem = minutes - static_cast<std::int64_t>(day) * 1440;
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", static_cast<int>(rem / 60), static_cast<int>(rem % 60));
  return format_day(day) + " " + buf + ":00";
}

}  // namespace irl_dr
