#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "irl_dr/error.hpp"

namespace irl_dr {

namespace detail {
inline void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw MetricError(MetricError::Kind::LengthMismatch, "metric: series lengths differ");
  if (a.size() < 2) throw MetricError(MetricError::Kind::TooShort, "metric: series need at least two values");
}
}  // namespace detail

inline double mae(std::span<const double> a, std::span<const double> b) {
  detail::check_pair(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

inline double mse(std::span<const double> a, std::span<const double> b) {
  detail::check_pair(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

/// Sample correlation; throws MetricError(ConstantSeries) when either input
/// has zero variance.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  detail::check_pair(a, b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  constexpr double floor = 1e-24;
  if (saa <= floor || sbb <= floor)
    throw MetricError(MetricError::Kind::ConstantSeries, "pearson: undefined for a constant series");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Pearson with the undefined case as nullopt.
inline std::optional<double> try_pearson(std::span<const double> a, std::span<const double> b) {
  try {
    return pearson(a, b);
  } catch (const MetricError& e) {
    if (e.kind() == MetricError::Kind::ConstantSeries) return std::nullopt;
    throw;
  }
}

struct Aggregate {
  double average = 0.0;
  double minimum = 0.0;
  double maximum = 0.0;
  double median = 0.0;
};

inline Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) throw MetricError(MetricError::Kind::Empty, "aggregate: no values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  Aggregate out;
  out.average = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  out.minimum = v.front();
  out.maximum = v.back();
  const std::size_t mid = v.size() / 2;
  out.median = v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  return out;
}

/// Metrics of one evaluation day.
struct DayMetrics {
  double mae = 0.0;
  double mse = 0.0;
  std::optional<double> pearson;
};

inline DayMetrics compare_series(std::span<const double> expert, std::span<const double> learned) {
  return {mae(expert, learned), mse(expert, learned), try_pearson(expert, learned)};
}

}  // namespace irl_dr
