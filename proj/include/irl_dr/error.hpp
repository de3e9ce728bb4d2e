#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irl_dr {

/// A caller broke a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while ingesting a data file. Row is 1-based (header = row 1);
/// zero means "not tied to a row".
class LoadError : public std::runtime_error {
 public:
  LoadError(const std::string& message, std::size_t row = 0, std::string column = {})
      : std::runtime_error(format(message, row, column)), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& message, std::size_t row, const std::string& column) {
    std::string out = message;
    if (row != 0) out += " (row " + std::to_string(row);
    if (!column.empty()) out += (row != 0 ? ", column '" : " (column '") + column + "'";
    if (row != 0 || !column.empty()) out += ")";
    return out;
  }

  std::size_t row_;
  std::string column_;
};

class MetricError : public std::domain_error {
 public:
  enum class Kind { LengthMismatch, TooShort, ConstantSeries, Empty };

  MetricError(Kind kind, const std::string& message) : std::domain_error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractError(message);
}

}  // namespace irl_dr
