#pragma once

// Dense two-phase primal simplex for small bounded-variable linear programs,
// with Bland's rule against cycling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "irl_dr/error.hpp"

namespace irl_dr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, GreaterEqual, Equal };

struct LpRow {
  std::vector<double> coeffs;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
};

/// maximize objective . x  subject to rows and lower <= x <= upper.
struct LpProblem {
  std::vector<double> objective;
  std::vector<LpRow> rows;
  std::vector<double> lower;
  std::vector<double> upper;

  explicit LpProblem(std::size_t n = 0) : objective(n, 0.0), lower(n, 0.0), upper(n, kInf) {}

  std::size_t variables() const { return objective.size(); }

  void add_row(std::vector<double> coeffs, RowSense sense, double rhs) {
    rows.push_back({std::move(coeffs), sense, rhs});
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
};

/// Plain-text dump: objective, one line per row, then bounds.
inline void dump_lp(std::ostream& os, const LpProblem& p) {
  os << "maximize\n ";
  for (std::size_t j = 0; j < p.variables(); ++j) os << ' ' << p.objective[j] << "*x" << j;
  os << "\nsubject to\n";
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    os << " r" << i << ':';
    for (std::size_t j = 0; j < p.rows[i].coeffs.size(); ++j)
      if (p.rows[i].coeffs[j] != 0.0) os << ' ' << p.rows[i].coeffs[j] << "*x" << j;
    const char* rel = p.rows[i].sense == RowSense::LessEqual ? "<=" : p.rows[i].sense == RowSense::GreaterEqual ? ">=" : "=";
    os << ' ' << rel << ' ' << p.rows[i].rhs << '\n';
  }
  os << "bounds\n";
  for (std::size_t j = 0; j < p.variables(); ++j) os << ' ' << p.lower[j] << " <= x" << j << " <= " << p.upper[j] << '\n';
  os << "end\n";
}

namespace detail {

/// Dense tableau with an explicit basis. Column `cols` holds the rhs.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), a_((rows + 1) * (cols + 1), 0.0), basis_(rows) {}

  double& at(std::size_t r, std::size_t c) { return a_[r * (n_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return a_[r * (n_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, n_); }
  /// Objective row (reduced costs, minimization form) sits at index m_.
  double& cost(std::size_t c) { return at(m_, c); }

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t c) {
    const double inv = 1.0 / at(r, c);
    for (std::size_t k = 0; k <= n_; ++k) at(r, k) *= inv;
    at(r, c) = 1.0;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t k = 0; k <= n_; ++k) at(i, k) -= f * at(r, k);
      at(i, c) = 0.0;
    }
    basis_[r] = c;
  }

  /// Minimizes the cost row over columns flagged in `allowed` using Bland's
  /// rule. Returns false when unbounded.
  bool optimize(const std::vector<bool>& allowed, double tol) {
    for (;;) {
      std::size_t enter = n_;
      for (std::size_t c = 0; c < n_; ++c) {
        if (allowed[c] && cost(c) < -tol) {
          enter = c;
          break;
        }
      }
      if (enter == n_) return true;
      std::size_t leave = m_;
      double best = kInf;
      for (std::size_t r = 0; r < m_; ++r) {
        const double coef = at(r, enter);
        if (coef > tol) {
          const double ratio = rhs(r) / coef;
          if (ratio < best - tol || (ratio <= best + tol && leave < m_ && basis_[r] < basis_[leave])) {
            best = std::min(best, ratio);
            leave = r;
          }
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
    }
  }

 private:
  std::size_t m_, n_;
  std::vector<double> a_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

/// Solves `p`. Variables with finite bounds are shifted (and split when
/// free); finite upper bounds become explicit rows. Rows are scaled to unit
/// max-norm before phase 1.
inline LpSolution solve(const LpProblem& p) {
  const std::size_t n = p.variables();
  if (p.lower.size() != n || p.upper.size() != n) throw ContractError("linprog: bound vectors do not match objective");
  for (const auto& row : p.rows)
    if (row.coeffs.size() != n) throw ContractError("linprog: row width does not match objective");
  for (std::size_t j = 0; j < n; ++j)
    if (!(p.lower[j] <= p.upper[j])) throw ContractError("linprog: lower bound exceeds upper bound");
  constexpr double tol = 1e-10;

  // Map each original variable to one or two nonnegative columns:
  //   finite lower:  x = lower + y
  //   only upper:    x = upper - y
  //   free:          x = y+ - y-
  struct Map {
    std::size_t col = 0;
    std::size_t neg = SIZE_MAX;
    double offset = 0.0;
    double sign = 1.0;
  };
  std::vector<Map> map(n);
  std::size_t ncols = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isfinite(p.lower[j])) {
      map[j] = {ncols++, SIZE_MAX, p.lower[j], 1.0};
    } else if (std::isfinite(p.upper[j])) {
      map[j] = {ncols++, SIZE_MAX, p.upper[j], -1.0};
    } else {
      map[j] = {ncols, ncols + 1, 0.0, 1.0};
      ncols += 2;
    }
  }

  // Rows in transformed space: coeffs over ncols, sense, rhs.
  std::vector<LpRow> rows;
  rows.reserve(p.rows.size() + n);
  auto transform = [&](const std::vector<double>& coeffs, RowSense sense, double rhs) {
    LpRow r{std::vector<double>(ncols, 0.0), sense, rhs};
    for (std::size_t j = 0; j < n; ++j) {
      const double a = coeffs[j];
      if (a == 0.0) continue;
      r.rhs -= a * map[j].offset;
      r.coeffs[map[j].col] += a * map[j].sign;
      if (map[j].neg != SIZE_MAX) r.coeffs[map[j].neg] -= a;
    }
    rows.push_back(std::move(r));
  };
  for (const auto& row : p.rows) transform(row.coeffs, row.sense, row.rhs);
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isfinite(p.lower[j]) && std::isfinite(p.upper[j])) {
      std::vector<double> e(n, 0.0);
      e[j] = 1.0;
      transform(e, RowSense::LessEqual, p.upper[j]);
    }
  }
  for (auto& r : rows) {
    double scale = 0.0;
    for (double v : r.coeffs) scale = std::max(scale, std::abs(v));
    if (scale > 0.0) {
      for (double& v : r.coeffs) v /= scale;
      r.rhs /= scale;
    } else {
      const bool ok = (r.sense == RowSense::LessEqual && r.rhs >= -1e-9) ||
                      (r.sense == RowSense::GreaterEqual && r.rhs <= 1e-9) ||
                      (r.sense == RowSense::Equal && std::abs(r.rhs) <= 1e-9);
      if (!ok) return {LpStatus::Infeasible, {}, 0.0};
      r.sense = RowSense::LessEqual;
      r.rhs = 0.0;
    }
    if (r.rhs < 0.0) {
      for (double& v : r.coeffs) v = -v;
      r.rhs = -r.rhs;
      if (r.sense == RowSense::LessEqual)
        r.sense = RowSense::GreaterEqual;
      else if (r.sense == RowSense::GreaterEqual)
        r.sense = RowSense::LessEqual;
    }
  }

  const std::size_t m = rows.size();
  std::size_t n_slack = 0, n_art = 0;
  for (const auto& r : rows) {
    if (r.sense != RowSense::Equal) ++n_slack;
    if (r.sense != RowSense::LessEqual) ++n_art;
  }
  const std::size_t slack0 = ncols, art0 = ncols + n_slack, total = ncols + n_slack + n_art;
  detail::Tableau t(m, total);
  std::size_t s = slack0, a = art0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < ncols; ++c) t.at(i, c) = rows[i].coeffs[c];
    t.rhs(i) = rows[i].rhs;
    switch (rows[i].sense) {
      case RowSense::LessEqual:
        t.at(i, s) = 1.0;
        t.basis()[i] = s++;
        break;
      case RowSense::GreaterEqual:
        t.at(i, s++) = -1.0;
        t.at(i, a) = 1.0;
        t.basis()[i] = a++;
        break;
      case RowSense::Equal:
        t.at(i, a) = 1.0;
        t.basis()[i] = a++;
        break;
    }
  }

  // Phase 1: minimize the sum of artificials.
  std::vector<bool> allowed(total, true);
  if (n_art > 0) {
    for (std::size_t c = art0; c < total; ++c) t.cost(c) = 1.0;
    t.cost(total) = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis()[i] >= art0) {
        for (std::size_t c = 0; c <= total; ++c) t.cost(c) -= t.at(i, c);
      }
    }
    t.optimize(allowed, tol);
    if (-t.cost(total) > 1e-8) return {LpStatus::Infeasible, {}, 0.0};
    // Drive remaining artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis()[i] < art0) continue;
      for (std::size_t c = 0; c < art0; ++c) {
        if (std::abs(t.at(i, c)) > 1e-9) {
          t.pivot(i, c);
          break;
        }
      }
    }
    for (std::size_t c = art0; c < total; ++c) allowed[c] = false;
  }

  // Phase 2: minimize -objective in transformed columns. The cost row is
  // scaled to unit max-norm so the reduced-cost tolerance stays relative.
  double cost_scale = 0.0;
  for (double v : p.objective) cost_scale = std::max(cost_scale, std::abs(v));
  if (cost_scale == 0.0) cost_scale = 1.0;
  for (std::size_t c = 0; c <= total; ++c) t.cost(c) = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double c = p.objective[j] / cost_scale;
    t.cost(map[j].col) -= c * map[j].sign;
    if (map[j].neg != SIZE_MAX) t.cost(map[j].neg) += c;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t b = t.basis()[i];
    const double f = t.cost(b);
    if (f == 0.0) continue;
    for (std::size_t c = 0; c <= total; ++c) t.cost(c) -= f * t.at(i, c);
  }
  if (!t.optimize(allowed, tol)) return {LpStatus::Unbounded, {}, 0.0};

  std::vector<double> y(total, 0.0);
  for (std::size_t i = 0; i < m; ++i) y[t.basis()[i]] = t.rhs(i);
  LpSolution sol;
  sol.status = LpStatus::Optimal;
  sol.x.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double v = map[j].offset + map[j].sign * y[map[j].col];
    if (map[j].neg != SIZE_MAX) v -= y[map[j].neg];
    sol.x[j] = std::clamp(v, p.lower[j], p.upper[j]);
    sol.objective += p.objective[j] * sol.x[j];
  }
  return sol;
}

}  // namespace irl_dr
