#pragma once

// Linear-programming IRL for finite MDPs with known transitions: recover a
// state reward under which the observed policy is optimal, preferring large
// action gaps and small L1 norm.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "irl_dr/error.hpp"
#include "irl_dr/linprog.hpp"

namespace irl_dr {

struct FiniteMdp {
  std::size_t states = 0;
  std::size_t actions = 0;
  /// transitions[a](s, s') = P(s' | s, a); each row sums to one.
  std::vector<Eigen::MatrixXd> transitions;
  double gamma = 0.9;
  std::vector<int> expert;

  void validate() const {
    if (states == 0 || actions == 0) throw ContractError("finite mdp: empty state or action set");
    if (transitions.size() != actions) throw ContractError("finite mdp: one transition matrix per action required");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ContractError("finite mdp: gamma must lie in (0, 1)");
    for (const auto& p : transitions) {
      if (p.rows() != static_cast<Eigen::Index>(states) || p.cols() != static_cast<Eigen::Index>(states))
        throw ContractError("finite mdp: transition matrix shape mismatch");
      for (Eigen::Index s = 0; s < p.rows(); ++s) {
        if (std::abs(p.row(s).sum() - 1.0) > 1e-12 || (p.row(s).array() < 0.0).any())
          throw ContractError("finite mdp: transition rows must be stochastic");
      }
    }
    if (expert.size() != states) throw ContractError("finite mdp: expert policy must cover every state");
    for (int a : expert)
      if (a < 0 || a >= static_cast<int>(actions)) throw ContractError("finite mdp: expert action out of range");
  }

  /// Row s is P(. | s, expert(s)).
  Eigen::MatrixXd expert_transitions() const {
    Eigen::MatrixXd p(states, states);
    for (std::size_t s = 0; s < states; ++s) p.row(s) = transitions[expert[s]].row(s);
    return p;
  }
};

struct ExactIrlConfig {
  double lambda = 1.0;
  double r_max = 1.0;
};

/// V = (I - gamma P_expert)^-1 R.
inline Eigen::VectorXd policy_value(const FiniteMdp& m, const Eigen::VectorXd& reward) {
  m.validate();
  require(reward.size() == static_cast<Eigen::Index>(m.states), "policy_value: reward length must equal state count");
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m.states, m.states) - m.gamma * m.expert_transitions();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(std::abs(lu.determinant()) > 0.0)) throw NumericalError("policy_value: singular system");
  return lu.solve(reward);
}

/// (P_expert - P_action) (I - gamma P_expert)^-1 R; nonnegative entries mean
/// the expert's action is at least as good as `action` in that state.
inline Eigen::VectorXd feasibility_residual(const FiniteMdp& m, const Eigen::VectorXd& reward, std::size_t action) {
  require(action < m.actions, "feasibility_residual: action out of range");
  const Eigen::VectorXd v = policy_value(m, reward);
  return (m.expert_transitions() - m.transitions[action]) * v;
}

/// Builds and solves
///   max sum_i min_{a != expert(i)} [(P_e(i) - P_a(i)) V] - lambda |R|_1
///   s.t. (P_e - P_a) V >= 0 for all a, |R_i| <= r_max,  V = (I - gamma P_e)^-1 R.
/// Variable layout: R (N), per-state min margin t (N), |R| bound u (N).
inline LpProblem build_exact_irl_lp(const FiniteMdp& m, const ExactIrlConfig& cfg) {
  m.validate();
  require(cfg.lambda >= 0.0 && cfg.r_max > 0.0, "exact irl: need lambda >= 0 and r_max > 0");
  const std::size_t n = m.states;
  const Eigen::MatrixXd pe = m.expert_transitions();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - m.gamma * pe);
  const Eigen::MatrixXd inv = lu.inverse();

  LpProblem lp(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    lp.lower[i] = -cfg.r_max;
    lp.upper[i] = cfg.r_max;
    lp.lower[n + i] = -kInf;
    lp.upper[n + i] = kInf;
    lp.lower[2 * n + i] = 0.0;
    lp.upper[2 * n + i] = kInf;
    lp.objective[n + i] = 1.0;
    lp.objective[2 * n + i] = -cfg.lambda;
  }
  for (std::size_t a = 0; a < m.actions; ++a) {
    const Eigen::MatrixXd gap = (pe - m.transitions[a]) * inv;
    for (std::size_t i = 0; i < n; ++i) {
      if (static_cast<std::size_t>(m.expert[i]) == a) continue;
      std::vector<double> feas(3 * n, 0.0), margin(3 * n, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        feas[k] = gap(i, k);
        margin[k] = -gap(i, k);
      }
      lp.add_row(std::move(feas), RowSense::GreaterEqual, 0.0);
      margin[n + i] = 1.0;
      lp.add_row(std::move(margin), RowSense::LessEqual, 0.0);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> pos(3 * n, 0.0), neg(3 * n, 0.0);
    pos[i] = 1.0;
    pos[2 * n + i] = -1.0;
    neg[i] = -1.0;
    neg[2 * n + i] = -1.0;
    lp.add_row(std::move(pos), RowSense::LessEqual, 0.0);
    lp.add_row(std::move(neg), RowSense::LessEqual, 0.0);
  }
  // A state whose every action equals the expert's has no margin row; pin
  // its t to zero so the objective stays bounded.
  for (std::size_t i = 0; i < n; ++i) {
    bool has_alternative = false;
    for (std::size_t a = 0; a < m.actions; ++a)
      if (static_cast<std::size_t>(m.expert[i]) != a) has_alternative = true;
    if (!has_alternative) lp.upper[n + i] = 0.0;
  }
  return lp;
}

inline Eigen::VectorXd recover_reward(const FiniteMdp& m, const ExactIrlConfig& cfg) {
  const LpProblem lp = build_exact_irl_lp(m, cfg);
  const LpSolution sol = solve(lp);
  if (sol.status != LpStatus::Optimal)
    throw NumericalError(std::string("exact irl: LP not optimal (") + to_string(sol.status) + ")");
  Eigen::VectorXd r(m.states);
  for (std::size_t i = 0; i < m.states; ++i) r[i] = sol.x[i];
  return r;
}

struct ValueIterationResult {
  Eigen::VectorXd values;
  /// Q(s, a) = R(s) + gamma sum_s' P(s'|s,a) V(s').
  Eigen::MatrixXd q;
  std::vector<int> greedy;
};

/// Optimal values for state reward R; greedy ties go to the lowest action.
inline ValueIterationResult value_iteration(const FiniteMdp& m, const Eigen::VectorXd& reward, double tol = 1e-12,
                                            std::size_t max_iter = 100000) {
  const auto n = static_cast<Eigen::Index>(m.states);
  ValueIterationResult out;
  out.values = Eigen::VectorXd::Zero(n);
  out.q = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(m.actions));
  for (std::size_t it = 0; it < max_iter; ++it) {
    for (std::size_t a = 0; a < m.actions; ++a)
      out.q.col(static_cast<Eigen::Index>(a)) = reward + m.gamma * m.transitions[a] * out.values;
    const Eigen::VectorXd next = out.q.rowwise().maxCoeff();
    const double diff = (next - out.values).cwiseAbs().maxCoeff();
    out.values = next;
    if (diff < tol) break;
  }
  for (std::size_t a = 0; a < m.actions; ++a)
    out.q.col(static_cast<Eigen::Index>(a)) = reward + m.gamma * m.transitions[a] * out.values;
  out.greedy.resize(m.states);
  for (Eigen::Index s = 0; s < n; ++s) {
    int best = 0;
    for (Eigen::Index a = 1; a < out.q.cols(); ++a)
      if (out.q(s, a) > out.q(s, best)) best = static_cast<int>(a);
    out.greedy[static_cast<std::size_t>(s)] = best;
  }
  return out;
}

/// States where exactly one action attains the optimal Q within `tol`.
inline std::vector<bool> uniquely_optimal(const ValueIterationResult& vi, double tol = 1e-9) {
  std::vector<bool> out(static_cast<std::size_t>(vi.q.rows()), false);
  for (Eigen::Index s = 0; s < vi.q.rows(); ++s) {
    const double best = vi.q.row(s).maxCoeff();
    int count = 0;
    for (Eigen::Index a = 0; a < vi.q.cols(); ++a)
      if (vi.q(s, a) >= best - tol) ++count;
    out[static_cast<std::size_t>(s)] = count == 1;
  }
  return out;
}

/// Deterministic size x size gridworld. Actions: 0 up, 1 down, 2 left,
/// 3 right; moves off the grid stay put; the goal is absorbing. The expert
/// is the value-iteration greedy policy for reward 1 at the goal.
struct Gridworld {
  FiniteMdp mdp;
  std::size_t size = 5;
  std::size_t goal = 0;
  Eigen::VectorXd true_reward;
  std::vector<bool> unique;
};

inline Gridworld make_gridworld(std::size_t size = 5, double gamma = 0.9) {
  require(size >= 2, "gridworld: size must be at least 2");
  Gridworld g;
  g.size = size;
  const std::size_t n = size * size;
  g.goal = size - 1;  // top-right corner
  g.mdp.states = n;
  g.mdp.actions = 4;
  g.mdp.gamma = gamma;
  g.mdp.transitions.assign(4, Eigen::MatrixXd::Zero(n, n));
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t r = s / size, c = s % size;
    for (std::size_t a = 0; a < 4; ++a) {
      std::size_t nr = r, nc = c;
      if (s != g.goal) {
        if (a == 0 && r > 0) --nr;
        if (a == 1 && r + 1 < size) ++nr;
        if (a == 2 && c > 0) --nc;
        if (a == 3 && c + 1 < size) ++nc;
      }
      g.mdp.transitions[a](s, nr * size + nc) = 1.0;
    }
  }
  g.true_reward = Eigen::VectorXd::Zero(n);
  g.true_reward[g.goal] = 1.0;
  const auto vi = value_iteration(g.mdp, g.true_reward);
  g.mdp.expert = vi.greedy;
  g.unique = uniquely_optimal(vi);
  g.unique[g.goal] = false;
  return g;
}

/// Fraction of flagged states where the greedy policy under `reward` picks
/// the expert's action.
inline double policy_agreement(const FiniteMdp& m, const Eigen::VectorXd& reward, const std::vector<bool>& mask) {
  const auto vi = value_iteration(m, reward);
  std::size_t total = 0, agree = 0;
  for (std::size_t s = 0; s < m.states; ++s) {
    if (!mask[s]) continue;
    ++total;
    if (vi.greedy[s] == m.expert[s]) ++agree;
  }
  return total == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(total);
}

/// JSON form: {"states", "actions", "gamma", "expert", "transitions":
/// [action][row-major N*N]}.
inline nlohmann::json to_json(const FiniteMdp& m) {
  nlohmann::json j;
  j["states"] = m.states;
  j["actions"] = m.actions;
  j["gamma"] = m.gamma;
  j["expert"] = m.expert;
  j["transitions"] = nlohmann::json::array();
  for (const auto& p : m.transitions) {
    std::vector<double> flat;
    flat.reserve(m.states * m.states);
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      for (Eigen::Index c = 0; c < p.cols(); ++c) flat.push_back(p(r, c));
    j["transitions"].push_back(flat);
  }
  return j;
}

inline FiniteMdp finite_mdp_from_json(const nlohmann::json& j) {
  FiniteMdp m;
  m.states = j.at("states").get<std::size_t>();
  m.actions = j.at("actions").get<std::size_t>();
  m.gamma = j.at("gamma").get<double>();
  m.expert = j.at("expert").get<std::vector<int>>();
  for (const auto& flat_json : j.at("transitions")) {
    const auto flat = flat_json.get<std::vector<double>>();
    if (flat.size() != m.states * m.states) throw ContractError("finite mdp json: transition array has wrong length");
    Eigen::MatrixXd p(m.states, m.states);
    for (std::size_t r = 0; r < m.states; ++r)
      for (std::size_t c = 0; c < m.states; ++c) p(r, c) = flat[r * m.states + c];
    m.transitions.push_back(std::move(p));
  }
  m.validate();
  return m;
}

}  // namespace irl_dr
