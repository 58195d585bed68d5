#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "credit/env.hpp"
#include "credit/text.hpp"

namespace credit {

enum class PolicyKind { Random, GreedyLbf, TabularQ };

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Random: return "random";
    case PolicyKind::GreedyLbf: return "greedy_lbf";
    case PolicyKind::TabularQ: return "tabular_q";
  }
  return "?";
}

struct Policy {
  PolicyKind kind = PolicyKind::Random;
  int n_actions = 6;
  double epsilon = 0.0;  // TabularQ exploration rate
  std::unordered_map<std::uint64_t, std::vector<double>> q;

  std::span<const double> q_row(std::uint64_t obs_hash) const {
    static const std::vector<double> zeros(64, 0.0);
    auto it = q.find(obs_hash);
    if (it != q.end()) return it->second;
    return std::span<const double>(zeros.data(), static_cast<std::size_t>(n_actions));
  }
};

inline int argmax_lowest_index(std::span<const double> values) {
  int best = 0;
  for (int a = 1; a < static_cast<int>(values.size()); ++a)
    if (values[a] > values[best]) best = a;
  return best;
}

// Greedy scripted LBF behaviour: head for the nearest visible food along a
// shortest Manhattan path, Load when adjacent, NoOp when nothing is visible.
// Direction ties break in the fixed order up, down, left, right; ties between
// equally near foods go to the first one in row-major scan order.
inline int greedy_lbf_action(const Observation& obs) {
  const int w = obs.window_w();
  const int h = obs.window_h();
  const int ax = obs.agent_x();
  const int ay = obs.agent_y();
  int best_dist = -1, fx = 0, fy = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (obs.cell(x, y) < 200) continue;
      const int d = std::abs(x - ax) + std::abs(y - ay);
      if (best_dist < 0 || d < best_dist) {
        best_dist = d;
        fx = x;
        fy = y;
      }
    }
  }
  if (best_dist < 0) return 0;  // NoOp
  if (best_dist == 1) return 5; // Load
  if (fy < ay) return 1;        // Up
  if (fy > ay) return 2;        // Down
  if (fx < ax) return 3;        // Left
  return 4;                     // Right
}

inline int act(const Policy& policy, const Observation& obs, int /*agent*/, Rng& rng) {
  switch (policy.kind) {
    case PolicyKind::Random:
      return rng.next_int(policy.n_actions);
    case PolicyKind::GreedyLbf:
      return greedy_lbf_action(obs);
    case PolicyKind::TabularQ: {
      if (policy.epsilon > 0.0 && rng.next_double() < policy.epsilon)
        return rng.next_int(policy.n_actions);
      return argmax_lowest_index(policy.q_row(obs.hash()));
    }
  }
  return 0;
}

// One-step Q-learning update on the shared team reward.
inline void td_update(Policy& policy, std::uint64_t obs_hash, int action, double reward,
                      std::uint64_t next_obs_hash, bool done, double alpha, double gamma) {
  auto& row = policy.q[obs_hash];
  if (row.empty()) row.assign(static_cast<std::size_t>(policy.n_actions), 0.0);
  double target = reward;
  if (!done) {
    const auto next_row = policy.q_row(next_obs_hash);
    target += gamma * *std::max_element(next_row.begin(), next_row.end());
  }
  row[static_cast<std::size_t>(action)] += alpha * (target - row[static_cast<std::size_t>(action)]);
}

struct TrainConfig {
  int episodes = 10000;
  double alpha = 0.3;
  double gamma = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int anneal_episodes = 0;  // 0 means anneal over all episodes
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::vector<Policy> policies;
  std::vector<double> episode_returns;
};

// Train episodes [ep_begin, ep_end) of the schedule described by `cfg`,
// continuing from the given tables. The epsilon anneal follows the global
// episode index, so chunked training matches one uninterrupted run.
template <Environment E>
void train_iql_range(const E& env, std::vector<Policy>& policies, const TrainConfig& cfg,
                     int ep_begin, int ep_end, std::vector<double>& episode_returns) {
  if (cfg.alpha <= 0.0 || cfg.alpha > 1.0) throw std::invalid_argument("alpha must be in (0,1]");
  if (cfg.gamma < 0.0 || cfg.gamma > 1.0) throw std::invalid_argument("gamma must be in [0,1]");
  for (double eps : {cfg.epsilon_start, cfg.epsilon_end})
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("epsilon must be in [0,1]");
  const int n = env.num_agents();
  const int anneal = cfg.anneal_episodes > 0 ? cfg.anneal_episodes : std::max(1, cfg.episodes);
  std::vector<int> joint(static_cast<std::size_t>(n));
  std::vector<std::uint64_t> hashes(static_cast<std::size_t>(n));
  for (int ep = ep_begin; ep < ep_end; ++ep) {
    const double frac = std::min(1.0, static_cast<double>(ep) / anneal);
    const double eps = cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start);
    for (auto& p : policies) p.epsilon = eps;

    auto state = env.reset(derive_seed(cfg.seed, "train-ep", static_cast<std::uint64_t>(ep)));
    Rng rng(derive_seed(cfg.seed, "train-act", static_cast<std::uint64_t>(ep)));
    double ep_return = 0.0;
    bool done = false;
    while (!done) {
      for (int i = 0; i < n; ++i) {
        const auto obs = env.observe(state, i);
        hashes[static_cast<std::size_t>(i)] = obs.hash();
        joint[static_cast<std::size_t>(i)] = act(policies[static_cast<std::size_t>(i)], obs, i, rng);
      }
      auto out = env.step(state, joint);
      for (int i = 0; i < n; ++i) {
        const std::uint64_t next_hash = out.done ? 0 : env.observe(out.next, i).hash();
        td_update(policies[static_cast<std::size_t>(i)], hashes[static_cast<std::size_t>(i)],
                  joint[static_cast<std::size_t>(i)], out.team_reward, next_hash, out.done,
                  cfg.alpha, cfg.gamma);
      }
      ep_return += out.team_reward;
      done = out.done;
      state = std::move(out.next);
    }
    episode_returns.push_back(ep_return);
  }
}

// Tabular independent Q-learning. Every agent updates its own table from its
// own observation stream, but the learning signal is the team reward.
template <Environment E>
TrainResult train_iql(const E& env, const TrainConfig& cfg) {
  TrainResult result;
  result.policies.assign(static_cast<std::size_t>(env.num_agents()),
                         Policy{PolicyKind::TabularQ, env.num_actions(), cfg.epsilon_start, {}});
  result.episode_returns.reserve(static_cast<std::size_t>(cfg.episodes));
  train_iql_range(env, result.policies, cfg, 0, cfg.episodes, result.episode_returns);
  for (auto& p : result.policies) p.epsilon = cfg.epsilon_end;
  return result;
}

// --- rollout helpers ------------------------------------------------------

template <Environment E>
double episode_return(const E& env, std::span<const Policy> policies, std::uint64_t reset_seed,
                      std::uint64_t act_seed) {
  const int n = env.num_agents();
  auto state = env.reset(reset_seed);
  Rng rng(act_seed);
  std::vector<int> joint(static_cast<std::size_t>(n));
  double total = 0.0;
  bool done = false;
  while (!done) {
    for (int i = 0; i < n; ++i)
      joint[static_cast<std::size_t>(i)] =
          act(policies[static_cast<std::size_t>(i)], env.observe(state, i), i, rng);
    auto out = env.step(state, joint);
    total += out.team_reward;
    done = out.done;
    state = std::move(out.next);
  }
  return total;
}

template <Environment E>
double mean_return(const E& env, std::span<const Policy> policies, int episodes,
                   std::uint64_t seed, std::string_view tag = "eval") {
  double sum = 0.0;
  for (int e = 0; e < episodes; ++e)
    sum += episode_return(env, policies,
                          derive_seed(seed, std::string(tag) + "-ep", static_cast<std::uint64_t>(e)),
                          derive_seed(seed, std::string(tag) + "-act", static_cast<std::uint64_t>(e)));
  return episodes > 0 ? sum / episodes : 0.0;
}

// --- policy_v1 serialization ----------------------------------------------

inline std::string save_policies(std::span<const Policy> policies, std::string_view scenario,
                                 std::uint64_t seed) {
  std::string out = "policy_v1\n";
  out += "kind = " + to_string(policies.empty() ? PolicyKind::Random : policies[0].kind) + "\n";
  out += "scenario = " + std::string(scenario) + "\n";
  out += "seed = " + std::to_string(seed) + "\n";
  out += "n_agents = " + std::to_string(policies.size()) + "\n";
  out += "n_actions = " + std::to_string(policies.empty() ? 0 : policies[0].n_actions) + "\n";
  out += "epsilon = " + format_double(policies.empty() ? 0.0 : policies[0].epsilon) + "\n";
  for (std::size_t i = 0; i < policies.size(); ++i) {
    std::map<std::uint64_t, const std::vector<double>*> sorted;
    for (const auto& [h, row] : policies[i].q) sorted[h] = &row;
    for (const auto& [h, row] : sorted)
      for (std::size_t a = 0; a < row->size(); ++a)
        if ((*row)[a] != 0.0)
          out += "q " + std::to_string(i) + " " + std::to_string(h) + " " + std::to_string(a) +
                 " " + format_double((*row)[a]) + "\n";
  }
  return out;
}

struct LoadedPolicies {
  std::vector<Policy> policies;
  std::string scenario;
  std::uint64_t seed = 0;
};

inline LoadedPolicies load_policies(const std::string& text) {
  LoadedPolicies result;
  PolicyKind kind = PolicyKind::Random;
  int n_actions = 6;
  double epsilon = 0.0;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "policy_v1") throw std::runtime_error("not a policy_v1 file");
      header_seen = true;
      continue;
    }
    if (!header_seen) throw std::runtime_error("missing policy_v1 header");
    if (line.substr(0, 2) == "q ") {
      const auto parts = split(line.substr(2), ' ');
      if (parts.size() != 4) throw std::runtime_error("bad q entry: " + std::string(line));
      const auto agent = static_cast<std::size_t>(parse_u64(parts[0]));
      if (agent >= result.policies.size()) throw std::runtime_error("q entry for unknown agent");
      auto& row = result.policies[agent].q[parse_u64(parts[1])];
      if (row.empty()) row.assign(static_cast<std::size_t>(n_actions), 0.0);
      row[static_cast<std::size_t>(parse_u64(parts[2]))] = parse_double(parts[3]);
      continue;
    }
    const auto kv = split(line, '=');
    if (kv.size() != 2) throw std::runtime_error("bad policy line: " + std::string(line));
    const std::string& key = kv[0];
    const std::string& value = kv[1];
    if (key == "kind") {
      if (value == "random") kind = PolicyKind::Random;
      else if (value == "greedy_lbf") kind = PolicyKind::GreedyLbf;
      else if (value == "tabular_q") kind = PolicyKind::TabularQ;
      else throw std::runtime_error("unknown policy kind: " + value);
    } else if (key == "scenario") {
      result.scenario = value;
    } else if (key == "seed") {
      result.seed = parse_u64(value);
    } else if (key == "n_actions") {
      n_actions = static_cast<int>(parse_u64(value));
    } else if (key == "epsilon") {
      epsilon = parse_double(value);
    } else if (key == "n_agents") {
      result.policies.assign(parse_u64(value), Policy{});
    }
  }
  for (auto& p : result.policies) {
    p.kind = kind;
    p.n_actions = n_actions;
    p.epsilon = epsilon;
  }
  return result;
}

}  // namespace credit
