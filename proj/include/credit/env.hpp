#pragma once

#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

#include "credit/errors.hpp"
#include "credit/rng.hpp"

namespace credit {

// Result of one transition. `next` is a full value-semantic snapshot, so the
// caller can branch the episode at will (the basis of counterfactual
// valuation). team_reward always equals the sum of individual_rewards.
template <class State>
struct StepOutcome {
  State next;
  double team_reward = 0.0;
  std::vector<double> individual_rewards;
  bool done = false;
};

// Canonical per-agent observation: a flat integer sequence. The first five
// entries are {window_w, window_h, agent_x, agent_y, own_level_or_flag},
// followed by one encoded content value per window cell in row-major order.
// Out-of-grid cells use kOutOfGrid. Equality is structural, and the encoding
// hashes stably into tabular-policy keys.
struct Observation {
  std::vector<std::int32_t> data;

  bool operator==(const Observation&) const = default;

  std::int32_t window_w() const { return data[0]; }
  std::int32_t window_h() const { return data[1]; }
  std::int32_t agent_x() const { return data[2]; }
  std::int32_t agent_y() const { return data[3]; }
  std::int32_t self_value() const { return data[4]; }
  std::int32_t cell(int x, int y) const {
    return data[5 + static_cast<std::size_t>(y) * window_w() + x];
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::int32_t v : data) {
      h ^= static_cast<std::uint32_t>(v);
      h *= 0x100000001b3ull;
    }
    return h;
  }
};

inline constexpr std::int32_t kOutOfGrid = -1;
inline constexpr std::int32_t kEmptyCell = 0;

// An environment is a value: scenario parameters only. States are snapshots,
// step() is pure and re-entrant, and reset() is deterministic in the seed.
template <class E>
concept Environment = requires(const E& env, const typename E::State& s,
                               std::span<const int> joint, std::uint64_t seed) {
  typename E::State;
  { env.num_agents() } -> std::convertible_to<int>;
  { env.num_actions() } -> std::convertible_to<int>;
  { env.noop_action() } -> std::convertible_to<int>;
  { env.reset(seed) } -> std::same_as<typename E::State>;
  { env.step(s, joint) } -> std::same_as<StepOutcome<typename E::State>>;
  { env.observe(s, int{}) } -> std::same_as<Observation>;
};

// Shared precondition checks for step().
template <class State>
void check_joint_action(const State& state, std::span<const int> joint, int n_agents,
                        int n_actions) {
  if (state.done) throw EpisodeFinished();
  if (static_cast<int>(joint.size()) != n_agents)
    throw InvalidAction("joint action arity " + std::to_string(joint.size()) +
                        ", expected " + std::to_string(n_agents));
  for (int a : joint)
    if (a < 0 || a >= n_actions)
      throw InvalidAction("action index " + std::to_string(a) + " out of range");
}

}  // namespace credit
