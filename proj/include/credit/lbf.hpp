#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "credit/env.hpp"

namespace credit::lbf {

enum class LbfAction : int { NoOp = 0, Up, Down, Left, Right, Load };
inline constexpr int kNumActions = 6;

enum class LevelMode { Random, Fixed };
enum class FoodLevelMode { RandomUpToSum, Fixed, RandomRange };

// How a consumed food's level is credited to its loaders. Proportional splits
// by contributor level; PaperLiteral awards level(food)/level(agent) to each
// loader and is kept as a sensitivity check, not a fidelity claim.
enum class RewardRule { Proportional, PaperLiteral };

struct LbfScenario {
  std::optional<int> sight;  // absent = full observability
  int width = 8;
  int height = 8;
  int n_agents = 2;
  int n_food = 2;
  bool coop = false;
  LevelMode level_mode = LevelMode::Random;
  std::vector<int> fixed_levels;  // used when level_mode == Fixed
  FoodLevelMode food_level_mode = FoodLevelMode::RandomUpToSum;
  int food_level_fixed = 3;
  int food_level_lo = 1;
  int food_level_hi = 6;
  int max_steps = 50;
  RewardRule reward_rule = RewardRule::Proportional;
};

struct LbfAgent {
  int x = 0, y = 0;
  int level = 1;
  bool operator==(const LbfAgent&) const = default;
};

struct LbfFood {
  int x = 0, y = 0;
  int level = 1;
  bool present = true;
  bool operator==(const LbfFood&) const = default;
};

struct LbfState {
  std::vector<LbfAgent> agents;
  std::vector<LbfFood> foods;
  int step = 0;
  int max_steps = 50;
  int total_food_level_at_spawn = 0;
  bool done = false;
  std::uint64_t episode_seed = 0;
  bool operator==(const LbfState&) const = default;
};

// Scenario-name grammar: Foraging[-<s>s]-<x>x<y>-<n>p-<f>f[-coop][-v<k>]
inline LbfScenario parse_lbf_name(std::string_view name) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) -> ParseError { return {what, pos}; };
  auto expect = [&](std::string_view lit, const std::string& what) {
    if (name.substr(pos, lit.size()) != lit) throw fail(what);
    pos += lit.size();
  };
  auto read_int = [&](const std::string& what) {
    std::size_t start = pos;
    while (pos < name.size() && name[pos] >= '0' && name[pos] <= '9') ++pos;
    if (pos == start) throw fail(what);
    int v = 0;
    for (std::size_t i = start; i < pos; ++i) v = v * 10 + (name[i] - '0');
    return v;
  };

  LbfScenario sc;
  expect("Foraging", "expected 'Foraging'");
  expect("-", "expected '-'");
  int first = read_int("expected sight or grid width");
  if (pos < name.size() && name[pos] == 's') {
    ++pos;
    sc.sight = first;
    expect("-", "expected '-' after sight");
    sc.width = read_int("expected grid width");
  } else {
    sc.width = first;
  }
  expect("x", "expected 'x' between grid dimensions");
  sc.height = read_int("expected grid height");
  expect("-", "expected '-' before agent count");
  sc.n_agents = read_int("expected agent count");
  expect("p", "expected 'p' after agent count");
  expect("-", "expected '-' before food count");
  sc.n_food = read_int("expected food count");
  expect("f", "expected 'f' after food count");
  if (name.substr(pos, 5) == "-coop") {
    pos += 5;
    sc.coop = true;
  }
  if (name.substr(pos, 2) == "-v") {
    pos += 2;
    read_int("expected version number");
  }
  if (pos != name.size()) throw fail("unexpected trailing characters");
  if (sc.width < 2 || sc.height < 2) throw fail("grid too small");
  if (sc.n_agents < 1 || sc.n_food < 1) throw fail("need at least one agent and one food");
  return sc;
}

// Named presets resolved before the grammar. The -det variants fix agent
// levels to 1,2,3; "det" keeps food at level 3 while "det-max-food-sum"
// draws food levels uniformly in [1,6].
inline const std::map<std::string, LbfScenario, std::less<>>& lbf_presets() {
  static const std::map<std::string, LbfScenario, std::less<>> presets = [] {
    std::map<std::string, LbfScenario, std::less<>> m;
    LbfScenario det;
    det.width = det.height = 15;
    det.n_agents = det.n_food = 3;
    det.level_mode = LevelMode::Fixed;
    det.fixed_levels = {1, 2, 3};
    det.food_level_mode = FoodLevelMode::Fixed;
    det.food_level_fixed = 3;
    m["Foraging-15x15-3p-3f-det"] = det;
    det.food_level_mode = FoodLevelMode::RandomRange;
    det.food_level_lo = 1;
    det.food_level_hi = 6;
    m["Foraging-15x15-3p-3f-det-max-food-sum"] = det;
    return m;
  }();
  return presets;
}

inline LbfScenario parse_lbf_scenario(std::string_view name) {
  const auto& presets = lbf_presets();
  if (auto it = presets.find(name); it != presets.end()) return it->second;
  return parse_lbf_name(name);
}

// Scalability scenario family (2, 4, 10, 20, 50 agents).
inline std::vector<std::string> scalability_family() {
  return {"Foraging-5x5-2p-2f", "Foraging-10x10-4p-4f", "Foraging-15x15-10p-10f",
          "Foraging-20x20-20p-20f", "Foraging-25x25-50p-50f"};
}

class LbfEnv {
 public:
  using State = LbfState;

  explicit LbfEnv(LbfScenario scenario) : sc_(std::move(scenario)) {}
  explicit LbfEnv(std::string_view name) : sc_(parse_lbf_scenario(name)) {}

  const LbfScenario& scenario() const { return sc_; }
  int num_agents() const { return sc_.n_agents; }
  int num_actions() const { return kNumActions; }
  int noop_action() const { return static_cast<int>(LbfAction::NoOp); }

  State reset(std::uint64_t seed) const {
    const int cells = sc_.width * sc_.height;
    if (sc_.n_agents + sc_.n_food > cells)
      throw InfeasibleScenario("cannot place " + std::to_string(sc_.n_agents) + " agents and " +
                               std::to_string(sc_.n_food) + " food on " + std::to_string(cells) +
                               " cells");
    if (sc_.level_mode == LevelMode::Fixed &&
        static_cast<int>(sc_.fixed_levels.size()) != sc_.n_agents)
      throw InfeasibleScenario("fixed level list length does not match agent count");

    Rng rng(derive_seed(seed, "lbf-reset"));
    std::vector<int> order(cells);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    State s;
    s.max_steps = sc_.max_steps;
    s.episode_seed = seed;
    s.agents.resize(sc_.n_agents);
    for (int i = 0; i < sc_.n_agents; ++i) {
      s.agents[i].x = order[i] % sc_.width;
      s.agents[i].y = order[i] / sc_.width;
      s.agents[i].level =
          sc_.level_mode == LevelMode::Fixed ? sc_.fixed_levels[i] : 1 + rng.next_int(3);
    }
    const int level_sum =
        std::accumulate(s.agents.begin(), s.agents.end(), 0,
                        [](int acc, const LbfAgent& a) { return acc + a.level; });
    s.foods.resize(sc_.n_food);
    for (int f = 0; f < sc_.n_food; ++f) {
      s.foods[f].x = order[sc_.n_agents + f] % sc_.width;
      s.foods[f].y = order[sc_.n_agents + f] / sc_.width;
      if (sc_.coop) {
        s.foods[f].level = level_sum;
      } else {
        switch (sc_.food_level_mode) {
          case FoodLevelMode::RandomUpToSum:
            s.foods[f].level = 1 + rng.next_int(std::max(1, level_sum));
            break;
          case FoodLevelMode::Fixed:
            s.foods[f].level = sc_.food_level_fixed;
            break;
          case FoodLevelMode::RandomRange:
            s.foods[f].level =
                sc_.food_level_lo + rng.next_int(sc_.food_level_hi - sc_.food_level_lo + 1);
            break;
        }
      }
    }
    s.total_food_level_at_spawn =
        std::accumulate(s.foods.begin(), s.foods.end(), 0,
                        [](int acc, const LbfFood& f) { return acc + f.level; });
    return s;
  }

  StepOutcome<State> step(const State& state, std::span<const int> joint) const {
    check_joint_action(state, joint, sc_.n_agents, kNumActions);

    StepOutcome<State> out;
    out.next = state;
    out.next.step = state.step + 1;
    out.individual_rewards.assign(sc_.n_agents, 0.0);
    State& next = out.next;

    // Phase 1: movement in ascending agent index; blocked moves fail silently.
    for (int i = 0; i < sc_.n_agents; ++i) {
      int dx = 0, dy = 0;
      switch (static_cast<LbfAction>(joint[i])) {
        case LbfAction::Up: dy = -1; break;
        case LbfAction::Down: dy = 1; break;
        case LbfAction::Left: dx = -1; break;
        case LbfAction::Right: dx = 1; break;
        default: continue;
      }
      const int tx = next.agents[i].x + dx;
      const int ty = next.agents[i].y + dy;
      if (tx < 0 || tx >= sc_.width || ty < 0 || ty >= sc_.height) continue;
      const bool agent_there = std::any_of(
          next.agents.begin(), next.agents.end(),
          [&](const LbfAgent& a) { return &a != &next.agents[i] && a.x == tx && a.y == ty; });
      const bool food_there =
          std::any_of(next.foods.begin(), next.foods.end(),
                      [&](const LbfFood& f) { return f.present && f.x == tx && f.y == ty; });
      if (!agent_there && !food_there) {
        next.agents[i].x = tx;
        next.agents[i].y = ty;
      }
    }

    // Phase 2 + 3: loading and reward split, each food judged independently.
    const double total = static_cast<double>(state.total_food_level_at_spawn);
    for (auto& food : next.foods) {
      if (!food.present) continue;
      int level_sum = 0;
      std::vector<int> loaders;
      for (int i = 0; i < sc_.n_agents; ++i) {
        if (static_cast<LbfAction>(joint[i]) != LbfAction::Load) continue;
        const int dist =
            std::abs(next.agents[i].x - food.x) + std::abs(next.agents[i].y - food.y);
        if (dist == 1) {
          loaders.push_back(i);
          level_sum += next.agents[i].level;
        }
      }
      if (loaders.empty() || level_sum < food.level) continue;
      food.present = false;
      for (int i : loaders) {
        const double lvl = static_cast<double>(next.agents[i].level);
        out.individual_rewards[i] +=
            sc_.reward_rule == RewardRule::Proportional
                ? static_cast<double>(food.level) * lvl / level_sum / total
                : static_cast<double>(food.level) / lvl / total;
      }
    }

    out.team_reward =
        std::accumulate(out.individual_rewards.begin(), out.individual_rewards.end(), 0.0);
    const bool all_consumed =
        std::none_of(next.foods.begin(), next.foods.end(), [](const LbfFood& f) { return f.present; });
    out.done = all_consumed || next.step >= next.max_steps;
    next.done = out.done;
    return out;
  }

  Observation observe(const State& state, int agent) const {
    const auto& self = state.agents[agent];
    Observation obs;
    if (sc_.sight) {
      const int s = *sc_.sight;
      const int w = 2 * s + 1;
      obs.data = {w, w, s, s, self.level};
      obs.data.reserve(5 + static_cast<std::size_t>(w) * w);
      for (int wy = 0; wy < w; ++wy)
        for (int wx = 0; wx < w; ++wx)
          obs.data.push_back(cell_value(state, self.x - s + wx, self.y - s + wy));
    } else {
      obs.data = {sc_.width, sc_.height, self.x, self.y, self.level};
      obs.data.reserve(5 + static_cast<std::size_t>(sc_.width) * sc_.height);
      for (int y = 0; y < sc_.height; ++y)
        for (int x = 0; x < sc_.width; ++x) obs.data.push_back(cell_value(state, x, y));
    }
    return obs;
  }

 private:
  std::int32_t cell_value(const State& state, int x, int y) const {
    if (x < 0 || x >= sc_.width || y < 0 || y >= sc_.height) return kOutOfGrid;
    for (const auto& a : state.agents)
      if (a.x == x && a.y == y) return 100 + a.level;
    for (const auto& f : state.foods)
      if (f.present && f.x == x && f.y == y) return 200 + f.level;
    return kEmptyCell;
  }

  LbfScenario sc_;
};

static_assert(Environment<LbfEnv>);

}  // namespace credit::lbf
