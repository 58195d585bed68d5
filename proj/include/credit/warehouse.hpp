#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "credit/env.hpp"

namespace credit::warehouse {

enum class WarehouseAction : int { NoOp = 0, Up, Down, Left, Right, ToggleLoad };
inline constexpr int kNumActions = 6;

struct Cell {
  int x = 0, y = 0;
  bool operator==(const Cell&) const = default;
};

struct WarehouseScenario {
  int width = 11;
  int height = 11;
  int n_agents = 2;
  int n_shelves = 8;
  int n_requests = 2;  // defaults to n_agents
  std::vector<Cell> goal_cells;
  int max_steps = 500;
};

struct WarehouseAgent {
  int x = 0, y = 0;
  std::optional<int> carrying;  // shelf id
  bool operator==(const WarehouseAgent&) const = default;
};

struct Shelf {
  Cell home;
  Cell pos;  // tracks the carrier while picked up
  bool requested = false;
  bool operator==(const Shelf&) const = default;
};

struct WarehouseState {
  std::vector<WarehouseAgent> agents;
  std::vector<Shelf> shelves;
  std::vector<int> request_queue;  // shelf ids, issue order
  int requests_issued = 0;
  int step = 0;
  int max_steps = 500;
  bool done = false;
  std::uint64_t episode_seed = 0;
  bool operator==(const WarehouseState&) const = default;
};

// Grammar: rware-<size>-<n>ag with size in {tiny, small, medium, large}.
// tiny and small follow the reference grids (11x11, 11x20); medium and
// large are fixed at 16x20 and 16x29 as toolkit conventions. Difficulty
// suffixes are not supported.
inline WarehouseScenario parse_warehouse_scenario(std::string_view name) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) -> ParseError { return {what, pos}; };
  auto expect = [&](std::string_view lit, const std::string& what) {
    if (name.substr(pos, lit.size()) != lit) throw fail(what);
    pos += lit.size();
  };

  WarehouseScenario sc;
  expect("rware-", "expected 'rware-'");
  struct Size { std::string_view token; int w, h; };
  constexpr Size sizes[] = {
      {"tiny", 11, 11}, {"small", 11, 20}, {"medium", 16, 20}, {"large", 16, 29}};
  const Size* hit = nullptr;
  for (const auto& s : sizes)
    if (name.substr(pos, s.token.size()) == s.token) hit = &s;
  if (!hit) throw fail("unknown size token");
  pos += hit->token.size();
  sc.width = hit->w;
  sc.height = hit->h;
  expect("-", "expected '-' before agent count");
  std::size_t start = pos;
  int n = 0;
  while (pos < name.size() && name[pos] >= '0' && name[pos] <= '9') n = n * 10 + (name[pos++] - '0');
  if (pos == start) throw fail("expected agent count");
  expect("ag", "expected 'ag' after agent count");
  if (pos != name.size()) throw fail("unexpected trailing characters");
  if (n < 1 || n > 20) throw fail("agent count out of range");

  sc.n_agents = n;
  sc.n_requests = n;
  sc.n_shelves = std::max(4, 2 * n);
  sc.goal_cells = {{sc.width / 2 - 1, sc.height - 1}, {sc.width / 2, sc.height - 1}};
  return sc;
}

class WarehouseEnv {
 public:
  using State = WarehouseState;

  explicit WarehouseEnv(WarehouseScenario scenario) : sc_(std::move(scenario)) {
    if (sc_.n_requests <= 0) sc_.n_requests = sc_.n_agents;
  }
  explicit WarehouseEnv(std::string_view name) : WarehouseEnv(parse_warehouse_scenario(name)) {}

  const WarehouseScenario& scenario() const { return sc_; }
  int num_agents() const { return sc_.n_agents; }
  int num_actions() const { return kNumActions; }
  int noop_action() const { return static_cast<int>(WarehouseAction::NoOp); }

  State reset(std::uint64_t seed) const {
    for (const auto& g : sc_.goal_cells)
      if (g.x < 0 || g.x >= sc_.width || g.y < 0 || g.y >= sc_.height)
        throw InfeasibleScenario("goal cell outside grid");
    if (sc_.n_requests > sc_.n_shelves)
      throw InfeasibleScenario("more requests than shelves");

    std::vector<int> free_cells;
    for (int y = 0; y < sc_.height; ++y)
      for (int x = 0; x < sc_.width; ++x)
        if (!is_goal(x, y)) free_cells.push_back(y * sc_.width + x);
    if (sc_.n_shelves + sc_.n_agents > static_cast<int>(free_cells.size()))
      throw InfeasibleScenario("cannot place shelves and agents on non-goal cells");

    Rng rng(derive_seed(seed, "wh-reset"));
    rng.shuffle(free_cells);

    State s;
    s.max_steps = sc_.max_steps;
    s.episode_seed = seed;
    s.shelves.resize(sc_.n_shelves);
    for (int i = 0; i < sc_.n_shelves; ++i) {
      const Cell c{free_cells[i] % sc_.width, free_cells[i] / sc_.width};
      s.shelves[i] = Shelf{c, c, false};
    }
    s.agents.resize(sc_.n_agents);
    for (int i = 0; i < sc_.n_agents; ++i) {
      const int c = free_cells[sc_.n_shelves + i];
      s.agents[i] = WarehouseAgent{c % sc_.width, c / sc_.width, std::nullopt};
    }

    std::vector<int> ids(sc_.n_shelves);
    std::iota(ids.begin(), ids.end(), 0);
    rng.shuffle(ids);
    for (int r = 0; r < sc_.n_requests; ++r) {
      s.shelves[ids[r]].requested = true;
      s.request_queue.push_back(ids[r]);
    }
    s.requests_issued = sc_.n_requests;
    return s;
  }

  StepOutcome<State> step(const State& state, std::span<const int> joint) const {
    check_joint_action(state, joint, sc_.n_agents, kNumActions);

    StepOutcome<State> out;
    out.next = state;
    out.next.step = state.step + 1;
    out.individual_rewards.assign(sc_.n_agents, 0.0);
    State& next = out.next;
    const double delivery_reward = 1.0 / static_cast<double>(sc_.n_requests);

    // Movement in ascending index. A carrier cannot enter a cell holding a
    // resting shelf; nobody enters a cell holding another agent. Delivery
    // fires when a carrier of a requested shelf moves onto a goal cell.
    for (int i = 0; i < sc_.n_agents; ++i) {
      int dx = 0, dy = 0;
      switch (static_cast<WarehouseAction>(joint[i])) {
        case WarehouseAction::Up: dy = -1; break;
        case WarehouseAction::Down: dy = 1; break;
        case WarehouseAction::Left: dx = -1; break;
        case WarehouseAction::Right: dx = 1; break;
        default: continue;
      }
      auto& agent = next.agents[i];
      const int tx = agent.x + dx;
      const int ty = agent.y + dy;
      if (tx < 0 || tx >= sc_.width || ty < 0 || ty >= sc_.height) continue;
      const bool agent_there =
          std::any_of(next.agents.begin(), next.agents.end(),
                      [&](const WarehouseAgent& a) { return &a != &agent && a.x == tx && a.y == ty; });
      if (agent_there) continue;
      if (agent.carrying && resting_shelf_at(next, tx, ty)) continue;
      agent.x = tx;
      agent.y = ty;
      if (agent.carrying) {
        Shelf& shelf = next.shelves[*agent.carrying];
        shelf.pos = {tx, ty};
        if (shelf.requested && is_goal(tx, ty)) {
          out.individual_rewards[i] += delivery_reward;
          shelf.requested = false;
          std::erase(next.request_queue, *agent.carrying);
          issue_request(next, *agent.carrying);
        }
      }
    }

    // Toggle phase: pick up a co-located resting shelf or drop the carried one.
    for (int i = 0; i < sc_.n_agents; ++i) {
      if (static_cast<WarehouseAction>(joint[i]) != WarehouseAction::ToggleLoad) continue;
      auto& agent = next.agents[i];
      if (agent.carrying) {
        agent.carrying.reset();
      } else if (auto id = resting_shelf_at(next, agent.x, agent.y)) {
        agent.carrying = *id;
      }
    }

    out.team_reward =
        std::accumulate(out.individual_rewards.begin(), out.individual_rewards.end(), 0.0);
    out.done = next.step >= next.max_steps;
    next.done = out.done;
    return out;
  }

  Observation observe(const State& state, int agent) const {
    const auto& self = state.agents[agent];
    int carry_flag = 0;
    if (self.carrying) carry_flag = state.shelves[*self.carrying].requested ? 2 : 1;
    Observation obs;
    obs.data = {3, 3, 1, 1, carry_flag};
    for (int wy = 0; wy < 3; ++wy)
      for (int wx = 0; wx < 3; ++wx)
        obs.data.push_back(cell_value(state, self.x - 1 + wx, self.y - 1 + wy));
    return obs;
  }

 private:
  bool is_goal(int x, int y) const {
    return std::any_of(sc_.goal_cells.begin(), sc_.goal_cells.end(),
                       [&](const Cell& g) { return g.x == x && g.y == y; });
  }

  static std::optional<int> resting_shelf_at(const State& s, int x, int y) {
    const std::size_t n = s.shelves.size();
    for (std::size_t id = 0; id < n; ++id) {
      const Shelf& shelf = s.shelves[id];
      if (shelf.pos.x != x || shelf.pos.y != y) continue;
      const bool carried = std::any_of(s.agents.begin(), s.agents.end(),
                                       [&](const WarehouseAgent& a) {
                                         return a.carrying && *a.carrying == static_cast<int>(id);
                                       });
      if (!carried) return static_cast<int>(id);
    }
    return std::nullopt;
  }

  // Replace a delivered request with a fresh one, drawn deterministically
  // from the episode seed and the running request counter. The delivered
  // shelf is re-requested only when no other shelf is free.
  void issue_request(State& s, int delivered) const {
    std::vector<int> candidates;
    for (std::size_t id = 0; id < s.shelves.size(); ++id)
      if (!s.shelves[id].requested && static_cast<int>(id) != delivered)
        candidates.push_back(static_cast<int>(id));
    if (candidates.empty()) candidates.push_back(delivered);
    const std::uint64_t pick =
        derive_seed(s.episode_seed, "wh-request", static_cast<std::uint64_t>(s.requests_issued));
    const int id = candidates[pick % candidates.size()];
    s.shelves[id].requested = true;
    s.request_queue.push_back(id);
    s.requests_issued += 1;
  }

  std::int32_t cell_value(const State& state, int x, int y) const {
    if (x < 0 || x >= sc_.width || y < 0 || y >= sc_.height) return kOutOfGrid;
    std::int32_t v = 0;
    for (const auto& a : state.agents)
      if (a.x == x && a.y == y) v |= 1;
    if (auto id = resting_shelf_at(state, x, y)) {
      v |= 2;
      if (state.shelves[*id].requested) v |= 4;
    }
    if (is_goal(x, y)) v |= 8;
    return v;
  }

  WarehouseScenario sc_;
};

static_assert(Environment<WarehouseEnv>);

}  // namespace credit::warehouse
