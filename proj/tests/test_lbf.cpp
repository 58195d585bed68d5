#include <catch2/catch_amalgamated.hpp>

#include "credit/lbf.hpp"

using namespace credit;
using namespace credit::lbf;

namespace {

// Hand-built state: helpers keep the scenario and state consistent.
LbfState make_state(std::vector<LbfAgent> agents, std::vector<LbfFood> foods, int max_steps = 50) {
  LbfState s;
  s.agents = std::move(agents);
  s.foods = std::move(foods);
  s.max_steps = max_steps;
  for (const auto& f : s.foods) s.total_food_level_at_spawn += f.level;
  return s;
}

LbfScenario grid(int w, int h, int agents, int food) {
  LbfScenario sc;
  sc.width = w;
  sc.height = h;
  sc.n_agents = agents;
  sc.n_food = food;
  return sc;
}

constexpr int kNoOp = 0, kUp = 1, kLeft = 3, kRight = 4, kLoad = 5;

}  // namespace

TEST_CASE("scenario grammar") {
  SECTION("sight-limited coop scenario") {
    const auto sc = parse_lbf_scenario("Foraging-2s-8x8-2p-2f-coop");
    REQUIRE(sc.sight.has_value());
    REQUIRE(*sc.sight == 2);
    REQUIRE(sc.width == 8);
    REQUIRE(sc.height == 8);
    REQUIRE(sc.n_agents == 2);
    REQUIRE(sc.n_food == 2);
    REQUIRE(sc.coop);
  }
  SECTION("full observability") {
    const auto sc = parse_lbf_scenario("Foraging-15x15-4p-5f");
    REQUIRE_FALSE(sc.sight.has_value());
    REQUIRE(sc.width == 15);
    REQUIRE(sc.height == 15);
    REQUIRE(sc.n_agents == 4);
    REQUIRE(sc.n_food == 5);
    REQUIRE_FALSE(sc.coop);
  }
  SECTION("version suffix is accepted") {
    REQUIRE(parse_lbf_scenario("Foraging-10x10-3p-3f-v2").n_agents == 3);
  }
  SECTION("missing fields carry the byte offset") {
    try {
      parse_lbf_scenario("Foraging-8x8");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      REQUIRE(e.offset == 12);
    }
  }
  SECTION("garbage suffix is rejected") {
    REQUIRE_THROWS_AS(parse_lbf_scenario("Foraging-8x8-2p-2f-x"), ParseError);
    REQUIRE_THROWS_AS(parse_lbf_scenario("Forging-8x8-2p-2f"), ParseError);
  }
}

TEST_CASE("reset level assignment") {
  SECTION("fixed levels are taken verbatim") {
    LbfScenario sc = grid(8, 8, 3, 3);
    sc.level_mode = LevelMode::Fixed;
    sc.fixed_levels = {1, 2, 3};
    const auto s = LbfEnv(sc).reset(5);
    REQUIRE(s.agents[0].level == 1);
    REQUIRE(s.agents[1].level == 2);
    REQUIRE(s.agents[2].level == 3);
  }
  SECTION("coop food level is the sum of all agent levels") {
    LbfScenario sc = grid(8, 8, 2, 3);
    sc.coop = true;
    sc.level_mode = LevelMode::Fixed;
    sc.fixed_levels = {2, 3};
    const auto s = LbfEnv(sc).reset(5);
    for (const auto& f : s.foods) REQUIRE(f.level == 5);
  }
  SECTION("random-range food levels stay in range") {
    LbfScenario sc = grid(8, 8, 2, 6);
    sc.food_level_mode = FoodLevelMode::RandomRange;
    sc.food_level_lo = 1;
    sc.food_level_hi = 6;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = LbfEnv(sc).reset(seed);
      for (const auto& f : s.foods) {
        REQUIRE(f.level >= 1);
        REQUIRE(f.level <= 6);
      }
    }
  }
  SECTION("random agent levels are drawn from {1,2,3}") {
    LbfScenario sc = grid(10, 10, 4, 2);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = LbfEnv(sc).reset(seed);
      for (const auto& a : s.agents) {
        REQUIRE(a.level >= 1);
        REQUIRE(a.level <= 3);
      }
    }
  }
  SECTION("no overlaps after reset") {
    LbfScenario sc = grid(4, 4, 5, 5);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = LbfEnv(sc).reset(seed);
      std::set<std::pair<int, int>> cells;
      for (const auto& a : s.agents) cells.insert({a.x, a.y});
      for (const auto& f : s.foods) cells.insert({f.x, f.y});
      REQUIRE(cells.size() == 10);
    }
  }
}

TEST_CASE("consumption and reward split") {
  LbfEnv env(grid(6, 6, 2, 1));

  SECTION("sole contributor takes the full share") {
    auto s = make_state({{1, 1, 2}, {5, 5, 1}}, {{2, 1, 2, true}});
    const auto out = env.step(s, std::vector<int>{kLoad, kNoOp});
    REQUIRE(out.individual_rewards[0] == 1.0);
    REQUIRE(out.team_reward == 1.0);
    REQUIRE_FALSE(out.next.foods[0].present);
    REQUIRE(out.done);
  }
  SECTION("proportional split by level") {
    auto s = make_state({{1, 1, 1}, {3, 1, 2}}, {{2, 1, 3, true}});
    const auto out = env.step(s, std::vector<int>{kLoad, kLoad});
    REQUIRE(out.individual_rewards[0] == Catch::Approx(1.0 / 3).margin(1e-12));
    REQUIRE(out.individual_rewards[1] == Catch::Approx(2.0 / 3).margin(1e-12));
  }
  SECTION("combined level below the food level fails") {
    auto s = make_state({{1, 1, 1}, {3, 1, 1}}, {{2, 1, 3, true}});
    const auto out = env.step(s, std::vector<int>{kLoad, kLoad});
    REQUIRE(out.team_reward == 0.0);
    REQUIRE(out.next.foods[0].present);
  }
  SECTION("combined level equal to the food level succeeds") {
    auto s = make_state({{1, 1, 1}, {3, 1, 2}}, {{2, 1, 3, true}});
    REQUIRE(env.step(s, std::vector<int>{kLoad, kLoad}).team_reward == 1.0);
  }
  SECTION("paper-literal rule rewards level(food)/level(agent)") {
    LbfScenario sc = grid(6, 6, 2, 1);
    sc.reward_rule = RewardRule::PaperLiteral;
    LbfEnv literal(sc);
    auto s = make_state({{1, 1, 1}, {3, 1, 2}}, {{2, 1, 3, true}});
    const auto out = literal.step(s, std::vector<int>{kLoad, kLoad});
    REQUIRE(out.individual_rewards[0] == Catch::Approx(3.0 / 1 / 3).margin(1e-12));
    REQUIRE(out.individual_rewards[1] == Catch::Approx(3.0 / 2 / 3).margin(1e-12));
  }
}

TEST_CASE("movement rules") {
  LbfEnv env(grid(6, 6, 2, 1));
  SECTION("moves into agents, food, or walls fail silently") {
    auto s = make_state({{0, 0, 1}, {1, 0, 1}}, {{0, 1, 5, true}});
    // agent 0: up is off-grid; agent 1: left is occupied by agent 0
    auto out = env.step(s, std::vector<int>{kUp, kLeft});
    REQUIRE(out.next.agents[0].x == 0);
    REQUIRE(out.next.agents[0].y == 0);
    REQUIRE(out.next.agents[1].x == 1);
    // agent 0: down is food-occupied
    out = env.step(s, std::vector<int>{2, kNoOp});
    REQUIRE(out.next.agents[0].y == 0);
  }
  SECTION("earlier agents vacate cells for later ones") {
    auto s = make_state({{0, 0, 1}, {1, 0, 1}}, {{5, 5, 9, true}});
    const auto out = env.step(s, std::vector<int>{kRight, kRight});
    // agent 0 fails (agent 1 still there when processed); then agent 1 moves
    REQUIRE(out.next.agents[0].x == 0);
    REQUIRE(out.next.agents[1].x == 2);
  }
}

TEST_CASE("episode-level invariants under random play") {
  LbfEnv env("Foraging-6x6-3p-3f");
  Rng rng(99);
  for (int episode = 0; episode < 40; ++episode) {
    auto state = env.reset(rng.next_u64());
    double episode_return = 0.0;
    int present_before = static_cast<int>(state.foods.size());
    bool done = false;
    while (!done) {
      std::vector<int> joint(3);
      for (auto& a : joint) a = rng.next_int(env.num_actions());
      const auto out = env.step(state, joint);
      episode_return += out.team_reward;

      // food monotonicity
      int present_now = 0;
      for (const auto& f : out.next.foods) present_now += f.present ? 1 : 0;
      REQUIRE(present_now <= present_before);

      // conservation: this step's reward equals the consumed level share
      int consumed_level = 0;
      for (std::size_t f = 0; f < state.foods.size(); ++f)
        if (state.foods[f].present && !out.next.foods[f].present)
          consumed_level += state.foods[f].level;
      REQUIRE(out.team_reward ==
              Catch::Approx(static_cast<double>(consumed_level) / state.total_food_level_at_spawn)
                  .margin(1e-12));

      // reward locality: a no-op agent earns nothing this step
      for (int i = 0; i < 3; ++i)
        if (joint[static_cast<std::size_t>(i)] == kNoOp)
          REQUIRE(out.individual_rewards[static_cast<std::size_t>(i)] == 0.0);

      present_before = present_now;
      done = out.done;
      state = out.next;
    }
    REQUIRE(episode_return <= 1.0 + 1e-12);
  }
}

TEST_CASE("observation windows") {
  LbfScenario sc = grid(8, 8, 2, 1);
  sc.sight = 2;
  LbfEnv env(sc);
  auto s = make_state({{0, 0, 2}, {4, 4, 1}}, {{1, 0, 1, true}});

  SECTION("sight 2 gives a 5x5 window") {
    const auto obs = env.observe(s, 1);
    REQUIRE(obs.window_w() == 5);
    REQUIRE(obs.window_h() == 5);
    REQUIRE(obs.data.size() == 5 + 25);
    REQUIRE(obs.self_value() == 1);
  }
  SECTION("corner agent sees out-of-grid sentinels") {
    const auto obs = env.observe(s, 0);
    REQUIRE(obs.cell(0, 0) == kOutOfGrid);
    REQUIRE(obs.cell(2, 2) == 102);  // itself
    REQUIRE(obs.cell(3, 2) == 201);  // the food to its right
  }
  SECTION("full observability returns the whole grid") {
    LbfEnv full(grid(8, 8, 2, 1));
    const auto obs = full.observe(s, 0);
    REQUIRE(obs.window_w() == 8);
    REQUIRE(obs.window_h() == 8);
    REQUIRE(obs.agent_x() == 0);
    REQUIRE(obs.cell(4, 4) == 101);
  }
  SECTION("equal states give equal observations") {
    auto t = s;
    REQUIRE(env.observe(s, 0) == env.observe(t, 0));
    REQUIRE(env.observe(s, 0).hash() == env.observe(t, 0).hash());
  }
}

TEST_CASE("presets parse to the documented families") {
  const auto det = parse_lbf_scenario("Foraging-15x15-3p-3f-det");
  REQUIRE(det.level_mode == LevelMode::Fixed);
  REQUIRE(det.fixed_levels == std::vector<int>{1, 2, 3});
  REQUIRE(det.food_level_mode == FoodLevelMode::Fixed);
  REQUIRE(det.food_level_fixed == 3);

  const auto sum = parse_lbf_scenario("Foraging-15x15-3p-3f-det-max-food-sum");
  REQUIRE(sum.food_level_mode == FoodLevelMode::RandomRange);
  REQUIRE(sum.food_level_lo == 1);
  REQUIRE(sum.food_level_hi == 6);

  for (const auto& name : scalability_family()) REQUIRE_NOTHROW(parse_lbf_scenario(name));
  REQUIRE(parse_lbf_scenario(scalability_family().back()).n_agents == 50);
}
