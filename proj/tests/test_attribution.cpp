#include <catch2/catch_amalgamated.hpp>

#include "credit/attribution.hpp"
#include "credit/lbf.hpp"
#include "credit/warehouse.hpp"

using namespace credit;
using namespace credit::lbf;

namespace {

constexpr int kNoOp = 0, kLoad = 5;

LbfEnv pair_env() {
  LbfScenario sc;
  sc.width = sc.height = 6;
  sc.n_agents = 2;
  sc.n_food = 1;
  return LbfEnv(sc);
}

// Both agents adjacent to one food that needs their combined level.
LbfState pivotal_pair_state() {
  LbfState s;
  s.agents = {{1, 2, 1}, {3, 2, 1}};
  s.foods = {{2, 2, 2, true}};
  s.max_steps = 50;
  s.total_food_level_at_spawn = 2;
  return s;
}

// Test-only wrapper that scales the reward rule by a constant.
template <Environment E>
struct ScaledEnv {
  using State = typename E::State;
  const E& base;
  double scale;

  int num_agents() const { return base.num_agents(); }
  int num_actions() const { return base.num_actions(); }
  int noop_action() const { return base.noop_action(); }
  State reset(std::uint64_t seed) const { return base.reset(seed); }
  Observation observe(const State& s, int agent) const { return base.observe(s, agent); }
  StepOutcome<State> step(const State& s, std::span<const int> joint) const {
    auto out = base.step(s, joint);
    out.team_reward *= scale;
    for (auto& r : out.individual_rewards) r *= scale;
    return out;
  }
};

}  // namespace

TEST_CASE("coalition value") {
  const auto env = pair_env();
  const auto s = pivotal_pair_state();
  const std::vector<int> joint{kLoad, kLoad};
  Rng rng(1);

  SECTION("grand coalition reproduces the factual reward") {
    REQUIRE(coalition_value(env, s, joint, CoalitionMask::grand(2), RemovalProxy::NoOp, rng) ==
            env.step(s, joint).team_reward);
  }
  SECTION("empty coalition under noop is worthless here") {
    REQUIRE(coalition_value(env, s, joint, CoalitionMask::empty(), RemovalProxy::NoOp, rng) == 0.0);
  }
  SECTION("dropping one required agent forfeits the food") {
    REQUIRE(coalition_value(env, s, joint, CoalitionMask::grand(2).without(1), RemovalProxy::NoOp,
                            rng) == 0.0);
  }
  SECTION("the factual state is never mutated") {
    const auto before = s;
    (void)coalition_value(env, s, joint, CoalitionMask::empty(), RemovalProxy::NoOp, rng);
    REQUIRE(s == before);
  }
  SECTION("copy proxy with an empty mask falls back to noop") {
    Rng r2(7);
    REQUIRE(coalition_value(env, s, joint, CoalitionMask::empty(), RemovalProxy::CopyOtherAgent,
                            r2) == 0.0);
  }
  SECTION("random proxy is reproducible given the rng state") {
    Rng a(42), b(42);
    const auto mask = CoalitionMask::grand(2).without(0);
    REQUIRE(coalition_value(env, s, joint, mask, RemovalProxy::RandomAction, a) ==
            coalition_value(env, s, joint, mask, RemovalProxy::RandomAction, b));
  }
}

TEST_CASE("importance step") {
  const auto env = pair_env();
  const auto s = pivotal_pair_state();

  SECTION("both pivotal agents get the full normalized value") {
    const auto attr = importance_step(env, s, std::vector<int>{kLoad, kLoad});
    REQUIRE(attr.values == std::vector<double>{1.0, 1.0});
    REQUIRE(attr.counterfactual_evals == 2);
  }
  SECTION("an agent that already chose noop scores exactly zero") {
    const auto attr = importance_step(env, s, std::vector<int>{kNoOp, kLoad});
    REQUIRE(attr.values[0] == 0.0);
  }
}

TEST_CASE("exact Shapley on the two-agent pickup") {
  const auto env = pair_env();
  const auto s = pivotal_pair_state();
  const auto attr = exact_shapley_step(env, s, std::vector<int>{kLoad, kLoad});
  // v(empty)=v({0})=v({1})=0, v(N)=1 -> equal split
  REQUIRE(attr.values[0] == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(attr.values[1] == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(attr.counterfactual_evals == 4);
}

TEST_CASE("a dummy agent has zero Shapley value") {
  LbfScenario sc;
  sc.width = sc.height = 6;
  sc.n_agents = 3;
  sc.n_food = 1;
  LbfEnv env(sc);
  LbfState s;
  s.agents = {{1, 2, 2}, {3, 2, 1}, {5, 5, 3}};
  s.foods = {{2, 2, 2, true}};
  s.max_steps = 50;
  s.total_food_level_at_spawn = 2;
  // agent 2 is far away and idle: every marginal is zero
  const auto attr = exact_shapley_step(env, s, std::vector<int>{kLoad, kLoad, kNoOp});
  REQUIRE(attr.values[2] == 0.0);
  const auto imp = importance_step(env, s, std::vector<int>{kLoad, kLoad, kNoOp});
  REQUIRE(imp.values[2] == 0.0);
}

TEST_CASE("single-agent identity: importance equals exact Shapley bit-for-bit") {
  LbfScenario sc;
  sc.width = sc.height = 5;
  sc.n_agents = 1;
  sc.n_food = 2;
  LbfEnv env(sc);
  Rng rng(17);
  auto state = env.reset(rng.next_u64());
  for (int k = 0; k < 500; ++k) {
    if (state.done) state = env.reset(rng.next_u64());
    const std::vector<int> joint{rng.next_int(env.num_actions())};
    const auto imp = importance_step(env, state, joint);
    const auto shap = exact_shapley_step(env, state, joint);
    REQUIRE(imp.values[0] == shap.values[0]);
    state = env.step(state, joint).next;
  }
}

TEST_CASE("Shapley efficiency on random three-agent states") {
  LbfEnv env("Foraging-6x6-3p-3f");
  Rng rng(23);
  auto state = env.reset(rng.next_u64());
  for (int k = 0; k < 300; ++k) {
    if (state.done) state = env.reset(rng.next_u64());
    std::vector<int> joint(3);
    for (auto& a : joint) a = rng.next_int(env.num_actions());

    const auto attr = exact_shapley_step(env, state, joint);
    double total = 0.0;
    for (double v : attr.values) total += v;
    Rng r(0);
    const double grand = coalition_value(env, state, joint, CoalitionMask::grand(3),
                                         RemovalProxy::NoOp, r);
    const double empty = coalition_value(env, state, joint, CoalitionMask::empty(),
                                         RemovalProxy::NoOp, r);
    REQUIRE(std::abs(total - (grand - empty)) <= 1e-9);
    state = env.step(state, joint).next;
  }
}

TEST_CASE("symmetric agents receive symmetric values") {
  const auto env = pair_env();
  // mirror-image agents of equal level on either side of the food
  LbfState s = pivotal_pair_state();
  const auto shap = exact_shapley_step(env, s, std::vector<int>{kLoad, kLoad});
  REQUIRE(shap.values[0] == shap.values[1]);

  // swapping the two agents permutes the values
  LbfState swapped = s;
  std::swap(swapped.agents[0], swapped.agents[1]);
  swapped.agents[0].level = 2;  // make roles distinguishable
  s.agents[1].level = 2;
  const auto a = exact_shapley_step(env, s, std::vector<int>{kLoad, kLoad});
  const auto b = exact_shapley_step(env, swapped, std::vector<int>{kLoad, kLoad});
  REQUIRE(a.values[0] == Catch::Approx(b.values[1]).margin(1e-12));
  REQUIRE(a.values[1] == Catch::Approx(b.values[0]).margin(1e-12));
}

TEST_CASE("scaling the reward scales every attribution linearly") {
  const auto env = pair_env();
  const auto s = pivotal_pair_state();
  const std::vector<int> joint{kLoad, kLoad};
  const ScaledEnv<LbfEnv> scaled{env, 3.5};

  const auto base_imp = importance_step(env, s, joint);
  const auto scaled_imp = importance_step(scaled, s, joint);
  const auto base_shap = exact_shapley_step(env, s, joint);
  const auto scaled_shap = exact_shapley_step(scaled, s, joint);
  for (int i = 0; i < 2; ++i) {
    const auto k = static_cast<std::size_t>(i);
    REQUIRE(scaled_imp.values[k] == Catch::Approx(3.5 * base_imp.values[k]).margin(1e-12));
    REQUIRE(scaled_shap.values[k] == Catch::Approx(3.5 * base_shap.values[k]).margin(1e-12));
  }
}

TEST_CASE("exact Shapley enforces the agent cap") {
  const auto env = pair_env();
  const auto s = pivotal_pair_state();
  REQUIRE_THROWS_AS(exact_shapley_step(env, s, std::vector<int>{kLoad, kLoad}, 1), TooManyAgents);
}

TEST_CASE("MC-Shapley") {
  LbfEnv env("Foraging-6x6-3p-3f");
  auto state = env.reset(5);
  std::vector<int> joint{kLoad, kLoad, kLoad};
  StateAction<LbfEnv> sa{state, joint};

  SECTION("full enumeration equals the exact value") {
    const auto exact = exact_shapley_step(env, state, joint);
    const auto enumerated = mc_shapley_enumerate<LbfEnv>(env, std::span(&sa, 1));
    for (int i = 0; i < 3; ++i)
      REQUIRE(enumerated.values[static_cast<std::size_t>(i)] ==
              Catch::Approx(exact.values[static_cast<std::size_t>(i)]).margin(1e-12));
    // permutation walks revisit cached coalitions; every subset is evaluated once
    REQUIRE(enumerated.evals == 8);
  }
  SECTION("single-sample runs are reproducible") {
    Rng a(3), b(3);
    const auto ra = mc_shapley<LbfEnv>(env, std::span(&sa, 1), 1, RemovalProxy::NoOp,
                                       McSampler::Permutation, a);
    const auto rb = mc_shapley<LbfEnv>(env, std::span(&sa, 1), 1, RemovalProxy::NoOp,
                                       McSampler::Permutation, b);
    REQUIRE(ra.values == rb.values);
  }
  SECTION("permutation sampling converges within five standard errors") {
    // oracle first: the exact values
    Rng mc_rng(101);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto s = env.reset(seed);
      std::vector<int> acts{kLoad, kLoad, kLoad};
      const auto exact = exact_shapley_step(env, s, acts);
      StateAction<LbfEnv> fixed{s, acts};
      const auto mc = mc_shapley<LbfEnv>(env, std::span(&fixed, 1), 4000, RemovalProxy::NoOp,
                                         McSampler::Permutation, mc_rng);
      for (int i = 0; i < 3; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double slack = std::max(5.0 * mc.std_error[k], 1e-12);
        REQUIRE(std::abs(mc.values[k] - exact.values[k]) <= slack);
      }
    }
  }
  SECTION("uniform-coalition sampling has the documented per-agent cost") {
    Rng r(9);
    const auto mc = mc_shapley<LbfEnv>(env, std::span(&sa, 1), 64, RemovalProxy::NoOp,
                                       McSampler::UniformCoalition, r);
    REQUIRE(mc.values.size() == 3);
    // cached noop evaluations never exceed the coalition count
    REQUIRE(mc.evals <= 8);
  }
}

namespace {

// Synthetic cooperative game: action 1 means "participate" and the team
// reward is a lookup over the participating set, so coalition values are
// exactly the table entries and Shapley values are computable by hand.
struct TableGameState {
  int step = 0;
  bool done = false;
  bool operator==(const TableGameState&) const = default;
};

struct TableGameEnv {
  using State = TableGameState;
  std::array<double, 8> payoff;

  int num_agents() const { return 3; }
  int num_actions() const { return 2; }
  int noop_action() const { return 0; }
  State reset(std::uint64_t) const { return {}; }
  Observation observe(const State&, int) const { return Observation{{1, 1, 0, 0, 0, 0}}; }
  StepOutcome<State> step(const State& s, std::span<const int> joint) const {
    check_joint_action(s, joint, 3, 2);
    int mask = 0;
    for (int i = 0; i < 3; ++i)
      if (joint[static_cast<std::size_t>(i)] == 1) mask |= 1 << i;
    StepOutcome<State> out;
    out.next = {s.step + 1, true};
    out.team_reward = payoff[static_cast<std::size_t>(mask)];
    out.individual_rewards.assign(3, out.team_reward / 3.0);
    out.done = true;
    return out;
  }
};

static_assert(Environment<TableGameEnv>);

}  // namespace

TEST_CASE("hand-computed Shapley values on a synthetic game") {
  // v indexed by participation bitmask {agent0=1, agent1=2, agent2=4}
  const TableGameEnv env{{0, 1, 2, 4, 3, 5, 6, 7}};
  const TableGameState state;
  const std::vector<int> joint{1, 1, 1};

  SECTION("exact Shapley matches the worked values") {
    // weights for n=3: w(0)=1/3, w(1)=1/6, w(2)=1/3
    const auto attr = exact_shapley_step(env, state, joint);
    REQUIRE(attr.values[0] == Catch::Approx(4.0 / 3).margin(1e-12));
    REQUIRE(attr.values[1] == Catch::Approx(7.0 / 3).margin(1e-12));
    REQUIRE(attr.values[2] == Catch::Approx(10.0 / 3).margin(1e-12));
  }
  SECTION("importance is the top-coalition difference reward") {
    const auto imp = importance_step(env, state, joint);
    REQUIRE(imp.values == std::vector<double>{7.0 - 6.0, 7.0 - 5.0, 7.0 - 4.0});
  }
  SECTION("permutation sampling is unbiased, uniform-coalition sampling is not") {
    const StateAction<TableGameEnv> sa{state, joint};
    Rng rng_a(5), rng_b(5);
    const auto perm = mc_shapley<TableGameEnv>(env, std::span(&sa, 1), 20000, RemovalProxy::NoOp,
                                               McSampler::Permutation, rng_a);
    const auto unif = mc_shapley<TableGameEnv>(env, std::span(&sa, 1), 20000, RemovalProxy::NoOp,
                                               McSampler::UniformCoalition, rng_b);
    // permutation estimate converges on the Shapley value 4/3
    REQUIRE(std::abs(perm.values[0] - 4.0 / 3) <= 5 * std::max(perm.std_error[0], 1e-6));
    // the uniform-coalition estimand is the unweighted marginal mean, 1.5
    REQUIRE(std::abs(unif.values[0] - 1.5) <= 5 * std::max(unif.std_error[0], 1e-6));
  }
}

TEST_CASE("attribute_interval aggregates per-step values") {
  LbfEnv env("Foraging-5x5-2p-2f");

  SECTION("all-noop policies produce an all-zero report") {
    std::vector<Policy> noop(2, Policy{PolicyKind::TabularQ, 6, 0.0, {}});
    AttributionOptions opt;
    opt.method = Method::Importance;
    opt.seed = 3;
    const auto rec = attribute_interval(env, noop, 2, opt);
    REQUIRE(rec.steps > 0);
    for (double v : rec.mean) REQUIRE(v == 0.0);
    REQUIRE(rec.team_variance == 0.0);
    for (const auto& step : rec.step_values)
      for (double v : step.values) REQUIRE(v == 0.0);
  }
  SECTION("interval mean equals the arithmetic mean of step values") {
    std::vector<Policy> greedy(2, Policy{PolicyKind::GreedyLbf, 6, 0.0, {}});
    AttributionOptions opt;
    opt.method = Method::Importance;
    opt.seed = 4;
    const auto rec = attribute_interval(env, greedy, 3, opt);
    for (int i = 0; i < 2; ++i) {
      double sum = 0.0;
      for (const auto& step : rec.step_values) sum += step.values[static_cast<std::size_t>(i)];
      REQUIRE(rec.mean[static_cast<std::size_t>(i)] ==
              Catch::Approx(sum / static_cast<double>(rec.steps)).margin(1e-12));
    }
    REQUIRE(rec.counterfactual_evals == 2 * rec.steps);
  }
  SECTION("the noop pipeline is bit-reproducible") {
    std::vector<Policy> greedy(2, Policy{PolicyKind::GreedyLbf, 6, 0.0, {}});
    AttributionOptions opt;
    opt.method = Method::ExactShapley;
    opt.seed = 5;
    const auto a = attribute_interval(env, greedy, 2, opt);
    const auto b = attribute_interval(env, greedy, 2, opt);
    REQUIRE(a.mean == b.mean);
    REQUIRE(a.steps == b.steps);
    for (std::size_t t = 0; t < a.step_values.size(); ++t)
      REQUIRE(a.step_values[t].values == b.step_values[t].values);
  }
  SECTION("single-agent interval: importance and Shapley agree exactly") {
    LbfScenario sc;
    sc.width = sc.height = 5;
    sc.n_agents = 1;
    sc.n_food = 1;
    LbfEnv solo(sc);
    std::vector<Policy> greedy(1, Policy{PolicyKind::GreedyLbf, 6, 0.0, {}});
    AttributionOptions opt;
    opt.seed = 6;
    opt.method = Method::Importance;
    const auto imp = attribute_interval(solo, greedy, 4, opt);
    opt.method = Method::ExactShapley;
    const auto shap = attribute_interval(solo, greedy, 4, opt);
    REQUIRE(imp.mean == shap.mean);
  }
}

TEST_CASE("parallel counterfactual evaluation matches serial") {
  LbfEnv env("Foraging-6x6-3p-3f");
  auto state = env.reset(2);
  const std::vector<int> joint{kLoad, 4, kLoad};
  const auto serial = exact_shapley_step(env, state, joint, 20, 1);
  const auto parallel = exact_shapley_step(env, state, joint, 20, 4);
  REQUIRE(serial.values == parallel.values);
  const auto imp_serial = importance_step(env, state, joint, 1);
  const auto imp_parallel = importance_step(env, state, joint, 4);
  REQUIRE(imp_serial.values == imp_parallel.values);
}

TEST_CASE("importance works on the warehouse too") {
  warehouse::WarehouseEnv env("rware-tiny-2ag");
  Rng rng(51);
  auto state = env.reset(3);
  for (int k = 0; k < 50; ++k) {
    std::vector<int> joint{rng.next_int(6), rng.next_int(6)};
    const auto imp = importance_step(env, state, joint);
    const auto shap = exact_shapley_step(env, state, joint);
    double sum = 0.0;
    for (double v : shap.values) sum += v;
    Rng r(0);
    const double grand =
        coalition_value(env, state, joint, CoalitionMask::grand(2), RemovalProxy::NoOp, r);
    const double empty =
        coalition_value(env, state, joint, CoalitionMask::empty(), RemovalProxy::NoOp, r);
    REQUIRE(std::abs(sum - (grand - empty)) <= 1e-9);
    REQUIRE(imp.values.size() == 2);
    state = env.step(state, joint).next;
  }
}
