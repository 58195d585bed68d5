#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "credit/env.hpp"
#include "credit/policy.hpp"

namespace credit {

// Subset of agents treated as present; everyone outside the mask is replaced
// by a removal proxy when the coalition is valued.
struct CoalitionMask {
  std::uint64_t bits = 0;

  static CoalitionMask grand(int n) { return {n >= 64 ? ~0ull : ((1ull << n) - 1)}; }
  static CoalitionMask empty() { return {0}; }

  bool contains(int i) const { return (bits >> i) & 1ull; }
  CoalitionMask with(int i) const { return {bits | (1ull << i)}; }
  CoalitionMask without(int i) const { return {bits & ~(1ull << i)}; }
  int size() const { return std::popcount(bits); }
  bool operator==(const CoalitionMask&) const = default;
};

enum class RemovalProxy { NoOp, RandomAction, CopyOtherAgent };
enum class Method { Importance, ExactShapley, McShapley };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Importance: return "importance";
    case Method::ExactShapley: return "shapley";
    case Method::McShapley: return "mc-shapley";
  }
  return "?";
}

inline std::string to_string(RemovalProxy p) {
  switch (p) {
    case RemovalProxy::NoOp: return "noop";
    case RemovalProxy::RandomAction: return "random";
    case RemovalProxy::CopyOtherAgent: return "copy";
  }
  return "?";
}

// Substitute the actions of agents outside `mask` according to the proxy.
// Substitutions are applied in ascending agent index so rng draws are
// reproducible. An empty mask under CopyOtherAgent falls back to no-op.
template <Environment E>
std::vector<int> substitute_actions(const E& env, std::span<const int> joint, CoalitionMask mask,
                                    RemovalProxy proxy, Rng& rng) {
  const int n = env.num_agents();
  std::vector<int> result(joint.begin(), joint.end());
  std::vector<int> members;
  if (proxy == RemovalProxy::CopyOtherAgent) {
    members.reserve(static_cast<std::size_t>(mask.size()));
    for (int i = 0; i < n; ++i)
      if (mask.contains(i)) members.push_back(i);
  }
  for (int i = 0; i < n; ++i) {
    if (mask.contains(i)) continue;
    switch (proxy) {
      case RemovalProxy::NoOp:
        result[static_cast<std::size_t>(i)] = env.noop_action();
        break;
      case RemovalProxy::RandomAction:
        result[static_cast<std::size_t>(i)] = rng.next_int(env.num_actions());
        break;
      case RemovalProxy::CopyOtherAgent:
        result[static_cast<std::size_t>(i)] =
            members.empty() ? env.noop_action()
                            : joint[static_cast<std::size_t>(
                                  members[static_cast<std::size_t>(rng.next_int(
                                      static_cast<int>(members.size())))])];
        break;
    }
  }
  return result;
}

// Team reward of one counterfactual transition: the factual state is
// re-stepped with absent agents neutralized. The factual state is untouched.
template <Environment E>
double coalition_value(const E& env, const typename E::State& state, std::span<const int> joint,
                       CoalitionMask mask, RemovalProxy proxy, Rng& rng) {
  const auto actions = substitute_actions(env, joint, mask, proxy, rng);
  return env.step(state, actions).team_reward;
}

struct StepAttribution {
  int t = 0;
  std::vector<double> values;
  Method method = Method::Importance;
  std::int64_t counterfactual_evals = 0;
};

namespace detail {

struct KahanSum {
  double sum = 0.0, carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// Evaluate fn(i) for i in [0, count) into a vector, optionally on a worker
// pool. Results land at fixed indices, so reductions stay deterministic
// regardless of scheduling.
template <class F>
std::vector<double> indexed_map(std::int64_t count, int workers, F&& fn) {
  std::vector<double> out(static_cast<std::size_t>(count));
  if (workers <= 1 || count < 2) {
    for (std::int64_t i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = fn(i);
    return out;
  }
  const int pool = std::min<std::int64_t>(workers, count);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(pool));
  for (int w = 0; w < pool; ++w) {
    threads.emplace_back([&, w] {
      for (std::int64_t i = w; i < count; i += pool) out[static_cast<std::size_t>(i)] = fn(i);
    });
  }
  for (auto& t : threads) t.join();
  return out;
}

inline const long double* factorials() {
  static const auto table = [] {
    static long double f[21];
    f[0] = 1.0L;
    for (int i = 1; i <= 20; ++i) f[i] = f[i - 1] * i;
    return f;
  }();
  return table;
}

}  // namespace detail

// Per-timestep difference reward D_i = r - r_{-i}: the factual team reward
// minus the team reward when agent i is replaced by a no-op. Exactly n
// counterfactual transitions (plus the factual one).
template <Environment E>
StepAttribution importance_step(const E& env, const typename E::State& state,
                                std::span<const int> joint, int workers = 1) {
  const int n = env.num_agents();
  const double factual = env.step(state, joint).team_reward;
  const auto grand = CoalitionMask::grand(n);
  auto counterfactuals = detail::indexed_map(n, workers, [&](std::int64_t i) {
    Rng r(0);
    return coalition_value(env, state, joint, grand.without(static_cast<int>(i)),
                           RemovalProxy::NoOp, r);
  });
  StepAttribution out;
  out.method = Method::Importance;
  out.counterfactual_evals = n;
  out.values.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.values[static_cast<std::size_t>(i)] = factual - counterfactuals[static_cast<std::size_t>(i)];
  return out;
}

// Exact Shapley values for this step under the no-op proxy. Every coalition
// is valued once (2^n transitions, cached by mask); the permutation weights
// |C|!(n-|C|-1)!/n! come from an exact long-double factorial table.
template <Environment E>
StepAttribution exact_shapley_step(const E& env, const typename E::State& state,
                                   std::span<const int> joint, int cap = 20, int workers = 1) {
  const int n = env.num_agents();
  if (n > cap)
    throw TooManyAgents("exact Shapley requested for " + std::to_string(n) +
                        " agents (cap " + std::to_string(cap) + ")");
  const std::uint64_t subsets = 1ull << n;
  auto values = detail::indexed_map(static_cast<std::int64_t>(subsets), workers,
                                    [&](std::int64_t mask) {
                                      Rng r(0);
                                      return coalition_value(env, state, joint,
                                                             CoalitionMask{static_cast<std::uint64_t>(mask)},
                                                             RemovalProxy::NoOp, r);
                                    });

  const long double* fact = detail::factorials();
  std::vector<double> weight(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c)
    weight[static_cast<std::size_t>(c)] =
        static_cast<double>(fact[c] * fact[n - 1 - c] / fact[n]);

  StepAttribution out;
  out.method = Method::ExactShapley;
  out.counterfactual_evals = static_cast<std::int64_t>(subsets);
  out.values.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::uint64_t bit = 1ull << i;
    detail::KahanSum acc;
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      const int c = std::popcount(mask);
      acc.add(weight[static_cast<std::size_t>(c)] *
              (values[static_cast<std::size_t>(mask | bit)] - values[static_cast<std::size_t>(mask)]));
    }
    out.values[static_cast<std::size_t>(i)] = acc.sum;
  }
  return out;
}

enum class McSampler { UniformCoalition, Permutation };

template <Environment E>
struct StateAction {
  typename E::State state;
  std::vector<int> joint;
};

struct McShapleyResult {
  std::vector<double> values;
  std::vector<double> std_error;  // empirical standard error per agent
  std::int64_t evals = 0;         // environment transitions actually run
};

namespace detail {

// Coalition-value cache, valid only for deterministic proxies.
template <Environment E>
class CachedValuer {
 public:
  CachedValuer(const E& env, const StateAction<E>& sa, RemovalProxy proxy)
      : env_(env), sa_(sa), proxy_(proxy), cacheable_(proxy == RemovalProxy::NoOp) {}

  double value(CoalitionMask mask, Rng& rng) {
    if (cacheable_) {
      auto it = cache_.find(mask.bits);
      if (it != cache_.end()) return it->second;
    }
    ++evals_;
    const double v = coalition_value(env_, sa_.state, sa_.joint, mask, proxy_, rng);
    if (cacheable_) cache_.emplace(mask.bits, v);
    return v;
  }

  std::int64_t evals() const { return evals_; }

 private:
  const E& env_;
  const StateAction<E>& sa_;
  RemovalProxy proxy_;
  bool cacheable_;
  std::unordered_map<std::uint64_t, double> cache_;
  std::int64_t evals_ = 0;
};

}  // namespace detail

// Monte-Carlo Shapley over a set of step samples. The Permutation sampler
// draws a uniform permutation per sample and credits every agent with the
// marginal over its predecessor set (unbiased for the exact value). The
// UniformCoalition sampler draws C uniformly from the subsets excluding the
// agent, which matches the source estimator but is biased; it is kept for
// comparison. Each sample picks one of the provided states uniformly.
template <Environment E>
McShapleyResult mc_shapley(const E& env, std::span<const StateAction<E>> states, int samples,
                           RemovalProxy proxy, McSampler sampler, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("mc_shapley needs at least one sample");
  if (states.empty()) throw std::invalid_argument("mc_shapley needs at least one state");
  const int n = env.num_agents();
  std::vector<detail::CachedValuer<E>> valuers;
  valuers.reserve(states.size());
  for (const auto& sa : states) valuers.emplace_back(env, sa, proxy);

  std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
  std::vector<double> sumsq(static_cast<std::size_t>(n), 0.0);
  auto record = [&](int agent, double marginal) {
    sum[static_cast<std::size_t>(agent)] += marginal;
    sumsq[static_cast<std::size_t>(agent)] += marginal * marginal;
  };

  if (sampler == McSampler::Permutation) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int m = 0; m < samples; ++m) {
      auto& valuer = valuers[states.size() == 1
                                 ? 0
                                 : static_cast<std::size_t>(rng.next_int(static_cast<int>(states.size())))];
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      CoalitionMask mask = CoalitionMask::empty();
      double prev = valuer.value(mask, rng);
      for (int agent : perm) {
        mask = mask.with(agent);
        const double next = valuer.value(mask, rng);
        record(agent, next - prev);
        prev = next;
      }
    }
  } else {
    const std::uint64_t full = CoalitionMask::grand(n).bits;
    for (int i = 0; i < n; ++i) {
      for (int m = 0; m < samples; ++m) {
        auto& valuer = valuers[states.size() == 1
                                   ? 0
                                   : static_cast<std::size_t>(rng.next_int(static_cast<int>(states.size())))];
        const CoalitionMask coalition{rng.next_u64() & full & ~(1ull << i)};
        const double without = valuer.value(coalition, rng);
        const double with = valuer.value(coalition.with(i), rng);
        record(i, with - without);
      }
    }
  }

  McShapleyResult out;
  out.values.resize(static_cast<std::size_t>(n));
  out.std_error.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double mean = sum[k] / samples;
    out.values[k] = mean;
    if (samples > 1) {
      const double var = std::max(0.0, (sumsq[k] - samples * mean * mean) / (samples - 1));
      out.std_error[k] = std::sqrt(var / samples);
    }
  }
  for (const auto& v : valuers) out.evals += v.evals();
  return out;
}

// Full-enumeration mode: every permutation of every provided state, averaged.
// On a single state this reproduces the exact Shapley value.
template <Environment E>
McShapleyResult mc_shapley_enumerate(const E& env, std::span<const StateAction<E>> states,
                                     RemovalProxy proxy = RemovalProxy::NoOp) {
  const int n = env.num_agents();
  if (n > 10)
    throw TooManyAgents("permutation enumeration requested for " + std::to_string(n) + " agents");
  Rng rng(0);
  std::vector<int> perm(static_cast<std::size_t>(n));
  McShapleyResult out;
  out.values.assign(static_cast<std::size_t>(n), 0.0);
  out.std_error.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<detail::KahanSum> acc(static_cast<std::size_t>(n));
  std::int64_t permutations = 0;
  for (const auto& sa : states) {
    detail::CachedValuer<E> valuer(env, sa, proxy);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      CoalitionMask mask = CoalitionMask::empty();
      double prev = valuer.value(mask, rng);
      for (int agent : perm) {
        mask = mask.with(agent);
        const double next = valuer.value(mask, rng);
        acc[static_cast<std::size_t>(agent)].add(next - prev);
        prev = next;
      }
      ++permutations;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.evals += valuer.evals();
  }
  for (int i = 0; i < n; ++i)
    out.values[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i)].sum / permutations;
  return out;
}

// --- interval aggregation ---------------------------------------------------

struct AttributionOptions {
  Method method = Method::Importance;
  RemovalProxy mc_proxy = RemovalProxy::NoOp;
  McSampler mc_sampler = McSampler::Permutation;
  int mc_samples = 200;
  int shapley_cap = 20;
  int workers = 1;
  bool keep_steps = true;
  std::uint64_t seed = 0;
};

struct IntervalRecord {
  int interval = 0;
  std::int64_t steps = 0;                    // T: timesteps aggregated
  std::vector<double> mean;                  // per-agent interval mean
  std::vector<double> truth_mean;            // per-agent mean individual reward
  double team_variance = 0.0;                // population variance of mean across agents
  std::int64_t counterfactual_evals = 0;
  std::vector<StepAttribution> step_values;  // kept when keep_steps is set
};

struct AttributionReport {
  Method method = Method::Importance;
  int n_agents = 0;
  std::vector<IntervalRecord> intervals;
};

inline double population_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

// Roll out `episodes` evaluation episodes, apply the per-step attribution at
// every timestep, and aggregate: interval mean = (1/T) sum over all steps.
template <Environment E>
IntervalRecord attribute_interval(const E& env, std::span<const Policy> policies, int episodes,
                                  const AttributionOptions& opt, int interval_index = 0) {
  const int n = env.num_agents();
  IntervalRecord rec;
  rec.interval = interval_index;
  rec.mean.assign(static_cast<std::size_t>(n), 0.0);
  rec.truth_mean.assign(static_cast<std::size_t>(n), 0.0);

  std::vector<int> joint(static_cast<std::size_t>(n));
  for (int e = 0; e < episodes; ++e) {
    auto state = env.reset(derive_seed(opt.seed, "attr-ep", static_cast<std::uint64_t>(e)));
    Rng act_rng(derive_seed(opt.seed, "attr-act", static_cast<std::uint64_t>(e)));
    bool done = false;
    while (!done) {
      for (int i = 0; i < n; ++i)
        joint[static_cast<std::size_t>(i)] =
            act(policies[static_cast<std::size_t>(i)], env.observe(state, i), i, act_rng);

      StepAttribution step_attr;
      switch (opt.method) {
        case Method::Importance:
          step_attr = importance_step(env, state, joint, opt.workers);
          break;
        case Method::ExactShapley:
          step_attr = exact_shapley_step(env, state, joint, opt.shapley_cap, opt.workers);
          break;
        case Method::McShapley: {
          StateAction<E> sa{state, joint};
          Rng mc_rng(derive_seed(opt.seed, "attr-mc", static_cast<std::uint64_t>(rec.steps)));
          auto mc = mc_shapley<E>(env, std::span(&sa, 1), opt.mc_samples, opt.mc_proxy,
                                  opt.mc_sampler, mc_rng);
          step_attr.method = Method::McShapley;
          step_attr.values = std::move(mc.values);
          step_attr.counterfactual_evals = mc.evals;
          break;
        }
      }
      step_attr.t = static_cast<int>(rec.steps);

      auto out = env.step(state, joint);
      for (int i = 0; i < n; ++i) {
        rec.mean[static_cast<std::size_t>(i)] += step_attr.values[static_cast<std::size_t>(i)];
        rec.truth_mean[static_cast<std::size_t>(i)] += out.individual_rewards[static_cast<std::size_t>(i)];
      }
      rec.counterfactual_evals += step_attr.counterfactual_evals;
      rec.steps += 1;
      if (opt.keep_steps) rec.step_values.push_back(std::move(step_attr));
      done = out.done;
      state = std::move(out.next);
    }
  }
  if (rec.steps > 0) {
    for (auto& v : rec.mean) v /= static_cast<double>(rec.steps);
    for (auto& v : rec.truth_mean) v /= static_cast<double>(rec.steps);
  }
  rec.team_variance = population_variance(rec.mean);
  return rec;
}

}  // namespace credit
