#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "credit/attribution.hpp"
#include "credit/lbf.hpp"

namespace credit {

enum class BenchMethod { Baseline, Importance, ExactShapley };

inline std::string to_string(BenchMethod m) {
  switch (m) {
    case BenchMethod::Baseline: return "baseline";
    case BenchMethod::Importance: return "importance";
    case BenchMethod::ExactShapley: return "shapley";
  }
  return "?";
}

struct BenchResult {
  std::string scenario;
  int n_agents = 0;
  BenchMethod method = BenchMethod::Baseline;
  double mean_s_per_step = 0.0;
  double std_s_per_step = 0.0;
  std::int64_t evals_per_step = 0;  // exact, from instrumented counters
  bool parallel = false;
  bool skipped = false;
};

struct BenchOptions {
  int reps = 3;
  int steps_per_rep = 100;
  int shapley_cap = 20;
  int workers = 1;  // >1 enables the parallel counterfactual pool
  std::uint64_t seed = 1;
  bool force = false;  // run exact Shapley even above the cap
};

// Time per environment step while computing one attribution method, random
// untrained policies. Episode resets are excluded from the timed region.
template <Environment E>
BenchResult bench_env(const E& env, std::string scenario, BenchMethod method,
                      const BenchOptions& opt) {
  const int n = env.num_agents();
  BenchResult result;
  result.scenario = std::move(scenario);
  result.n_agents = n;
  result.method = method;
  result.parallel = opt.workers > 1;

  if (method == BenchMethod::ExactShapley && n > opt.shapley_cap && !opt.force) {
    result.skipped = true;
    return result;
  }

  const std::int64_t expected_evals =
      method == BenchMethod::Baseline ? 0 : (method == BenchMethod::Importance ? n : (1ll << n));

  using clock = std::chrono::steady_clock;
  std::vector<double> per_rep;
  per_rep.reserve(static_cast<std::size_t>(opt.reps));
  std::vector<int> joint(static_cast<std::size_t>(n));
  for (int rep = 0; rep < opt.reps; ++rep) {
    Rng rng(derive_seed(opt.seed, "bench-act", static_cast<std::uint64_t>(rep)));
    auto state = env.reset(derive_seed(opt.seed, "bench-ep", static_cast<std::uint64_t>(rep)));
    std::int64_t evals = 0;
    std::chrono::nanoseconds elapsed{0};
    for (int s = 0; s < opt.steps_per_rep; ++s) {
      const auto start = clock::now();
      for (int i = 0; i < n; ++i) joint[static_cast<std::size_t>(i)] = rng.next_int(env.num_actions());
      switch (method) {
        case BenchMethod::Baseline:
          break;
        case BenchMethod::Importance:
          evals += importance_step(env, state, joint, opt.workers).counterfactual_evals;
          break;
        case BenchMethod::ExactShapley:
          evals += exact_shapley_step(env, state, joint, opt.shapley_cap, opt.workers)
                       .counterfactual_evals;
          break;
      }
      auto out = env.step(state, joint);
      elapsed += clock::now() - start;
      state = out.done
                  ? env.reset(derive_seed(opt.seed, "bench-reset",
                                          static_cast<std::uint64_t>(rep) * opt.steps_per_rep + s))
                  : std::move(out.next);
    }
    if (evals != expected_evals * opt.steps_per_rep)
      throw std::logic_error("counterfactual eval count mismatch in bench");
    per_rep.push_back(std::chrono::duration<double>(elapsed).count() / opt.steps_per_rep);
  }

  double mean = 0.0;
  for (double v : per_rep) mean += v;
  mean /= static_cast<double>(per_rep.size());
  double var = 0.0;
  for (double v : per_rep) var += (v - mean) * (v - mean);
  result.mean_s_per_step = mean;
  result.std_s_per_step = per_rep.size() > 1 ? std::sqrt(var / static_cast<double>(per_rep.size() - 1)) : 0.0;
  result.evals_per_step = expected_evals;
  return result;
}

// The scaling study over the LBF scalability family (2..50 agents). Exact
// Shapley is skipped above the cap unless forced, mirroring the omitted
// 50-agent entry in the source measurements.
inline std::vector<BenchResult> run_scaling(std::span<const std::string> scenario_names,
                                            std::span<const BenchMethod> methods,
                                            const BenchOptions& opt) {
  std::vector<BenchResult> results;
  for (const auto& name : scenario_names) {
    lbf::LbfEnv env(name);
    for (BenchMethod method : methods) results.push_back(bench_env(env, name, method, opt));
  }
  return results;
}

}  // namespace credit
