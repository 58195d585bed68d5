// credit: simulate cooperative gridworlds and attribute the team reward to
// individual agents (difference-reward importance, exact and Monte-Carlo
// Shapley), with the validation statistics and scaling benchmark around it.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "credit/bench.hpp"
#include "credit/config.hpp"
#include "credit/evaluation.hpp"
#include "credit/io.hpp"
#include "credit/lbf.hpp"
#include "credit/warehouse.hpp"

namespace fs = std::filesystem;
using namespace credit;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Method parse_method(const std::string& m) {
  if (m == "importance") return Method::Importance;
  if (m == "shapley") return Method::ExactShapley;
  if (m == "mc-shapley") return Method::McShapley;
  throw ConfigError("unknown method: " + m);
}

RemovalProxy parse_proxy(const std::string& p) {
  if (p == "noop") return RemovalProxy::NoOp;
  if (p == "random") return RemovalProxy::RandomAction;
  if (p == "copy") return RemovalProxy::CopyOtherAgent;
  throw ConfigError("unknown proxy: " + p);
}

bool is_warehouse(const std::string& scenario) { return scenario.rfind("rware", 0) == 0; }

// Scenario-name dispatch to the concrete environment type.
template <class F>
void with_env(const Config& cfg, F&& fn) {
  if (is_warehouse(cfg.scenario)) {
    fn(warehouse::WarehouseEnv(cfg.scenario));
  } else {
    auto scenario = lbf::parse_lbf_scenario(cfg.scenario);
    if (cfg.reward_rule == "paper_literal") scenario.reward_rule = lbf::RewardRule::PaperLiteral;
    else if (cfg.reward_rule != "proportional")
      throw ConfigError("unknown reward_rule: " + cfg.reward_rule);
    fn(lbf::LbfEnv(scenario));
  }
}

template <Environment E>
std::vector<Policy> make_policies(const E& env, const Config& cfg) {
  const int n = env.num_agents();
  std::vector<Policy> policies(static_cast<std::size_t>(n));
  if (cfg.policy == "random") {
    for (auto& p : policies) p = Policy{PolicyKind::Random, env.num_actions(), 0.0, {}};
  } else if (cfg.policy == "greedy") {
    if (is_warehouse(cfg.scenario)) throw ConfigError("greedy policy is LBF-only");
    for (auto& p : policies) p = Policy{PolicyKind::GreedyLbf, env.num_actions(), 0.0, {}};
  } else if (cfg.policy == "noop") {
    // empty Q-table with epsilon 0 always picks action 0 (NoOp)
    for (auto& p : policies) p = Policy{PolicyKind::TabularQ, env.num_actions(), 0.0, {}};
  } else if (cfg.policy.rfind("q:", 0) == 0) {
    auto loaded = load_policies(read_text(cfg.policy.substr(2)));
    if (static_cast<int>(loaded.policies.size()) != n)
      throw ConfigError("policy file holds " + std::to_string(loaded.policies.size()) +
                        " agents, scenario needs " + std::to_string(n));
    policies = std::move(loaded.policies);
    for (auto& p : policies) p.epsilon = 0.0;  // evaluate greedily
  } else if (cfg.policy != "iql") {
    throw ConfigError("unknown policy spec: " + cfg.policy);
  }
  return policies;
}

// Run one job per seed on a bounded pool; outputs are per-seed files, so the
// merge order never depends on scheduling.
void for_each_seed(const std::vector<std::uint64_t>& seeds, unsigned max_workers,
                   const std::function<void(std::uint64_t)>& job) {
  const unsigned pool = std::max(1u, std::min<unsigned>(max_workers, seeds.size()));
  if (pool == 1) {
    for (auto seed : seeds) job(seed);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < pool; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = cursor.fetch_add(1); i < seeds.size(); i = cursor.fetch_add(1)) {
        try {
          job(seeds[i]);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

// --- subcommands -------------------------------------------------------------

void cmd_simulate(const Config& cfg) {
  for_each_seed(cfg.seeds, std::thread::hardware_concurrency(), [&](std::uint64_t seed) {
    with_env(cfg, [&](const auto& env) {
      const auto policies = make_policies(env, cfg);
      const int n = env.num_agents();
      TraceBuilder trace(cfg.scenario, seed);
      std::vector<int> joint(static_cast<std::size_t>(n));
      for (int e = 0; e < cfg.episodes; ++e) {
        auto state = env.reset(derive_seed(seed, "sim-ep", static_cast<std::uint64_t>(e)));
        Rng rng(derive_seed(seed, "sim-act", static_cast<std::uint64_t>(e)));
        bool done = false;
        int t = 0;
        while (!done) {
          for (int i = 0; i < n; ++i)
            joint[static_cast<std::size_t>(i)] =
                act(policies[static_cast<std::size_t>(i)], env.observe(state, i), i, rng);
          auto out = env.step(state, joint);
          trace.add_step(e, t, joint, out.team_reward, out.individual_rewards, out.done);
          done = out.done;
          state = std::move(out.next);
          ++t;
        }
      }
      write_text_atomic(fs::path(cfg.out_dir) / ("trace_" + std::to_string(seed) + ".jsonl"),
                        trace.text());
    });
  });
  std::cout << "wrote " << cfg.seeds.size() << " trace file(s) to " << cfg.out_dir << "\n";
}

void cmd_train(const Config& cfg) {
  if (cfg.policy != "iql" && cfg.policy != "random")
    throw ConfigError("train supports --policy iql");
  for_each_seed(cfg.seeds, std::thread::hardware_concurrency(), [&](std::uint64_t seed) {
    with_env(cfg, [&](const auto& env) {
      TrainConfig tc;
      tc.episodes = cfg.train_episodes;
      tc.alpha = cfg.alpha;
      tc.gamma = cfg.gamma;
      tc.epsilon_start = cfg.epsilon_start;
      tc.epsilon_end = cfg.epsilon_end;
      tc.anneal_episodes = cfg.anneal_episodes;
      tc.seed = seed;
      auto result = train_iql(env, tc);
      write_text_atomic(fs::path(cfg.out_dir) / ("policy_" + std::to_string(seed) + ".txt"),
                        save_policies(result.policies, cfg.scenario, seed));
      CsvBuilder curve("scenario,seed,episode,return");
      for (std::size_t e = 0; e < result.episode_returns.size(); ++e)
        curve.row(cfg.scenario, seed, static_cast<int>(e), result.episode_returns[e]);
      write_text_atomic(fs::path(cfg.out_dir) / ("curve_" + std::to_string(seed) + ".csv"),
                        curve.text());
    });
  });
  std::cout << "trained " << cfg.seeds.size() << " run(s) into " << cfg.out_dir << "\n";
}

AttributionOptions attribution_options(const Config& cfg, std::uint64_t seed, int interval) {
  AttributionOptions opt;
  opt.method = parse_method(cfg.method);
  opt.mc_proxy = parse_proxy(cfg.proxy);
  opt.mc_samples = cfg.mc_samples;
  opt.shapley_cap = cfg.shapley_cap;
  opt.workers = cfg.workers;
  opt.seed = derive_seed(seed, "interval", static_cast<std::uint64_t>(interval));
  return opt;
}

// Shared core of attribute/correlate: per interval, evaluate the policies and
// compute the requested per-step attribution. With --policy iql the policies
// are trained between intervals so contributions are tracked over training.
template <Environment E, class PerInterval>
void run_intervals(const E& env, const Config& cfg, std::uint64_t seed, PerInterval&& per_interval) {
  std::vector<Policy> policies;
  TrainConfig tc;
  const bool train = cfg.policy == "iql";
  int trained = 0;
  if (train) {
    tc.episodes = cfg.train_episodes;
    tc.alpha = cfg.alpha;
    tc.gamma = cfg.gamma;
    tc.epsilon_start = cfg.epsilon_start;
    tc.epsilon_end = cfg.epsilon_end;
    tc.anneal_episodes = cfg.anneal_episodes;
    tc.seed = seed;
    policies.assign(static_cast<std::size_t>(env.num_agents()),
                    Policy{PolicyKind::TabularQ, env.num_actions(), tc.epsilon_start, {}});
  } else {
    policies = make_policies(env, cfg);
  }
  for (int k = 0; k < cfg.intervals; ++k) {
    if (train) {
      const int target = static_cast<int>(
          static_cast<std::int64_t>(tc.episodes) * (k + 1) / cfg.intervals);
      std::vector<double> returns;
      train_iql_range(env, policies, tc, trained, target, returns);
      trained = target;
    }
    std::vector<Policy> eval = policies;
    for (auto& p : eval) p.epsilon = 0.0;
    per_interval(k, eval);
  }
}

void cmd_attribute(const Config& cfg) {
  for_each_seed(cfg.seeds, std::thread::hardware_concurrency(), [&](std::uint64_t seed) {
    with_env(cfg, [&](const auto& env) {
      AttributionReport report;
      report.method = parse_method(cfg.method);
      report.n_agents = env.num_agents();
      run_intervals(env, cfg, seed, [&](int k, const std::vector<Policy>& eval) {
        auto opt = attribution_options(cfg, seed, k);
        report.intervals.push_back(attribute_interval(env, eval, cfg.episodes, opt, k));
      });
      const std::string tag = std::to_string(seed) + "_" + cfg.method;
      write_text_atomic(fs::path(cfg.out_dir) / ("attribution_" + tag + ".csv"),
                        attribution_csv(report));
      write_text_atomic(fs::path(cfg.out_dir) / ("summary_" + tag + ".csv"), summary_csv(report));
    });
  });
  std::cout << "attributed " << cfg.seeds.size() << " run(s) into " << cfg.out_dir << "\n";
}

void cmd_correlate(const Config& cfg) {
  for_each_seed(cfg.seeds, std::thread::hardware_concurrency(), [&](std::uint64_t seed) {
    with_env(cfg, [&](const auto& env) {
      const int n = env.num_agents();
      std::vector<std::vector<double>> ai(static_cast<std::size_t>(n)),
          sh(static_cast<std::size_t>(n)), truth(static_cast<std::size_t>(n));
      CsvBuilder intervals_csv("interval,agent,importance,shapley,individual");
      run_intervals(env, cfg, seed, [&](int k, const std::vector<Policy>& eval) {
        auto opt = attribution_options(cfg, seed, k);
        opt.keep_steps = false;
        opt.method = Method::Importance;
        const auto imp = attribute_interval(env, eval, cfg.episodes, opt, k);
        opt.method = Method::ExactShapley;
        const auto shap = attribute_interval(env, eval, cfg.episodes, opt, k);
        for (int i = 0; i < n; ++i) {
          const auto a = static_cast<std::size_t>(i);
          ai[a].push_back(imp.mean[a]);
          sh[a].push_back(shap.mean[a]);
          truth[a].push_back(imp.truth_mean[a]);
          intervals_csv.row(k, i, imp.mean[a], shap.mean[a], imp.truth_mean[a]);
        }
      });

      CsvBuilder corr("metric_a,metric_b,agent,r");
      auto corr_rows = [&](const std::string& na, const auto& a, const std::string& nb,
                           const auto& b) {
        for (int i = 0; i < n; ++i) {
          const auto k = static_cast<std::size_t>(i);
          if (&a == &b) {  // diagonal of the correlation matrix
            corr.row(na, nb, i, 1.0);
            continue;
          }
          try {
            corr.row(na, nb, i, pearson({a[k], b[k]}));
          } catch (const DegenerateSeries&) {
            corr.row(na, nb, i, "nan");
          }
        }
      };
      corr_rows("importance", ai, "importance", ai);
      corr_rows("shapley", sh, "shapley", sh);
      corr_rows("individual", truth, "individual", truth);
      corr_rows("importance", ai, "shapley", sh);
      corr_rows("importance", ai, "individual", truth);
      corr_rows("shapley", sh, "individual", truth);

      CsvBuilder agree("pair,agent,rate");
      auto agree_rows = [&](const std::string& pair_name, const auto& metric, const auto& gt) {
        const std::size_t intervals = metric[0].size();
        std::vector<std::size_t> per_agent(static_cast<std::size_t>(n), 0);
        std::size_t team = 0;
        std::vector<double> m(static_cast<std::size_t>(n)), t(static_cast<std::size_t>(n));
        for (std::size_t k = 0; k < intervals; ++k) {
          for (int i = 0; i < n; ++i) {
            m[static_cast<std::size_t>(i)] = metric[static_cast<std::size_t>(i)][k];
            t[static_cast<std::size_t>(i)] = gt[static_cast<std::size_t>(i)][k];
          }
          const auto rm = tie_aware_ranks(m, cfg.tie_epsilon);
          const auto rt = tie_aware_ranks(t, cfg.tie_epsilon);
          if (rm == rt) ++team;
          for (int i = 0; i < n; ++i)
            if (rm[static_cast<std::size_t>(i)] == rt[static_cast<std::size_t>(i)])
              ++per_agent[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < n; ++i)
          agree.row(pair_name, std::to_string(i),
                    static_cast<double>(per_agent[static_cast<std::size_t>(i)]) /
                        static_cast<double>(intervals));
        agree.row(pair_name, "team", static_cast<double>(team) / static_cast<double>(intervals));
      };
      agree_rows("importance_vs_individual", ai, truth);
      agree_rows("shapley_vs_individual", sh, truth);
      agree_rows("importance_vs_shapley", ai, sh);

      const std::string tag = std::to_string(seed);
      write_text_atomic(fs::path(cfg.out_dir) / ("correlation_" + tag + ".csv"), corr.text());
      write_text_atomic(fs::path(cfg.out_dir) / ("agreement_" + tag + ".csv"), agree.text());
      write_text_atomic(fs::path(cfg.out_dir) / ("intervals_" + tag + ".csv"),
                        intervals_csv.text());
    });
  });
  std::cout << "correlated " << cfg.seeds.size() << " run(s) into " << cfg.out_dir << "\n";
}

void cmd_bench(const Config& cfg) {
  BenchOptions opt;
  opt.reps = cfg.bench_reps;
  opt.steps_per_rep = cfg.bench_steps;
  opt.shapley_cap = cfg.shapley_cap;
  opt.workers = cfg.bench_parallel ? cfg.workers : 1;
  opt.seed = cfg.seeds.front();

  std::vector<std::string> scenarios;
  if (cfg.bench_scenarios.empty()) scenarios = lbf::scalability_family();
  else scenarios = split(cfg.bench_scenarios, ',');

  std::vector<BenchMethod> methods;
  for (const auto& m : split(cfg.bench_methods, ',')) {
    if (m == "baseline") methods.push_back(BenchMethod::Baseline);
    else if (m == "importance") methods.push_back(BenchMethod::Importance);
    else if (m == "shapley") methods.push_back(BenchMethod::ExactShapley);
    else throw ConfigError("unknown bench method: " + m);
  }

  const auto results = run_scaling(scenarios, methods, opt);
  write_text_atomic(fs::path(cfg.out_dir) / "bench.csv", bench_csv(results));
  for (const auto& r : results) {
    std::cout << r.scenario << " " << to_string(r.method) << ": ";
    if (r.skipped) std::cout << "skipped (above cap)\n";
    else
      std::cout << format_double(r.mean_s_per_step) << " s/step, " << r.evals_per_step
                << " evals/step\n";
  }
}

// Merge per-seed attribution summaries (and learning curves when present)
// into cross-run aggregates.
void cmd_report(const Config& cfg) {
  const fs::path dir(cfg.out_dir);
  if (!fs::exists(dir)) throw ConfigError("output directory not found: " + dir.string());

  struct Acc {
    std::vector<double> values;
  };
  std::map<std::pair<std::string, std::string>, Acc> by_agent_method;
  std::map<std::string, std::vector<double>> curves_by_scenario;

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const std::string name = path.filename().string();
    if (name.rfind("summary_", 0) == 0) {
      const auto table = read_csv(path);
      std::map<std::pair<std::string, std::string>, std::pair<double, int>> run_means;
      for (const auto& row : table.rows) {
        auto& acc = run_means[{row[1], row[2]}];
        acc.first += parse_double(row[3]);
        acc.second += 1;
      }
      for (const auto& [key, sum_count] : run_means)
        by_agent_method[key].values.push_back(sum_count.first / sum_count.second);
    } else if (name.rfind("curve_", 0) == 0) {
      const auto table = read_csv(path);
      if (table.rows.empty()) continue;
      const std::string scenario = table.rows.front()[0];
      const std::size_t tail = std::min<std::size_t>(100, table.rows.size());
      double sum = 0.0;
      for (std::size_t i = table.rows.size() - tail; i < table.rows.size(); ++i)
        sum += parse_double(table.rows[i][3]);
      curves_by_scenario[scenario].push_back(sum / static_cast<double>(tail));
    }
  }

  CsvBuilder report("agent,method,runs,mean,std");
  for (const auto& [key, acc] : by_agent_method) {
    const double mean = mean_of(acc.values);
    double var = 0.0;
    for (double v : acc.values) var += (v - mean) * (v - mean);
    const double sd =
        acc.values.size() > 1 ? std::sqrt(var / static_cast<double>(acc.values.size() - 1)) : 0.0;
    report.row(key.first, key.second, static_cast<int>(acc.values.size()), mean, sd);
  }
  write_text_atomic(dir / "report.csv", report.text());

  if (!curves_by_scenario.empty()) {
    // LBF returns are in [0,1] by construction; warehouse scores are scaled
    // by the empirical max across the compared runs. Bounds are recorded.
    RunMatrix matrix;
    double norm = 1.0;
    for (auto& [scenario, scores] : curves_by_scenario)
      if (is_warehouse(scenario))
        for (double s : scores) norm = std::max(norm, s);
    CsvBuilder bounds("task,normalization_bound");
    for (auto& [scenario, scores] : curves_by_scenario) {
      matrix.tasks.push_back(scenario);
      auto normalized = scores;
      if (is_warehouse(scenario))
        for (auto& s : normalized) s /= norm;
      for (auto& s : normalized) s = std::clamp(s, 0.0, 1.0);
      matrix.scores.push_back(std::move(normalized));
      bounds.row(scenario, is_warehouse(scenario) ? norm : 1.0);
    }
    write_text_atomic(dir / "normalization.csv", bounds.text());
    const auto agg = aggregate(matrix, cfg.seeds.front());
    CsvBuilder stats("statistic,value,ci_lo,ci_hi");
    stats.row("median", agg.median.value, agg.median.ci_lo, agg.median.ci_hi);
    stats.row("iqm", agg.iqm.value, agg.iqm.ci_lo, agg.iqm.ci_hi);
    stats.row("mean", agg.mean.value, agg.mean.ci_lo, agg.mean.ci_hi);
    stats.row("optimality_gap", agg.optimality_gap.value, agg.optimality_gap.ci_lo,
              agg.optimality_gap.ci_hi);
    write_text_atomic(dir / "aggregates.csv", stats.text());

    std::vector<double> taus;
    for (int i = 0; i <= 100; ++i) taus.push_back(i / 100.0);
    CsvBuilder profile("tau,fraction");
    for (const auto& [tau, frac] : performance_profile(matrix, taus)) profile.row(tau, frac);
    write_text_atomic(dir / "profile.csv", profile.text());
  }
  std::cout << "report written to " << (dir / "report.csv").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"credit: per-agent contribution attribution for cooperative gridworlds"};
  app.require_subcommand(1);

  Config cfg;
  std::string config_path;
  std::string seed_list;
  struct Sub {
    CLI::App* cmd;
    void (*run)(const Config&);
  };
  std::vector<Sub> subs;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "configuration file (key = value lines)");
    cmd->add_option("--seed", seed_list, "root seed, or comma-separated seed list");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--scenario", cfg.scenario, "scenario name (Foraging-... or rware-...)");
    cmd->add_option("--method", cfg.method, "importance | shapley | mc-shapley");
    cmd->add_option("--proxy", cfg.proxy, "removal proxy for mc-shapley: noop | random | copy");
    cmd->add_option("--episodes", cfg.episodes, "evaluation episodes per interval");
    cmd->add_option("--intervals", cfg.intervals, "number of evaluation intervals");
    cmd->add_option("--policy", cfg.policy, "random | greedy | noop | iql | q:<path>");
    cmd->add_option("--reward-rule", cfg.reward_rule, "proportional | paper_literal");
    cmd->add_option("--tie-epsilon", cfg.tie_epsilon, "rank tie tolerance");
    cmd->add_option("--mc-samples", cfg.mc_samples, "MC-Shapley samples per step");
    cmd->add_option("--workers", cfg.workers, "parallel counterfactual workers");
    cmd->add_option("--shapley-cap", cfg.shapley_cap, "max agents for exact Shapley");
    cmd->add_option("--train-episodes", cfg.train_episodes, "IQL training episodes");
    cmd->add_option("--alpha", cfg.alpha, "IQL learning rate");
    cmd->add_option("--gamma", cfg.gamma, "IQL discount");
    cmd->add_option("--epsilon-start", cfg.epsilon_start, "exploration start");
    cmd->add_option("--epsilon-end", cfg.epsilon_end, "exploration end");
    cmd->add_option("--anneal-episodes", cfg.anneal_episodes, "epsilon anneal horizon");
    cmd->add_option("--bench-reps", cfg.bench_reps, "bench repetitions");
    cmd->add_option("--bench-steps", cfg.bench_steps, "bench steps per repetition");
    cmd->add_flag("--bench-parallel", cfg.bench_parallel, "use the counterfactual worker pool");
    cmd->add_option("--bench-scenarios", cfg.bench_scenarios,
                    "comma-separated scenarios (default: scalability family)");
    cmd->add_option("--bench-methods", cfg.bench_methods, "comma-separated bench methods");
  };

  subs.push_back({app.add_subcommand("simulate", "roll out episodes and write trace_v1 files"),
                  &cmd_simulate});
  subs.push_back({app.add_subcommand("train", "train tabular IQL and save policy_v1 files"),
                  &cmd_train});
  subs.push_back({app.add_subcommand("attribute", "per-step attribution CSVs"), &cmd_attribute});
  subs.push_back({app.add_subcommand("correlate", "correlation and ranking-agreement CSVs"),
                  &cmd_correlate});
  subs.push_back({app.add_subcommand("bench", "scaling benchmark CSV"), &cmd_bench});
  subs.push_back({app.add_subcommand("report", "merge per-run CSVs into a summary"), &cmd_report});
  for (auto& sub : subs) add_common(sub.cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;  // --help exits 0, flag errors exit 2
  }

  try {
    // precedence: defaults, then config file, then explicit CLI flags
    if (!config_path.empty()) {
      // Start from file values, then re-apply every field whose CLI flag was
      // actually passed (CLI11 already stored those into cfg).
      Config merged;
      apply_config_file(merged, config_path);
      for (const auto& sub : subs) {
        if (!sub.cmd->parsed()) continue;
        auto seen = [&](const std::string& flag) { return sub.cmd->count(flag) > 0; };
        if (seen("--out")) merged.out_dir = cfg.out_dir;
        if (seen("--scenario")) merged.scenario = cfg.scenario;
        if (seen("--method")) merged.method = cfg.method;
        if (seen("--proxy")) merged.proxy = cfg.proxy;
        if (seen("--episodes")) merged.episodes = cfg.episodes;
        if (seen("--intervals")) merged.intervals = cfg.intervals;
        if (seen("--policy")) merged.policy = cfg.policy;
        if (seen("--reward-rule")) merged.reward_rule = cfg.reward_rule;
        if (seen("--tie-epsilon")) merged.tie_epsilon = cfg.tie_epsilon;
        if (seen("--mc-samples")) merged.mc_samples = cfg.mc_samples;
        if (seen("--workers")) merged.workers = cfg.workers;
        if (seen("--shapley-cap")) merged.shapley_cap = cfg.shapley_cap;
        if (seen("--train-episodes")) merged.train_episodes = cfg.train_episodes;
        if (seen("--alpha")) merged.alpha = cfg.alpha;
        if (seen("--gamma")) merged.gamma = cfg.gamma;
        if (seen("--epsilon-start")) merged.epsilon_start = cfg.epsilon_start;
        if (seen("--epsilon-end")) merged.epsilon_end = cfg.epsilon_end;
        if (seen("--anneal-episodes")) merged.anneal_episodes = cfg.anneal_episodes;
        if (seen("--bench-reps")) merged.bench_reps = cfg.bench_reps;
        if (seen("--bench-steps")) merged.bench_steps = cfg.bench_steps;
        if (seen("--bench-parallel")) merged.bench_parallel = cfg.bench_parallel;
        if (seen("--bench-scenarios")) merged.bench_scenarios = cfg.bench_scenarios;
        if (seen("--bench-methods")) merged.bench_methods = cfg.bench_methods;
      }
      cfg = merged;
    }
    if (!seed_list.empty()) cfg.seeds = parse_seed_list(seed_list);

    // validate scenario and method names up front so bad configs exit 2
    if (is_warehouse(cfg.scenario)) warehouse::parse_warehouse_scenario(cfg.scenario);
    else lbf::parse_lbf_scenario(cfg.scenario);
    parse_method(cfg.method);
    parse_proxy(cfg.proxy);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    for (const auto& sub : subs)
      if (sub.cmd->parsed()) sub.run(cfg);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
