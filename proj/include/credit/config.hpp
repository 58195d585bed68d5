#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "credit/text.hpp"

namespace credit {

// Experiment configuration. Defaults mirror the evaluation protocol
// (32 episodes per interval, 201 intervals); precedence is CLI > file >
// default, applied by the CLI front end.
struct Config {
  std::string scenario = "Foraging-8x8-2p-2f";
  std::string policy = "random";  // random | greedy | q:<path>
  std::vector<std::uint64_t> seeds = {1};
  int episodes = 32;
  int intervals = 201;
  std::string method = "importance";  // importance | shapley | mc-shapley
  std::string proxy = "noop";         // noop | random | copy
  std::string out_dir = "out";
  std::string reward_rule = "proportional";  // proportional | paper_literal
  double tie_epsilon = 1e-9;
  int mc_samples = 200;
  int workers = 1;
  int shapley_cap = 20;
  // training
  int train_episodes = 20000;
  double alpha = 0.3;
  double gamma = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int anneal_episodes = 0;
  // bench
  int bench_reps = 3;
  int bench_steps = 100;
  bool bench_parallel = false;
  std::string bench_scenarios;  // comma-separated; empty = scalability family
  std::string bench_methods = "baseline,importance,shapley";
};

// Line-oriented `key = value` file with optional [section] headers that
// prefix keys as "section.key". '#' starts a comment. Unknown keys fail fast
// when applied.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::string section;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(line_no) + ": unterminated section");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    kv[section.empty() ? key : section + "." + key] = value;
  }
  return kv;
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& value) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split(value, ','))
    if (!part.empty()) seeds.push_back(parse_u64(part));
  if (seeds.empty()) throw std::runtime_error("empty seed list");
  return seeds;
}

inline void apply_config_key(Config& cfg, const std::string& key, const std::string& value) {
  auto to_int = [&](const std::string& v) { return static_cast<int>(parse_u64(v)); };
  if (key == "scenario") cfg.scenario = value;
  else if (key == "policy") cfg.policy = value;
  else if (key == "seed" || key == "seeds") cfg.seeds = parse_seed_list(value);
  else if (key == "episodes") cfg.episodes = to_int(value);
  else if (key == "intervals") cfg.intervals = to_int(value);
  else if (key == "method") cfg.method = value;
  else if (key == "proxy") cfg.proxy = value;
  else if (key == "out") cfg.out_dir = value;
  else if (key == "reward_rule") cfg.reward_rule = value;
  else if (key == "tie_epsilon") cfg.tie_epsilon = parse_double(value);
  else if (key == "mc_samples") cfg.mc_samples = to_int(value);
  else if (key == "workers") cfg.workers = to_int(value);
  else if (key == "shapley_cap") cfg.shapley_cap = to_int(value);
  else if (key == "train.episodes") cfg.train_episodes = to_int(value);
  else if (key == "train.alpha") cfg.alpha = parse_double(value);
  else if (key == "train.gamma") cfg.gamma = parse_double(value);
  else if (key == "train.epsilon_start") cfg.epsilon_start = parse_double(value);
  else if (key == "train.epsilon_end") cfg.epsilon_end = parse_double(value);
  else if (key == "train.anneal_episodes") cfg.anneal_episodes = to_int(value);
  else if (key == "bench.reps") cfg.bench_reps = to_int(value);
  else if (key == "bench.steps") cfg.bench_steps = to_int(value);
  else if (key == "bench.parallel") cfg.bench_parallel = value == "true" || value == "1";
  else if (key == "bench.scenarios") cfg.bench_scenarios = value;
  else if (key == "bench.methods") cfg.bench_methods = value;
  else throw std::runtime_error("unknown config key: " + key);
}

inline void apply_config_file(Config& cfg, const std::string& path) {
  for (const auto& [key, value] : parse_config_text(read_text(path)))
    apply_config_key(cfg, key, value);
}

}  // namespace credit
