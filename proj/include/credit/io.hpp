#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "credit/attribution.hpp"
#include "credit/bench.hpp"
#include "credit/text.hpp"

namespace credit {

// --- trace_v1 ---------------------------------------------------------------
// Line-delimited JSON: one header record, then one record per timestep with
// {episode, t, actions, team_reward, individual_rewards, done}.

class TraceBuilder {
 public:
  TraceBuilder(std::string_view scenario, std::uint64_t seed) {
    nlohmann::json header;
    header["schema"] = "trace_v1";
    header["scenario"] = scenario;
    header["seed"] = seed;
    text_ = header.dump() + "\n";
  }

  void add_step(int episode, int t, std::span<const int> actions, double team_reward,
                std::span<const double> individual_rewards, bool done) {
    nlohmann::json rec;
    rec["episode"] = episode;
    rec["t"] = t;
    rec["actions"] = std::vector<int>(actions.begin(), actions.end());
    rec["team_reward"] = team_reward;
    rec["individual_rewards"] =
        std::vector<double>(individual_rewards.begin(), individual_rewards.end());
    rec["done"] = done;
    text_ += rec.dump() + "\n";
  }

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

// --- CSV --------------------------------------------------------------------

class CsvBuilder {
 public:
  explicit CsvBuilder(std::string_view header) { text_ = std::string(header) + "\n"; }

  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((text_ += (first ? "" : ","), text_ += field_to_string(fields), first = false), ...);
    text_ += "\n";
  }

  const std::string& text() const { return text_; }

 private:
  static std::string field_to_string(const std::string& s) { return s; }
  static std::string field_to_string(const char* s) { return s; }
  static std::string field_to_string(double v) { return format_double(v); }
  static std::string field_to_string(int v) { return std::to_string(v); }
  static std::string field_to_string(std::int64_t v) { return std::to_string(v); }
  static std::string field_to_string(std::uint64_t v) { return std::to_string(v); }
  static std::string field_to_string(bool v) { return v ? "true" : "false"; }

  std::string text_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  CsvTable table;
  const std::string text = read_text(path);
  bool first = true;
  for (const auto& line : split(text, '\n')) {
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

// Per-step attribution rows: {interval, t, agent, method, value}.
inline std::string attribution_csv(const AttributionReport& report) {
  CsvBuilder csv("interval,t,agent,method,value");
  for (const auto& rec : report.intervals)
    for (const auto& step : rec.step_values)
      for (int agent = 0; agent < report.n_agents; ++agent)
        csv.row(rec.interval, step.t, agent, to_string(step.method),
                step.values[static_cast<std::size_t>(agent)]);
  return csv.text();
}

// Interval summary rows: {interval, agent, method, mean, variance_across_team}.
inline std::string summary_csv(const AttributionReport& report) {
  CsvBuilder csv("interval,agent,method,mean,variance_across_team");
  for (const auto& rec : report.intervals)
    for (int agent = 0; agent < report.n_agents; ++agent)
      csv.row(rec.interval, agent, to_string(report.method),
              rec.mean[static_cast<std::size_t>(agent)], rec.team_variance);
  return csv.text();
}

inline std::string bench_csv(std::span<const BenchResult> results) {
  CsvBuilder csv("n_agents,method,mean_s_per_step,std_s_per_step,evals_per_step,parallel");
  for (const auto& r : results) {
    if (r.skipped) {
      csv.row(r.n_agents, to_string(r.method), "skipped", "skipped", "skipped",
              r.parallel ? "true" : "false");
    } else {
      csv.row(r.n_agents, to_string(r.method), r.mean_s_per_step, r.std_s_per_step,
              r.evals_per_step, r.parallel);
    }
  }
  return csv.text();
}

}  // namespace credit
