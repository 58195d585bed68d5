#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "credit/attribution.hpp"
#include "credit/errors.hpp"
#include "credit/policy.hpp"
#include "credit/rng.hpp"

namespace credit {

struct SeriesPair {
  std::vector<double> x, y;
};

inline double pearson(const SeriesPair& pair) {
  const std::size_t n = pair.x.size();
  if (n != pair.y.size() || n < 2)
    throw std::invalid_argument("pearson: series must share length >= 2");
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += pair.x[i];
    my += pair.y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double dx = pair.x[i] - mx;
    const long double dy = pair.y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw DegenerateSeries("zero-variance series");
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Tie-aware dense ranks, highest value first. Values whose adjacent gap in
// the sorted order is <= eps fall into one tie group.
inline std::vector<int> tie_aware_ranks(std::span<const double> values, double eps) {
  const int n = static_cast<int>(values.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)]; });
  std::vector<int> ranks(static_cast<std::size_t>(n), 0);
  int group = 0;
  for (int k = 0; k < n; ++k) {
    if (k > 0 && values[static_cast<std::size_t>(order[static_cast<std::size_t>(k - 1)])] -
                         values[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] > eps)
      ++group;
    ranks[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = group;
  }
  return ranks;
}

// Fraction of intervals on which the metric's tie-aware agent ranking is
// identical to the ranking induced by the ground truth. Series are indexed
// [agent][interval].
inline double rank_agreement_rate(std::span<const std::vector<double>> metric,
                                  std::span<const std::vector<double>> truth, double eps = 1e-9) {
  const std::size_t agents = metric.size();
  if (agents == 0 || truth.size() != agents) return 0.0;
  const std::size_t intervals = metric[0].size();
  std::size_t matches = 0;
  std::vector<double> m(agents), t(agents);
  for (std::size_t k = 0; k < intervals; ++k) {
    for (std::size_t a = 0; a < agents; ++a) {
      m[a] = metric[a][k];
      t[a] = truth[a][k];
    }
    if (tie_aware_ranks(m, eps) == tie_aware_ranks(t, eps)) ++matches;
  }
  return intervals == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(intervals);
}

// Normalized episode returns indexed by (task, run).
struct RunMatrix {
  std::vector<std::string> tasks;
  std::vector<std::vector<double>> scores;  // scores[task][run]

  std::vector<double> pooled() const {
    std::vector<double> all;
    for (const auto& task : scores) all.insert(all.end(), task.begin(), task.end());
    return all;
  }
};

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Interquartile mean: drop floor(n/4) lowest and highest scores by count,
// then average what remains.
inline double iqm_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t drop = v.size() / 4;
  const std::size_t kept = v.size() - 2 * drop;
  double sum = 0.0;
  for (std::size_t i = drop; i < drop + kept; ++i) sum += v[i];
  return sum / static_cast<double>(kept);
}

inline double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct AggregateStat {
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct AggregateResult {
  AggregateStat median, iqm, mean, optimality_gap;
};

namespace detail {

inline double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

// Point statistics over the pooled normalized scores with stratified
// bootstrap confidence intervals (runs resampled within each task).
inline AggregateResult aggregate(const RunMatrix& matrix, std::uint64_t seed = 0,
                                 int resamples = 2000, double confidence = 0.95) {
  const auto pooled = matrix.pooled();
  AggregateResult result;
  result.median.value = median_of(pooled);
  result.iqm.value = iqm_of(pooled);
  result.mean.value = mean_of(pooled);
  result.optimality_gap.value = 1.0 - result.mean.value;

  std::vector<double> meds, iqms, means;
  meds.reserve(static_cast<std::size_t>(resamples));
  iqms.reserve(static_cast<std::size_t>(resamples));
  means.reserve(static_cast<std::size_t>(resamples));
  Rng rng(derive_seed(seed, "bootstrap"));
  std::vector<double> sample;
  for (int b = 0; b < resamples; ++b) {
    sample.clear();
    for (const auto& runs : matrix.scores) {
      const int n = static_cast<int>(runs.size());
      for (int r = 0; r < n; ++r) sample.push_back(runs[static_cast<std::size_t>(rng.next_int(n))]);
    }
    meds.push_back(median_of(sample));
    iqms.push_back(iqm_of(sample));
    means.push_back(mean_of(sample));
  }
  const double alpha = 1.0 - confidence;
  auto ci = [&](std::vector<double>& dist, AggregateStat& stat, bool complement) {
    std::sort(dist.begin(), dist.end());
    double lo = detail::percentile_sorted(dist, alpha / 2);
    double hi = detail::percentile_sorted(dist, 1.0 - alpha / 2);
    if (complement) {
      const double nlo = 1.0 - hi;
      const double nhi = 1.0 - lo;
      lo = nlo;
      hi = nhi;
    }
    stat.ci_lo = lo;
    stat.ci_hi = hi;
  };
  ci(meds, result.median, false);
  ci(iqms, result.iqm, false);
  ci(means, result.mean, false);
  ci(means, result.optimality_gap, true);
  return result;
}

// For each tau: fraction of (run, task) scores strictly above tau.
inline std::vector<std::pair<double, double>> performance_profile(const RunMatrix& matrix,
                                                                  std::span<const double> taus) {
  const auto pooled = matrix.pooled();
  std::vector<std::pair<double, double>> curve;
  curve.reserve(taus.size());
  for (double tau : taus) {
    const auto above = std::count_if(pooled.begin(), pooled.end(), [&](double s) { return s > tau; });
    curve.emplace_back(tau, pooled.empty() ? 0.0
                                           : static_cast<double>(above) / static_cast<double>(pooled.size()));
  }
  return curve;
}

// Mean over task-paired run pairs of [score_X > score_Y], ties worth 0.5.
inline double probability_of_improvement(const RunMatrix& x, const RunMatrix& y) {
  const std::size_t tasks = std::min(x.scores.size(), y.scores.size());
  double task_sum = 0.0;
  for (std::size_t t = 0; t < tasks; ++t) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (double sx : x.scores[t])
      for (double sy : y.scores[t]) {
        wins += sx > sy ? 1.0 : (sx == sy ? 0.5 : 0.0);
        ++pairs;
      }
    task_sum += pairs ? wins / static_cast<double>(pairs) : 0.5;
  }
  return tasks ? task_sum / static_cast<double>(tasks) : 0.5;
}

// One evaluation interval of a learning curve, with the policy snapshot
// needed to re-evaluate it later.
struct EvalInterval {
  double mean_return = 0.0;
  bool has_snapshot = false;
  std::vector<Policy> snapshot;
};

// Mean return of the best interval's stored policy, re-evaluated with
// `episodes_multiplier` times the per-interval episode count.
template <Environment E>
double absolute_metric(const E& env, std::span<const EvalInterval> curve,
                       int episodes_per_interval, std::uint64_t seed,
                       int episodes_multiplier = 10) {
  if (curve.empty()) throw MissingSnapshot("empty learning curve");
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i].mean_return > curve[best].mean_return) best = i;
  if (!curve[best].has_snapshot)
    throw MissingSnapshot("no stored policy for interval " + std::to_string(best));
  return mean_return(env, curve[best].snapshot, episodes_per_interval * episodes_multiplier,
                     derive_seed(seed, "absolute"), "absolute");
}

// Across-agent population variance of the interval-mean attribution values,
// one entry per interval.
inline std::vector<double> importance_variance(const AttributionReport& report) {
  std::vector<double> out;
  out.reserve(report.intervals.size());
  for (const auto& rec : report.intervals) out.push_back(population_variance(rec.mean));
  return out;
}

}  // namespace credit
