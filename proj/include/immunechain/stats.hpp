#pragma once

// Estimators and comparisons over replicate outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "errors.hpp"
#include "simulation.hpp"

namespace immunechain {

struct EstimateWithCI {
  double point = 0.0;
  double half_width = 0.0;
  double level = 0.95;
  std::size_t n = 0;
  std::uint64_t master_seed = 0;
  double std_error = 0.0;

  double lower() const { return point - half_width; }
  double upper() const { return point + half_width; }
  bool covers(double x) const { return lower() <= x && x <= upper(); }
};

/// Two-sided normal quantile z with P(|Z| <= z) = level.
inline double normal_quantile(double level) {
  boost::math::normal_distribution<double> z;
  return boost::math::quantile(z, 0.5 + level / 2.0);
}

/// Sample mean with a normal-approximation confidence interval.
inline EstimateWithCI estimate_mean(std::span<const double> samples, double level = 0.95,
                                    std::uint64_t master_seed = 0) {
  if (samples.size() < 2) throw invalid_input("estimate_mean needs at least two samples");
  if (!(level > 0.0 && level < 1.0)) throw invalid_input("level must lie in (0,1)");
  const auto n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / (n - 1.0) / n);
  return {mean, normal_quantile(level) * se, level, samples.size(), master_seed, se};
}

inline EstimateWithCI estimate_mean(std::span<const int> samples, double level = 0.95, std::uint64_t master_seed = 0) {
  std::vector<double> d(samples.begin(), samples.end());
  return estimate_mean(std::span<const double>(d), level, master_seed);
}

inline double sample_sd(std::span<const double> samples) {
  if (samples.size() < 2) throw invalid_input("sample_sd needs at least two samples");
  const auto n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

/// Total-variation distance 1/2 sum |a - b| over a shared support.
inline double empirical_tv(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw invalid_input("empirical_tv: supports differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

template <class Count>
std::vector<double> normalize_counts(std::span<const Count> counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (!(total > 0.0)) throw invalid_input("normalize_counts: empty histogram");
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / total;
  return out;
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/**
 * Pearson goodness-of-fit of observed counts against expected
 * probabilities. Adjacent cells are pooled (left to right) until each
 * pooled cell expects at least `min_expected` observations.
 */
inline ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> expected,
                                      double min_expected = 5.0) {
  if (observed.size() != expected.size() || observed.empty()) throw invalid_input("chi_square_gof: size mismatch");
  double n = 0.0;
  for (auto o : observed) n += static_cast<double>(o);

  std::vector<double> obs_pool, exp_pool;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += static_cast<double>(observed[i]);
    e_acc += expected[i] * n;
    if (e_acc >= min_expected) {
      obs_pool.push_back(o_acc);
      exp_pool.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (exp_pool.empty()) {
      obs_pool.push_back(o_acc);
      exp_pool.push_back(e_acc);
    } else {
      obs_pool.back() += o_acc;
      exp_pool.back() += e_acc;
    }
  }

  ChiSquareResult r;
  for (std::size_t i = 0; i < obs_pool.size(); ++i) {
    const double d = obs_pool[i] - exp_pool[i];
    r.statistic += d * d / exp_pool[i];
  }
  r.dof = static_cast<int>(obs_pool.size()) - 1;
  if (r.dof >= 1) {
    boost::math::chi_squared_distribution<double> dist(r.dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  }
  return r;
}

/// Linear-interpolation quantile (type 7) of unsorted data.
inline double quantile(std::vector<double> data, double prob) {
  if (data.empty()) throw invalid_input("quantile of empty data");
  if (!(prob >= 0.0 && prob <= 1.0)) throw invalid_input("quantile probability outside [0,1]");
  std::sort(data.begin(), data.end());
  const double h = (data.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, data.size() - 1);
  return data[lo] + (h - lo) * (data[hi] - data[lo]);
}

/**
 * Spread of first-full-column times across replicates. The window is the
 * empirical [5%, 95%] quantile range of tau; runs without a transition are
 * excluded and counted in `censored`.
 */
struct TransitionWindow {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double median = 0.0;
  double relative_width = 0.0;  // (t_hi - t_lo) / median
  std::size_t used = 0;
  std::size_t censored = 0;
  std::optional<double> rise_median;  // median time the count first reaches the target fraction
};

inline TransitionWindow detect_transition(std::span<const std::optional<double>> hit_times) {
  std::vector<double> taus;
  TransitionWindow w;
  for (const auto& t : hit_times) {
    if (t && std::isfinite(*t))
      taus.push_back(*t);
    else
      ++w.censored;
  }
  w.used = taus.size();
  if (taus.empty()) throw diagnostic_error("no transition observed in any replicate");
  w.t_lo = quantile(taus, 0.05);
  w.t_hi = quantile(taus, 0.95);
  w.median = quantile(taus, 0.5);
  w.relative_width = w.median > 0.0 ? (w.t_hi - w.t_lo) / w.median : std::numeric_limits<double>::infinity();
  return w;
}

/**
 * Same window from matrix trajectories. When the trajectories carry a
 * change-point series and `threshold_fraction` > 0, also reports the median
 * time the all-ones count first reaches threshold_fraction * steady_count.
 */
inline TransitionWindow detect_transition(std::span<const MatrixTrajectory> runs, double threshold_fraction = 0.0,
                                          double steady_count = 0.0) {
  std::vector<std::optional<double>> hits;
  hits.reserve(runs.size());
  for (const auto& r : runs) hits.push_back(r.hit_time);
  auto w = detect_transition(std::span<const std::optional<double>>(hits));

  if (threshold_fraction > 0.0) {
    const double target = std::max(1.0, std::ceil(threshold_fraction * steady_count));
    std::vector<double> rises;
    for (const auto& r : runs)
      for (const auto& [t, count] : r.series)
        if (count >= target) {
          rises.push_back(t);
          break;
        }
    if (!rises.empty()) w.rise_median = quantile(rises, 0.5);
  }
  return w;
}

}  // namespace immunechain
