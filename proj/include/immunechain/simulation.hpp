#pragma once

// Exact (Gillespie) simulation of the single-column and matrix chains.
//
// Holding times are drawn from the total-rate exponential; for the matrix
// chain the event class (row / column / entry) is drawn by aggregate rate
// and the index uniformly, since rates within a class are equal.

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace immunechain {

/// FirstFullColumn and ColumnReachesM are the same predicate for both
/// models: some column consists only of ones (k == M for a single column).
enum class StopCondition { FirstFullColumn, ColumnReachesM, TimeHorizon };

struct SimulationConfig {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;
  double horizon = std::numeric_limits<double>::infinity();
  StopCondition stop = StopCondition::FirstFullColumn;

  bool record_events = false;     // keep every event (memory grows with run length)
  bool record_series = false;     // keep (time, observable) at every change
  bool record_occupation = false; // time spent at each observable value
  std::vector<double> sample_times{};  // ascending; observable sampled at these times
  std::uint64_t max_events = 0;      // 0 = unlimited
};

struct ColumnJump {
  double time;
  int from;
  int to;
};

/**
 * Output of one run. The observable is k for the single-column chain and
 * the number of all-ones columns for the matrix chain.
 */
template <class Event, class State>
struct Trajectory {
  std::vector<Event> events{};
  std::optional<double> hit_time{};  // first time the stop predicate holds
  std::vector<std::pair<double, int>> series{};
  std::vector<int> samples{};      // one per sample time <= end_time
  std::vector<double> occupation{};  // indexed by observable value
  double end_time = 0.0;
  std::uint64_t event_count = 0;
  State final_state;
};

using ColumnTrajectory = Trajectory<ColumnJump, ColumnState>;
using MatrixTrajectory = Trajectory<MatrixEvent, MatrixState>;

namespace detail {

inline void validate(const SimulationConfig& config) {
  if (!(config.horizon > 0.0)) throw invalid_input("horizon must be positive");
  if (config.stop == StopCondition::TimeHorizon && !(config.horizon < std::numeric_limits<double>::infinity()))
    throw invalid_input("TimeHorizon stop needs a finite horizon");
  for (std::size_t i = 1; i < config.sample_times.size(); ++i)
    if (config.sample_times[i] < config.sample_times[i - 1]) throw invalid_input("sample_times must be ascending");
}

/// Shared bookkeeping of observable samples, series and occupation times.
class Observer {
 public:
  Observer(const SimulationConfig& config, int max_value, int initial)
      : config_(config), value_(initial) {
    if (config.record_occupation) occupation_.assign(static_cast<std::size_t>(max_value) + 1, 0.0);
    if (config.record_series) series_.emplace_back(0.0, initial);
  }

  /// The observable held `value_` on [t_from, t_to).
  void hold(double t_from, double t_to) {
    const auto& times = config_.sample_times;
    while (next_sample_ < times.size() && times[next_sample_] < t_to) {
      if (times[next_sample_] >= t_from) samples_.push_back(value_);
      ++next_sample_;
    }
    if (!occupation_.empty()) occupation_[value_] += t_to - t_from;
  }

  void change(double t, int value) {
    if (value != value_ && config_.record_series) series_.emplace_back(t, value);
    value_ = value;
  }

  /// Samples exactly at the end time take the final value.
  template <class Traj>
  void finish(double t_end, Traj& out) {
    const auto& times = config_.sample_times;
    while (next_sample_ < times.size() && times[next_sample_] <= t_end) {
      samples_.push_back(value_);
      ++next_sample_;
    }
    out.samples = std::move(samples_);
    out.series = std::move(series_);
    out.occupation = std::move(occupation_);
    out.end_time = t_end;
  }

 private:
  const SimulationConfig& config_;
  int value_;
  std::size_t next_sample_ = 0;
  std::vector<int> samples_;
  std::vector<std::pair<double, int>> series_;
  std::vector<double> occupation_;
};

inline bool stops_on_hit(StopCondition s) { return s != StopCondition::TimeHorizon; }

}  // namespace detail

inline ColumnTrajectory simulate_single_column(const SingleColumnParams& params, const SimulationConfig& config,
                                               ColumnState start = {}) {
  detail::validate(config);
  check_state(start, params);
  const int M = params.M();
  const double up_scale = params.alpha() * params.q();

  Rng rng(config.master_seed, config.replicate_index);
  ColumnTrajectory out{.final_state = start};
  detail::Observer obs(config, M, start.k);

  int k = start.k;
  double t = 0.0;
  if (k == M) {
    out.hit_time = 0.0;
    if (detail::stops_on_hit(config.stop)) {
      obs.finish(0.0, out);
      return out;
    }
  }

  for (;;) {
    const double up = k < M ? up_scale * (1.0 - static_cast<double>(k) / M) : 0.0;
    const double reset = k > 0 ? params.p() : 0.0;
    const double total = up + reset;
    const double dt = rng.exponential(total);
    if (t + dt > config.horizon) {
      obs.hold(t, config.horizon);
      t = config.horizon;
      break;
    }
    obs.hold(t, t + dt);
    t += dt;

    const int next = (reset == 0.0 || rng.uniform() * total < up) ? k + 1 : 0;
    if (config.record_events) out.events.push_back({t, k, next});
    k = next;
    ++out.event_count;
    obs.change(t, k);

    if (k == M && !out.hit_time) {
      out.hit_time = t;
      if (detail::stops_on_hit(config.stop)) break;
    }
    if (config.max_events != 0 && out.event_count >= config.max_events) break;
  }
  out.final_state = ColumnState{k};
  obs.finish(t, out);
  return out;
}

inline MatrixTrajectory simulate_matrix(const MatrixParams& params, const SimulationConfig& config,
                                        MatrixState start) {
  detail::validate(config);
  if (start.rows() != params.M() || start.cols() != params.N())
    throw invalid_input("start matrix dimensions do not match M x N");
  const int M = params.M();
  const int N = params.N();
  const double row_rate = params.q();
  const double col_rate = params.p();
  const double total = params.total_rate();
  const bool pai = params.pai_on();
  const auto entries = static_cast<std::uint64_t>(M) * static_cast<std::uint64_t>(N);

  Rng rng(config.master_seed, config.replicate_index);
  MatrixTrajectory out{.final_state = std::move(start)};
  MatrixState& state = out.final_state;
  detail::Observer obs(config, N, state.full_columns());

  double t = 0.0;
  if (state.full_columns() > 0) {
    out.hit_time = 0.0;
    if (detail::stops_on_hit(config.stop)) {
      obs.finish(0.0, out);
      return out;
    }
  }

  for (;;) {
    const double dt = rng.exponential(total);
    if (t + dt > config.horizon) {
      obs.hold(t, config.horizon);
      t = config.horizon;
      break;
    }
    obs.hold(t, t + dt);
    t += dt;

    const double u = rng.uniform() * total;
    MatrixEvent event;
    if (u < row_rate) {
      event = MatrixEvent::row_set(static_cast<int>(rng.index(M)), t);
    } else if (!pai || u < row_rate + col_rate) {
      event = MatrixEvent::column_zero(static_cast<int>(rng.index(N)), t);
    } else {
      const auto e = rng.index(entries);
      event = MatrixEvent::entry_set(static_cast<int>(e / N), static_cast<int>(e % N), t);
    }
    state.apply(event);
    if (config.record_events) out.events.push_back(event);
    ++out.event_count;
    obs.change(t, state.full_columns());

    if (state.full_columns() > 0 && !out.hit_time) {
      out.hit_time = t;
      if (detail::stops_on_hit(config.stop)) break;
    }
    if (config.max_events != 0 && out.event_count >= config.max_events) break;
  }
  obs.finish(t, out);
  return out;
}

inline MatrixTrajectory simulate_matrix(const MatrixParams& params, const SimulationConfig& config) {
  return simulate_matrix(params, config, MatrixState(params.M(), params.N()));
}

/**
 * First-hit times of `n_replicates` independent runs started from the given
 * state (k = 0, resp. the zero matrix, by default). Replicate r uses the
 * stream (master_seed, r). With a finite horizon, runs that do not hit
 * report +infinity.
 */
inline std::vector<double> hitting_time_batch(const SingleColumnParams& params, std::size_t n_replicates,
                                              std::uint64_t master_seed, unsigned threads = 0,
                                              ColumnState start = {},
                                              double horizon = std::numeric_limits<double>::infinity()) {
  if (n_replicates < 1) throw invalid_input("n_replicates must be >= 1");
  return parallel_map(n_replicates, threads, [&](std::size_t r) {
    SimulationConfig config{.master_seed = master_seed, .replicate_index = r, .horizon = horizon};
    auto traj = simulate_single_column(params, config, start);
    return traj.hit_time.value_or(std::numeric_limits<double>::infinity());
  });
}

inline std::vector<double> hitting_time_batch(const MatrixParams& params, std::size_t n_replicates,
                                              std::uint64_t master_seed, unsigned threads = 0,
                                              double horizon = std::numeric_limits<double>::infinity()) {
  if (n_replicates < 1) throw invalid_input("n_replicates must be >= 1");
  return parallel_map(n_replicates, threads, [&](std::size_t r) {
    SimulationConfig config{.master_seed = master_seed, .replicate_index = r, .horizon = horizon};
    auto traj = simulate_matrix(params, config);
    return traj.hit_time.value_or(std::numeric_limits<double>::infinity());
  });
}

}  // namespace immunechain
