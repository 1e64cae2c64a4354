#pragma once

// Experiment configuration and the subcommand runners behind the CLI.
//
// A config is a flat JSON object. Keys:
//   model            "matrix" | "single-column"
//   M, N             dimensions (N also enters the single-column p = pd/N)
//   p, alpha         raw single-column parameters (alpha defaults to 1)
//   p, lambda_m      raw matrix parameters (lambda_m defaults to 0)
//   pd, pm           discrete-model parameters, mapped through
//                    identify_parameters; exclusive with p/alpha/lambda_m.
//                    pm may be a list for figure-data.
//   replicates       replicate / draw count (>= 1)
//   horizon          simulated time span (default depends on the model)
//   seed             master seed
//   start            single-column start state
//   sample_points    grid points on [0, horizon] for time series
//   pm_grid_min, pm_grid_max, pm_grid_points   log-spaced p_m grid
//   small            verify: run the reduced oracle suite
//
// threads, out and format are execution options: accepted in the file but
// never echoed, so outputs do not depend on them.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "analytics.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "reversal.hpp"
#include "simulation.hpp"
#include "stats.hpp"

namespace immunechain::experiment {

using json = nlohmann::ordered_json;

inline constexpr const char* kSummarySchema = "immunechain-summary/1";
inline constexpr const char* kCsvSchema = "immunechain-csv/1";

/// Output path could not be created or written.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Subcommand { Simulate, SampleSteady, Analyze, Verify, FigureData };

inline const char* to_string(Subcommand s) {
  switch (s) {
    case Subcommand::Simulate: return "simulate";
    case Subcommand::SampleSteady: return "sample-steady";
    case Subcommand::Analyze: return "analyze";
    case Subcommand::Verify: return "verify";
    case Subcommand::FigureData: return "figure-data";
  }
  return "?";
}

struct ExperimentConfig {
  std::string model = "matrix";
  int M = 200;
  int N = 100;
  std::optional<double> p;
  std::optional<double> alpha;
  std::optional<double> lambda_m;
  std::optional<double> pd;
  std::vector<double> pm;
  long long replicates = 100;
  std::optional<double> horizon;
  std::uint64_t seed = 1;
  int start = 0;
  int sample_points = 101;
  double pm_grid_min = 1e-4;
  double pm_grid_max = 1e-1;
  int pm_grid_points = 25;
  bool small = false;

  unsigned threads = 0;
  std::string format = "json";
  std::optional<std::string> out;
};

namespace detail {

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw invalid_input("config key '" + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Applies the keys of `j` on top of `cfg`; unknown keys are rejected.
inline void merge_config(ExperimentConfig& cfg, const json& j) {
  if (!j.is_object()) throw invalid_input("config must be a JSON object");
  using detail::get_as;
  for (const auto& [key, v] : j.items()) {
    if (key == "model") cfg.model = get_as<std::string>(v, key);
    else if (key == "M") cfg.M = get_as<int>(v, key);
    else if (key == "N") cfg.N = get_as<int>(v, key);
    else if (key == "p") cfg.p = get_as<double>(v, key);
    else if (key == "alpha") cfg.alpha = get_as<double>(v, key);
    else if (key == "lambda_m") cfg.lambda_m = get_as<double>(v, key);
    else if (key == "pd") cfg.pd = get_as<double>(v, key);
    else if (key == "pm") cfg.pm = v.is_array() ? get_as<std::vector<double>>(v, key) : std::vector{get_as<double>(v, key)};
    else if (key == "replicates") cfg.replicates = get_as<long long>(v, key);
    else if (key == "horizon") cfg.horizon = get_as<double>(v, key);
    else if (key == "seed") cfg.seed = get_as<std::uint64_t>(v, key);
    else if (key == "start") cfg.start = get_as<int>(v, key);
    else if (key == "sample_points") cfg.sample_points = get_as<int>(v, key);
    else if (key == "pm_grid_min") cfg.pm_grid_min = get_as<double>(v, key);
    else if (key == "pm_grid_max") cfg.pm_grid_max = get_as<double>(v, key);
    else if (key == "pm_grid_points") cfg.pm_grid_points = get_as<int>(v, key);
    else if (key == "small") cfg.small = get_as<bool>(v, key);
    else if (key == "threads") cfg.threads = get_as<unsigned>(v, key);
    else if (key == "format") cfg.format = get_as<std::string>(v, key);
    else if (key == "out") cfg.out = get_as<std::string>(v, key);
    else throw invalid_input("unknown config key '" + key + "'");
  }
}

/// Experiment keys only; loading this object reproduces the run.
inline json echo_config(const ExperimentConfig& c) {
  json j;
  j["model"] = c.model;
  j["M"] = c.M;
  j["N"] = c.N;
  if (c.p) j["p"] = *c.p;
  if (c.alpha) j["alpha"] = *c.alpha;
  if (c.lambda_m) j["lambda_m"] = *c.lambda_m;
  if (c.pd) j["pd"] = *c.pd;
  if (!c.pm.empty()) j["pm"] = c.pm.size() == 1 ? json(c.pm.front()) : json(c.pm);
  j["replicates"] = c.replicates;
  if (c.horizon) j["horizon"] = *c.horizon;
  j["seed"] = c.seed;
  j["start"] = c.start;
  j["sample_points"] = c.sample_points;
  j["pm_grid_min"] = c.pm_grid_min;
  j["pm_grid_max"] = c.pm_grid_max;
  j["pm_grid_points"] = c.pm_grid_points;
  j["small"] = c.small;
  return j;
}

inline void validate(const ExperimentConfig& c, Subcommand sub) {
  if (c.model != "matrix" && c.model != "single-column")
    throw invalid_input("model must be 'matrix' or 'single-column'");
  if (c.replicates < 1) throw invalid_input("replicates must be >= 1");
  if (c.sample_points < 2) throw invalid_input("sample_points must be >= 2");
  if (c.format != "json" && c.format != "csv") throw invalid_input("format must be 'json' or 'csv'");
  if (c.horizon && !(*c.horizon > 0.0)) throw invalid_input("horizon must be positive");
  if (c.pd && (c.p || c.alpha || c.lambda_m))
    throw invalid_input("pd/pm are exclusive with p/alpha/lambda_m");
  if (!c.pm.empty() && !c.pd) throw invalid_input("pm requires pd");
  if (c.pm.size() > 1 && sub != Subcommand::FigureData) throw invalid_input("a list of pm values needs figure-data");
  if (!(c.pm_grid_min > 0.0 && c.pm_grid_max > c.pm_grid_min && c.pm_grid_points >= 2))
    throw invalid_input("pm grid needs 0 < pm_grid_min < pm_grid_max and pm_grid_points >= 2");
  if (c.model == "matrix" && c.alpha) throw invalid_input("alpha applies to the single-column model only");
  if (c.model == "single-column" && c.lambda_m) throw invalid_input("lambda_m applies to the matrix model only");
  if (sub != Subcommand::Verify && !c.p && !c.pd) throw invalid_input("one of p or pd is required");
  if ((sub == Subcommand::SampleSteady || sub == Subcommand::FigureData) && c.model != "matrix")
    throw invalid_input(std::string(to_string(sub)) + " needs the matrix model");
}

inline double pm_at(const ExperimentConfig& c, std::size_t i = 0) { return c.pm.empty() ? 0.0 : c.pm.at(i); }

inline SingleColumnParams single_params(const ExperimentConfig& c) {
  if (c.pd) return identify_parameters(*c.pd, c.N, pm_at(c), c.M).single;
  return SingleColumnParams(c.M, c.alpha.value_or(1.0), *c.p);
}

inline MatrixParams matrix_params(const ExperimentConfig& c, std::size_t pm_index = 0) {
  if (c.pd) return identify_parameters(*c.pd, c.N, pm_at(c, pm_index), c.M).matrix;
  return MatrixParams(c.M, c.N, *c.p, c.lambda_m.value_or(0.0));
}

struct Outputs {
  json summary;
  std::vector<std::pair<std::string, std::string>> csv_files;  // (file name, content)
  bool consistent = true;                                       // false -> exit 3
};

namespace detail {

/// Shortest round-trip decimal form; identical bytes on every run.
inline std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline json to_json(const ClosedFormReport& r) {
  return {{"quantity", r.quantity}, {"value", r.value}, {"method", to_string(r.method)}, {"formula_id", r.formula_id}};
}

inline json to_json(const EstimateWithCI& e) {
  return {{"point", e.point},     {"half_width", e.half_width}, {"std_error", e.std_error},
          {"level", e.level},     {"n", e.n},                   {"master_seed", e.master_seed}};
}

inline json reports_json(const std::vector<ClosedFormReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr;
}

inline std::vector<double> grid(double horizon, int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = horizon * i / (points - 1);
  return g;
}

inline json base_summary(Subcommand sub, const ExperimentConfig& c) {
  json s;
  s["schema"] = kSummarySchema;
  s["subcommand"] = to_string(sub);
  s["config"] = echo_config(c);
  return s;
}

inline json params_json(const SingleColumnParams& p) {
  return {{"M", p.M()}, {"alpha", p.alpha()}, {"p", p.p()}, {"q", p.q()}, {"a", p.a()}};
}

inline json params_json(const MatrixParams& p) {
  return {{"M", p.M()},       {"N", p.N()},      {"p", p.p()},       {"q", p.q()},
          {"lambda_m", p.lambda_m()}, {"q_tilde", p.q_tilde()}, {"b", p.b()}, {"b_tilde", p.b_tilde()}};
}

inline json hit_summary(const std::vector<std::optional<double>>& hits, std::uint64_t seed) {
  std::vector<double> taus;
  for (const auto& h : hits)
    if (h) taus.push_back(*h);
  json j;
  j["observed"] = taus.size();
  j["censored"] = hits.size() - taus.size();
  if (taus.size() >= 2) j["mean"] = to_json(estimate_mean(std::span<const double>(taus), 0.95, seed));
  if (!taus.empty()) {
    auto w = detect_transition(std::span<const std::optional<double>>(hits));
    j["quantiles"] = {{"q05", w.t_lo}, {"median", w.median}, {"q95", w.t_hi}, {"relative_width", w.relative_width}};
  }
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline Outputs run_simulate(ExperimentConfig c) {
  validate(c, Subcommand::Simulate);
  Outputs out;
  const auto n = static_cast<std::size_t>(c.replicates);
  std::ostringstream csv;

  if (c.model == "single-column") {
    const auto params = single_params(c);
    const ColumnState start{c.start};
    check_state(start, params);
    if (!c.horizon) c.horizon = 3.0 * hitting_time_mean_exact(params, start) + 1.0;
    const auto times = detail::grid(*c.horizon, c.sample_points);
    auto runs = parallel_map(n, c.threads, [&](std::size_t r) {
      SimulationConfig sc{.master_seed = c.seed, .replicate_index = r, .horizon = *c.horizon,
                          .stop = StopCondition::TimeHorizon, .sample_times = times};
      return simulate_single_column(params, sc, start);
    });

    out.summary = detail::base_summary(Subcommand::Simulate, c);
    out.summary["parameters"] = detail::params_json(params);
    std::vector<std::optional<double>> hits;
    for (const auto& r : runs) hits.push_back(r.hit_time);
    out.summary["hitting_time"] = detail::hit_summary(hits, c.seed);
    auto preds = analyze(params);
    preds.push_back({"hitting_time_mean_from_start", hitting_time_mean_exact(params, start), Method::Exact,
                     "telescoping-product"});
    out.summary["predictions"] = detail::reports_json(preds);

    csv << "# " << kCsvSchema << " series model=single-column\n";
    csv << "time,ones,replicate\n";
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t i = 0; i < runs[r].samples.size(); ++i)
        csv << detail::num(times[i]) << ',' << runs[r].samples[i] << ',' << r << '\n';
  } else {
    const auto params = matrix_params(c);
    if (!c.horizon) c.horizon = 2.0 * transition_time_prediction(params);
    const auto times = detail::grid(*c.horizon, c.sample_points);
    auto runs = parallel_map(n, c.threads, [&](std::size_t r) {
      SimulationConfig sc{.master_seed = c.seed, .replicate_index = r, .horizon = *c.horizon,
                          .stop = StopCondition::TimeHorizon, .sample_times = times};
      auto traj = simulate_matrix(params, sc);
      traj.final_state = MatrixState(1, 1);  // drop the matrix; only observables are kept
      return traj;
    });

    out.summary = detail::base_summary(Subcommand::Simulate, c);
    out.summary["parameters"] = detail::params_json(params);
    std::vector<std::optional<double>> hits;
    std::vector<double> final_counts;
    for (const auto& r : runs) {
      hits.push_back(r.hit_time);
      final_counts.push_back(r.samples.back());
    }
    out.summary["hitting_time"] = detail::hit_summary(hits, c.seed);
    if (n >= 2)
      out.summary["final_allones_count"] = detail::to_json(estimate_mean(std::span<const double>(final_counts), 0.95, c.seed));
    auto preds = analyze(params);
    preds.push_back({"allones_count_at_horizon", allones_count_at_time(params, *c.horizon), Method::Exact,
                     "transient-quadrature"});
    out.summary["predictions"] = detail::reports_json(preds);

    csv << "# " << kCsvSchema << " series model=matrix\n";
    csv << "time,all_ones_count,replicate\n";
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t i = 0; i < runs[r].samples.size(); ++i)
        csv << detail::num(times[i]) << ',' << runs[r].samples[i] << ',' << r << '\n';
  }
  out.summary["config"] = echo_config(c);
  out.csv_files.emplace_back("series.csv", csv.str());
  return out;
}

// ---------------------------------------------------------------------------
// sample-steady
// ---------------------------------------------------------------------------

inline Outputs run_sample_steady(const ExperimentConfig& c) {
  validate(c, Subcommand::SampleSteady);
  const auto params = matrix_params(c);
  const auto n = static_cast<std::size_t>(c.replicates);
  const auto counts = sample_allones_counts(params, n, c.seed, c.threads);

  Outputs out;
  out.summary = detail::base_summary(Subcommand::SampleSteady, c);
  out.summary["parameters"] = detail::params_json(params);
  if (n >= 2) out.summary["allones_count"] = detail::to_json(estimate_mean(std::span<const int>(counts), 0.95, c.seed));
  out.summary["predictions"] = detail::reports_json({steady_allones_count(params, Method::Exact),
                                                     steady_allones_count(params, Method::Asymptotic),
                                                     steady_allones_count_scaled_variant(params)});
  std::ostringstream csv;
  csv << "# " << kCsvSchema << " steady-draws\n";
  csv << "draw,all_ones_count\n";
  for (std::size_t r = 0; r < n; ++r) csv << r << ',' << counts[r] << '\n';
  out.csv_files.emplace_back("steady_draws.csv", csv.str());
  return out;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

inline Outputs run_analyze(const ExperimentConfig& c) {
  validate(c, Subcommand::Analyze);
  Outputs out;
  out.summary = detail::base_summary(Subcommand::Analyze, c);
  std::vector<ClosedFormReport> reports;
  if (c.model == "single-column") {
    const auto params = single_params(c);
    out.summary["parameters"] = detail::params_json(params);
    reports = analyze(params);
    out.summary["invariant_pmf"] = invariant_pmf(params);
  } else {
    const auto params = matrix_params(c);
    out.summary["parameters"] = detail::params_json(params);
    reports = analyze(params);
  }
  out.summary["predictions"] = detail::reports_json(reports);

  std::ostringstream csv;
  csv << "# " << kCsvSchema << " closed-form\n";
  csv << "quantity,value,method,formula_id\n";
  for (const auto& r : reports)
    csv << r.quantity << ',' << detail::num(r.value) << ',' << to_string(r.method) << ',' << r.formula_id << '\n';
  out.csv_files.emplace_back("analysis.csv", csv.str());
  return out;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

inline double rel_err(double got, double want) {
  if (got == want) return 0.0;
  return std::abs(got - want) / std::max(std::abs(want), std::numeric_limits<double>::min());
}

/// Oracle cross-checks of the closed forms and samplers.
inline std::vector<CheckResult> verify_suite(bool small, std::uint64_t seed) {
  std::vector<CheckResult> checks;
  const std::vector<double> alphas{0.5, 1.0, 2.0};
  const std::vector<double> ps{0.1, 0.5, 0.9};
  auto finish = [&](std::string name, double err, double tol) { checks.push_back({std::move(name), err, tol, err <= tol}); };

  {
    double worst = 0.0;
    for (int M = 1; M <= (small ? 4 : 8); ++M)
      for (double al : alphas)
        for (double p : ps) {
          SingleColumnParams sp(M, al, p);
          const auto pi = invariant_pmf(sp);
          const auto ref = oracle::stationary_solve(oracle::single_column_generator(sp));
          for (std::size_t k = 0; k < pi.size(); ++k) worst = std::max(worst, rel_err(pi[k], ref[k]));
        }
    finish("invariant_pmf_vs_stationary_solve", worst, 1e-10);
  }
  {
    double worst_mean = 0.0, worst_var = 0.0;
    for (int M = 1; M <= (small ? 16 : 64); M = M < 8 ? M + 1 : M * 2)
      for (double al : alphas)
        for (double p : ps) {
          SingleColumnParams sp(M, al, p);
          const auto g = oracle::single_column_generator(sp);
          const std::size_t target[] = {static_cast<std::size_t>(M)};
          const auto ref = oracle::hitting_moments(g, target);
          const auto means = hitting_time_means(sp);
          for (int k = 0; k < M; ++k) worst_mean = std::max(worst_mean, rel_err(means[k], ref.mean[k]));
          const double ref_var = ref.second[0] - ref.mean[0] * ref.mean[0];
          worst_var = std::max(worst_var, rel_err(hitting_time_variance_exact(sp), ref_var));
        }
    finish("hitting_time_mean_vs_linear_solve", worst_mean, 1e-9);
    finish("hitting_time_variance_vs_linear_solve", worst_var, 1e-6);
  }
  {
    double worst = 0.0;
    for (int N = 1; N <= (small ? 4 : 5); ++N)
      for (int k = 0; k <= (small ? 8 : 12); ++k)
        worst = std::max(worst, std::abs(coupon_done_by_draws(N, k) - oracle::coupon_enumerate(N, k).value()));
    finish("coupon_draws_vs_enumeration", worst, 1e-12);
  }
  {
    double worst = 0.0;
    for (int M = 1; M <= (small ? 30 : 100); ++M)
      for (double q : {0.3, 0.9})
        for (double al : {0.0, 0.01, 0.5, 2.0}) {
          long double prod = 1.0L;
          for (int i = 0; i < M; ++i) {
            const long double pi = q * (1.0L - static_cast<long double>(i) / M);
            prod *= pi / (pi + al);
          }
          worst = std::max(worst, rel_err(collection_time_laplace(M, q, al), static_cast<double>(prod)));
        }
    finish("laplace_vs_finite_product", worst, 1e-12);
  }
  {
    double worst = 0.0;
    const int max_cells = small ? 6 : 9;
    for (int M = 1; M <= 3; ++M)
      for (int N = 1; N <= 3; ++N) {
        if (M * N > max_cells) continue;
        for (double p : {0.3, 0.5})
          for (double lam : {0.0, 0.4}) {
            MatrixParams mp(M, N, p, lam);
            const auto g = oracle::matrix_generator(mp);
            const auto pi = oracle::stationary_solve(g);
            std::uint64_t col0 = 0;
            for (int i = 0; i < M; ++i) col0 |= std::uint64_t{1} << (i * N);
            double mass = 0.0;
            for (std::size_t s = 0; s < g.size(); ++s)
              if ((g.states[s] & col0) == col0) mass += pi[s];
            worst = std::max(worst, rel_err(steady_allones_probability(mp), mass));
          }
      }
    finish("steady_allones_probability_vs_matrix_oracle", worst, 1e-10);
  }
  {
    std::mt19937_64 gen(seed);
    int mismatches = 0;
    for (int trial = 0; trial < (small ? 200 : 2000); ++trial) {
      const int M = 1 + static_cast<int>(gen() % 6);
      const int N = 1 + static_cast<int>(gen() % 6);
      const int T = 1 + static_cast<int>(gen() % 8);
      MatrixState start(M, N);
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j)
          if (gen() & 1U) start.set_entry(i, j);
      std::vector<std::vector<int>> adds(T), dels(T);
      for (int t = 0; t < T; ++t) {
        for (int i = 0; i < M; ++i)
          if (gen() % 4 == 0) adds[t].push_back(i);
        for (int j = 0; j < N; ++j)
          if (gen() % 4 == 0) dels[t].push_back(j);
      }
      if (!(compose_closed_form(start, adds, dels) == replay_steps(start, adds, dels))) ++mismatches;
    }
    finish("compose_closed_form_vs_replay", mismatches, 0.0);
  }
  {
    MatrixParams mp(2, 1, 0.5, small ? 0.0 : 0.3);
    const auto g = oracle::matrix_generator(mp);
    const auto pi = oracle::stationary_solve(g);
    const auto hist = sample_state_histogram(mp, small ? 40000 : 400000, seed);
    std::vector<double> ref(hist.size(), 0.0);
    for (std::size_t s = 0; s < g.size(); ++s) ref[g.states[s]] = pi[s];
    const auto emp = normalize_counts(std::span<const std::uint64_t>(hist));
    finish("reversal_sampler_tv_vs_oracle", empirical_tv(emp, ref), small ? 0.02 : 0.01);
  }
  return checks;
}

inline Outputs run_verify(const ExperimentConfig& c) {
  validate(c, Subcommand::Verify);
  Outputs out;
  out.summary = detail::base_summary(Subcommand::Verify, c);
  const auto checks = verify_suite(c.small, c.seed);
  json arr = json::array();
  std::ostringstream csv;
  csv << "# " << kCsvSchema << " verify\n";
  csv << "check,max_error,tolerance,passed\n";
  for (const auto& ch : checks) {
    arr.push_back({{"check", ch.name}, {"max_error", ch.max_error}, {"tolerance", ch.tolerance}, {"passed", ch.passed}});
    csv << ch.name << ',' << detail::num(ch.max_error) << ',' << detail::num(ch.tolerance) << ','
        << (ch.passed ? "true" : "false") << '\n';
    out.consistent = out.consistent && ch.passed;
  }
  out.summary["checks"] = arr;
  out.summary["passed"] = out.consistent;
  out.csv_files.emplace_back("verify.csv", csv.str());
  return out;
}

// ---------------------------------------------------------------------------
// figure-data
// ---------------------------------------------------------------------------

/**
 * (a) mean all-ones count against time over the replicates, one series per
 * pm value, with the predicted transition time and steady count as
 * constant columns; (b) predicted transition time on a log-spaced p_m grid.
 */
inline Outputs run_figure_data(ExperimentConfig c) {
  validate(c, Subcommand::FigureData);
  if (!c.horizon) c.horizon = 2500.0;
  const auto n = static_cast<std::size_t>(c.replicates);
  const auto times = detail::grid(*c.horizon, c.sample_points);

  Outputs out;
  out.summary = detail::base_summary(Subcommand::FigureData, c);
  json series_meta = json::array();
  const std::size_t n_series = std::max<std::size_t>(1, c.pm.size());
  for (std::size_t s = 0; s < n_series; ++s) {
    const auto params = matrix_params(c, s);
    auto samples = parallel_map(n, c.threads, [&](std::size_t r) {
      SimulationConfig sc{.master_seed = c.seed, .replicate_index = r, .horizon = *c.horizon,
                          .stop = StopCondition::TimeHorizon, .sample_times = times};
      return simulate_matrix(params, sc).samples;
    });
    std::vector<double> mean(times.size(), 0.0);
    for (const auto& run : samples)
      for (std::size_t i = 0; i < run.size(); ++i) mean[i] += run[i];
    for (double& m : mean) m /= static_cast<double>(n);

    const double t_pred = transition_time_prediction(params);
    const double steady = steady_allones_count(params, Method::Exact).value;
    std::ostringstream csv;
    csv << "# " << kCsvSchema << " mean-allones-vs-time lambda_m=" << detail::num(params.lambda_m()) << '\n';
    csv << "time,mean_all_ones_count,replicates,predicted_transition_time,predicted_steady_count\n";
    for (std::size_t i = 0; i < times.size(); ++i)
      csv << detail::num(times[i]) << ',' << detail::num(mean[i]) << ',' << n << ',' << detail::num(t_pred) << ','
          << detail::num(steady) << '\n';
    const std::string name = "fig1_series_" + std::to_string(s) + ".csv";
    out.csv_files.emplace_back(name, csv.str());
    series_meta.push_back({{"file", name},
                           {"lambda_m", params.lambda_m()},
                           {"predictions", detail::reports_json({{"transition_time_prediction", t_pred, Method::Asymptotic, "m-log-m-over-qtilde"},
                                                                 steady_allones_count(params, Method::Exact)})}});
  }
  out.summary["series"] = series_meta;

  std::ostringstream grid_csv;
  grid_csv << "# " << kCsvSchema << " transition-time-vs-pm\n";
  grid_csv << "p_m,lambda_m,q_tilde,predicted_transition_time\n";
  const double lo = std::log(c.pm_grid_min), hi = std::log(c.pm_grid_max);
  for (int i = 0; i < c.pm_grid_points; ++i) {
    const double pm = std::exp(lo + (hi - lo) * i / (c.pm_grid_points - 1));
    const double p = c.pd ? *c.pd : *c.p;
    const MatrixParams mp(c.M, c.N, p, pm * c.M);
    grid_csv << detail::num(pm) << ',' << detail::num(mp.lambda_m()) << ',' << detail::num(mp.q_tilde()) << ','
             << detail::num(transition_time_prediction(mp)) << '\n';
  }
  out.csv_files.emplace_back("fig2_transition_vs_pm.csv", grid_csv.str());
  out.summary["config"] = echo_config(c);
  return out;
}

inline Outputs run(Subcommand sub, const ExperimentConfig& c) {
  switch (sub) {
    case Subcommand::Simulate: return run_simulate(c);
    case Subcommand::SampleSteady: return run_sample_steady(c);
    case Subcommand::Analyze: return run_analyze(c);
    case Subcommand::Verify: return run_verify(c);
    case Subcommand::FigureData: return run_figure_data(c);
  }
  throw invalid_input("unknown subcommand");
}

/// Writes summary.json and the CSV files into `dir`.
inline void write_outputs(const Outputs& o, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw io_error("cannot open " + (dir / name).string() + " for writing");
    f << content;
    if (!f) throw io_error("write to " + (dir / name).string() + " failed");
  };
  write("summary.json", o.summary.dump(2) + "\n");
  for (const auto& [name, content] : o.csv_files) write(name, content);
}

/// Prints the summary (json) or the CSV files (csv).
inline void print_outputs(const Outputs& o, const std::string& format, std::ostream& os) {
  if (format == "json") {
    os << o.summary.dump(2) << '\n';
    return;
  }
  for (const auto& [name, content] : o.csv_files) os << content;
}

}  // namespace immunechain::experiment
