#pragma once

// Command-line front end. Precedence: built-in defaults < --config file <
// flags. Exit codes: 0 ok, 1 invalid input, 2 I/O failure, 3 consistency
// check failed or diagnostic error.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "experiment.hpp"

namespace immunechain::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitConsistency = 3;

namespace detail {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> model;
  std::optional<int> M, N, start, sample_points, pm_grid_points;
  std::optional<double> p, pd, lambda_m, alpha, horizon, pm_grid_min, pm_grid_max;
  std::vector<double> pm;
  std::optional<long long> replicates;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out, format;
  bool small = false;
};

inline void add_common(CLI::App& sub, Flags& f, bool pm_list) {
  sub.add_option("--config", f.config, "JSON config file (flags override its keys)");
  sub.add_option("--model", f.model, "matrix | single-column");
  sub.add_option("--M", f.M, "rows of the matrix / size of the column");
  sub.add_option("--N", f.N, "columns of the matrix");
  sub.add_option("--p", f.p, "deletion probability (raw parameters)");
  sub.add_option("--pd", f.pd, "discrete-model deletion probability");
  if (pm_list)
    sub.add_option("--pm", f.pm, "discrete-model mutation probability; repeatable, one series each");
  else
    sub.add_option("--pm", f.pm, "discrete-model mutation probability")->expected(1);
  sub.add_option("--lambda-m", f.lambda_m, "per-entry mutation rate (raw parameters)");
  sub.add_option("--alpha", f.alpha, "single-column speed-up factor");
  sub.add_option("--replicates", f.replicates, "number of replicates or draws");
  sub.add_option("--horizon", f.horizon, "simulated time span");
  sub.add_option("--seed", f.seed, "master seed");
  sub.add_option("--start", f.start, "single-column start state");
  sub.add_option("--sample-points", f.sample_points, "time-grid points on [0, horizon]");
  sub.add_option("--out", f.out, "output directory");
  sub.add_option("--format", f.format, "stdout format: json | csv");
  sub.add_option("--threads", f.threads, "worker threads (0 = hardware)");
}

inline experiment::json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw experiment::io_error("cannot read config file " + path);
  try {
    return experiment::json::parse(in);
  } catch (const experiment::json::parse_error& e) {
    throw invalid_input(std::string("config file is not valid JSON: ") + e.what());
  }
}

inline experiment::ExperimentConfig build_config(const Flags& f) {
  experiment::ExperimentConfig c;
  if (f.config) experiment::merge_config(c, read_config_file(*f.config));
  if (f.model) c.model = *f.model;
  if (f.M) c.M = *f.M;
  if (f.N) c.N = *f.N;
  if (f.p) c.p = f.p;
  if (f.pd) c.pd = f.pd;
  if (!f.pm.empty()) c.pm = f.pm;
  if (f.lambda_m) c.lambda_m = f.lambda_m;
  if (f.alpha) c.alpha = f.alpha;
  if (f.replicates) c.replicates = *f.replicates;
  if (f.horizon) c.horizon = f.horizon;
  if (f.seed) c.seed = *f.seed;
  if (f.start) c.start = *f.start;
  if (f.sample_points) c.sample_points = *f.sample_points;
  if (f.pm_grid_min) c.pm_grid_min = *f.pm_grid_min;
  if (f.pm_grid_max) c.pm_grid_max = *f.pm_grid_max;
  if (f.pm_grid_points) c.pm_grid_points = *f.pm_grid_points;
  if (f.small) c.small = true;
  if (f.threads) c.threads = *f.threads;
  if (f.format) c.format = *f.format;
  if (f.out) c.out = f.out;
  return c;
}

}  // namespace detail

/// Runs the tool on `args` (without the program name).
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulate and analyze the immune-repertoire Markov chains", "immunechain"};
  app.require_subcommand(1);
  detail::Flags flags;

  struct Entry {
    experiment::Subcommand kind;
    CLI::App* app;
  };
  std::vector<Entry> subs;
  auto add = [&](experiment::Subcommand kind, const char* help) {
    auto* s = app.add_subcommand(experiment::to_string(kind), help);
    detail::add_common(*s, flags, kind == experiment::Subcommand::FigureData);
    subs.push_back({kind, s});
    return s;
  };
  add(experiment::Subcommand::Simulate, "simulate trajectories and record the first full column");
  add(experiment::Subcommand::SampleSteady, "draw exact stationary samples by reversal");
  add(experiment::Subcommand::Analyze, "evaluate the closed-form predictions");
  add(experiment::Subcommand::Verify, "cross-check closed forms against brute-force oracles")
      ->add_flag("--small", flags.small, "reduced grid");
  auto* fig = add(experiment::Subcommand::FigureData, "emit plotting data for the transition figures");
  fig->add_option("--pm-grid-min", flags.pm_grid_min, "smallest p_m of the log grid");
  fig->add_option("--pm-grid-max", flags.pm_grid_max, "largest p_m of the log grid");
  fig->add_option("--pm-grid-points", flags.pm_grid_points, "points of the log grid");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  experiment::Subcommand kind{};
  for (const auto& s : subs)
    if (s.app->parsed()) kind = s.kind;

  try {
    const auto config = detail::build_config(flags);
    const auto outputs = experiment::run(kind, config);
    if (config.out) experiment::write_outputs(outputs, *config.out);
    experiment::print_outputs(outputs, config.format, out);
    if (!outputs.consistent) {
      err << "error: consistency check failed\n";
      return kExitConsistency;
    }
    return kExitOk;
  } catch (const invalid_input& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const experiment::io_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const diagnostic_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConsistency;
  }
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(std::move(args), out, err);
}

}  // namespace immunechain::cli
