#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <immunechain/analytics.hpp>
#include <immunechain/simulation.hpp>
#include <immunechain/stats.hpp>

using namespace immunechain;
using Catch::Matchers::WithinAbs;

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

TEST_CASE("rng streams are reproducible and distinct", "[rng]") {
  Rng a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
    CHECK(x != d.next());
  }
  Rng u(1);
  for (int i = 0; i < 100000; ++i) {
    const double v = u.uniform();
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
    REQUIRE(u.index(7) < 7);
  }
}

TEST_CASE("single-column mean hitting times", "[simulation]") {
  SingleColumnParams one(1, 1.0, 0.5);
  const auto taus = hitting_time_batch(one, 100000, 9);
  const double m = mean_of(taus);
  CHECK(m >= 1.94);
  CHECK(m <= 2.06);

  SingleColumnParams two(2, 1.0, 0.5);
  const auto est = estimate_mean(std::span<const double>(hitting_time_batch(two, 40000, 10)), 0.999);
  CHECK(est.covers(10.0));
}

TEST_CASE("started at M the hitting time is zero", "[simulation]") {
  SingleColumnParams sp(5, 1.0, 0.3);
  SimulationConfig cfg{.master_seed = 1};
  const auto traj = simulate_single_column(sp, cfg, {5});
  REQUIRE(traj.hit_time);
  CHECK(*traj.hit_time == 0.0);
  CHECK(traj.event_count == 0);

  auto full = MatrixState::from_rows({{1, 0}, {1, 0}});
  const auto mt = simulate_matrix(MatrixParams(2, 2, 0.3), cfg, full);
  REQUIRE(mt.hit_time);
  CHECK(*mt.hit_time == 0.0);
}

TEST_CASE("batch of one equals replicate zero", "[simulation]") {
  SingleColumnParams sp(6, 1.0, 0.2);
  const auto batch = hitting_time_batch(sp, 1, 555);
  SimulationConfig cfg{.master_seed = 555, .replicate_index = 0};
  CHECK(batch.front() == *simulate_single_column(sp, cfg).hit_time);

  MatrixParams mp(4, 3, 0.2, 0.1);
  const auto mb = hitting_time_batch(mp, 1, 556);
  SimulationConfig mcfg{.master_seed = 556};
  CHECK(mb.front() == *simulate_matrix(mp, mcfg).hit_time);
}

TEST_CASE("batches do not depend on thread count", "[simulation][determinism]") {
  SingleColumnParams sp(8, 1.0, 0.4);
  const auto a = hitting_time_batch(sp, 500, 3, 1);
  const auto b = hitting_time_batch(sp, 500, 3, 4);
  const auto c = hitting_time_batch(sp, 500, 3, 1);
  CHECK(a == b);
  CHECK(a == c);

  MatrixParams mp(10, 5, 0.3, 0.2);
  CHECK(hitting_time_batch(mp, 200, 8, 1) == hitting_time_batch(mp, 200, 8, 3));
}

TEST_CASE("finite horizon censors runs as infinity", "[simulation]") {
  SingleColumnParams sp(30, 1.0, 0.5);
  const auto taus = hitting_time_batch(sp, 50, 4, 1, {}, 1e-3);
  for (double t : taus) CHECK(std::isinf(t));
}

TEST_CASE("two-state matrix chain spends half its time full", "[simulation]") {
  MatrixParams mp(1, 1, 0.5);
  SimulationConfig cfg{.master_seed = 12, .horizon = 2e5, .stop = StopCondition::TimeHorizon, .record_occupation = true};
  const auto traj = simulate_matrix(mp, cfg);
  const double frac = traj.occupation[1] / traj.end_time;
  CHECK_THAT(frac, WithinAbs(0.5, 0.01));
}

TEST_CASE("no entry events without mutation", "[simulation]") {
  MatrixParams mp(6, 4, 0.3);
  SimulationConfig cfg{.master_seed = 2, .horizon = 500.0, .stop = StopCondition::TimeHorizon, .record_events = true};
  const auto traj = simulate_matrix(mp, cfg);
  REQUIRE(traj.event_count > 100);
  for (const auto& e : traj.events) CHECK(e.kind != EventKind::EntrySet);

  MatrixParams on(6, 4, 0.3, 0.5);
  const auto t2 = simulate_matrix(on, cfg);
  CHECK(std::any_of(t2.events.begin(), t2.events.end(), [](const auto& e) { return e.kind == EventKind::EntrySet; }));
}

TEST_CASE("column all-ones probability at large time", "[simulation]") {
  MatrixParams mp(3, 2, 0.3, 0.1);
  const std::size_t n = 20000;
  const auto full = parallel_map(n, 0, [&](std::size_t r) {
    SimulationConfig cfg{.master_seed = 31, .replicate_index = r, .horizon = 60.0, .stop = StopCondition::TimeHorizon};
    const auto traj = simulate_matrix(mp, cfg);
    return traj.final_state.column_count(0) == 3 ? 1.0 : 0.0;
  });
  const auto est = estimate_mean(std::span<const double>(full));
  const double exact = steady_allones_probability(mp);
  CHECK(std::abs(est.point - exact) <= 3.0 * est.std_error);
}

TEST_CASE("a column fills only after every row is set past its last wipe", "[simulation][property]") {
  MatrixParams mp(4, 3, 0.4);
  for (std::uint64_t r = 0; r < 200; ++r) {
    SimulationConfig cfg{.master_seed = 17, .replicate_index = r, .record_events = true};
    const auto traj = simulate_matrix(mp, cfg);
    REQUIRE(traj.hit_time);
    // At the hit, some column j must have every row set after j's last zeroing.
    bool found = false;
    for (int j = 0; j < mp.N() && !found; ++j) {
      double last_wipe = -1.0;
      for (const auto& e : traj.events)
        if (e.kind == EventKind::ColumnZero && e.col == j) last_wipe = e.time;
      bool all_rows = true;
      for (int i = 0; i < mp.M(); ++i) {
        bool seen = false;
        for (const auto& e : traj.events)
          if (e.kind == EventKind::RowSet && e.row == i && e.time > last_wipe) seen = true;
        all_rows = all_rows && seen;
      }
      found = all_rows && traj.final_state.column_count(j) == mp.M();
    }
    REQUIRE(found);
  }
}

TEST_CASE("jump-chain frequencies of the single column", "[simulation][property]") {
  SingleColumnParams sp(4, 1.5, 0.3);
  SimulationConfig cfg{.master_seed = 23, .horizon = 2e5, .stop = StopCondition::TimeHorizon, .record_events = true};
  const auto traj = simulate_single_column(sp, cfg);
  std::vector<double> jumps(5, 0.0), resets(5, 0.0);
  for (const auto& e : traj.events) {
    jumps[e.from] += 1.0;
    if (e.to == 0) resets[e.from] += 1.0;
  }
  const double L = sp.uniformization_rate();
  const double pp = sp.p() / L, qq = sp.alpha() * sp.q() / L;
  for (int k = 1; k < 4; ++k) {
    REQUIRE(jumps[k] > 1000);
    // Uniformized p(k,0) and p(k,k+1) conditioned on leaving k.
    const double expected = pp / (pp + qq * (1.0 - k / 4.0));
    const double sd = std::sqrt(expected * (1 - expected) / jumps[k]);
    CHECK(std::abs(resets[k] / jumps[k] - expected) <= 4.0 * sd);
  }
  CHECK(resets[4] == jumps[4]);
  CHECK(resets[0] == 0.0);
}

TEST_CASE("occupation law matches the invariant pmf", "[simulation][property]") {
  for (int M : {2, 5, 8}) {
    SingleColumnParams sp(M, 1.0, 0.4);
    const double rate = sp.uniformization_rate();
    SimulationConfig cfg{.master_seed = 40u + M, .horizon = 1e6 / rate, .stop = StopCondition::TimeHorizon,
                         .record_occupation = true};
    const auto traj = simulate_single_column(sp, cfg);
    std::vector<double> occ = traj.occupation;
    for (double& x : occ) x /= traj.end_time;
    const auto pi = invariant_pmf(sp);
    CHECK(empirical_tv(occ, pi) < 0.02);

    // Independent end-of-run states, one per replicate.
    std::vector<std::uint64_t> counts(M + 1, 0);
    for (int r = 0; r < 4000; ++r) {
      SimulationConfig c2{.master_seed = 80u + M, .replicate_index = static_cast<std::uint64_t>(r), .horizon = 400.0,
                          .stop = StopCondition::TimeHorizon, .sample_times = {400.0}};
      const auto t = simulate_single_column(sp, c2);
      ++counts[t.samples.at(0)];
    }
    const auto chi = chi_square_gof(counts, pi);
    CHECK(chi.p_value > 0.001);
  }
}

TEST_CASE("sample grid and series bookkeeping", "[simulation]") {
  MatrixParams mp(5, 3, 0.2);
  SimulationConfig cfg{.master_seed = 3, .horizon = 50.0, .stop = StopCondition::TimeHorizon, .record_series = true,
                       .sample_times = {0.0, 10.0, 25.0, 50.0}};
  const auto traj = simulate_matrix(mp, cfg);
  REQUIRE(traj.samples.size() == 4);
  CHECK(traj.samples[0] == 0);
  CHECK(traj.samples[3] == traj.final_state.full_columns());
  REQUIRE_FALSE(traj.series.empty());
  CHECK(traj.series.front() == std::pair<double, int>{0.0, 0});
  for (std::size_t i = 1; i < traj.series.size(); ++i) CHECK(traj.series[i].first >= traj.series[i - 1].first);

  SimulationConfig bad{.horizon = 1.0, .stop = StopCondition::TimeHorizon, .sample_times = {2.0, 1.0}};
  CHECK_THROWS_AS(simulate_matrix(mp, bad), invalid_input);
  SimulationConfig inf_h{.stop = StopCondition::TimeHorizon};
  CHECK_THROWS_AS(simulate_matrix(mp, inf_h), invalid_input);
  CHECK_THROWS_AS(simulate_matrix(mp, cfg, MatrixState(2, 2)), invalid_input);
}
