#include <catch_amalgamated.hpp>

#include <cmath>

#include <immunechain/analytics.hpp>
#include <immunechain/simulation.hpp>
#include <immunechain/stats.hpp>

using namespace immunechain;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("estimate_mean basics", "[stats]") {
  const std::vector<double> flat(10, 3.5);
  const auto e = estimate_mean(std::span<const double>(flat), 0.95, 17);
  CHECK(e.point == 3.5);
  CHECK(e.half_width == 0.0);
  CHECK(e.n == 10);
  CHECK(e.master_seed == 17);

  const std::vector<double> xs{1, 2, 3, 4};
  const auto f = estimate_mean(std::span<const double>(xs));
  CHECK_THAT(f.point, WithinAbs(2.5, 1e-15));
  CHECK_THAT(f.std_error, WithinRel(std::sqrt(5.0 / 3.0 / 4.0), 1e-14));
  CHECK_THAT(f.half_width, WithinRel(1.959963984540054 * f.std_error, 1e-12));

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(estimate_mean(std::span<const double>(one)), invalid_input);
  CHECK_THROWS_AS(estimate_mean(std::span<const double>(xs), 1.5), invalid_input);
}

TEST_CASE("interval covers the exact hitting mean", "[stats]") {
  SingleColumnParams sp(1, 1.0, 0.5);
  const auto a = hitting_time_batch(sp, 100000, 100);
  const auto b = hitting_time_batch(sp, 100000, 200);
  const auto ea = estimate_mean(std::span<const double>(a), 0.95, 100);
  const auto eb = estimate_mean(std::span<const double>(b), 0.95, 200);
  CHECK(ea.covers(2.0));
  CHECK(eb.covers(2.0));
  CHECK(ea.lower() <= eb.upper());
  CHECK(eb.lower() <= ea.upper());
}

TEST_CASE("interval coverage is calibrated", "[stats][property]") {
  SingleColumnParams sp(3, 1.0, 0.5);
  const double exact = hitting_time_mean_exact(sp);
  int covered = 0;
  for (std::uint64_t batch = 0; batch < 200; ++batch) {
    const auto taus = hitting_time_batch(sp, 400, 1000 + batch);
    covered += estimate_mean(std::span<const double>(taus)).covers(exact);
  }
  CHECK(covered >= 180);
}

TEST_CASE("total variation distance", "[stats]") {
  const std::vector<double> a{0.2, 0.3, 0.5};
  CHECK(empirical_tv(a, a) == 0.0);
  const std::vector<double> p{1.0, 0.0}, q{0.0, 1.0};
  CHECK(empirical_tv(p, q) == 1.0);
  CHECK_THROWS_AS(empirical_tv(a, p), invalid_input);
}

TEST_CASE("chi-square goodness of fit", "[stats]") {
  const std::vector<std::uint64_t> obs{250, 250, 250, 250};
  const std::vector<double> exp{0.25, 0.25, 0.25, 0.25};
  const auto r = chi_square_gof(obs, exp);
  CHECK(r.statistic == 0.0);
  CHECK(r.dof == 3);
  CHECK(r.p_value == 1.0);

  const std::vector<std::uint64_t> skew{400, 200, 200, 200};
  CHECK(chi_square_gof(skew, exp).p_value < 1e-10);

  // Small cells are pooled until they expect five observations.
  const std::vector<std::uint64_t> sparse{98, 1, 1};
  const std::vector<double> sp{0.98, 0.01, 0.01};
  CHECK(chi_square_gof(sparse, sp).dof == 0);
}

TEST_CASE("quantiles", "[stats]") {
  CHECK(quantile({3, 1, 2}, 0.5) == 2.0);
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({5}, 0.9) == 5.0);
  CHECK_THROWS_AS(quantile({}, 0.5), invalid_input);
}

TEST_CASE("transition window", "[stats]") {
  std::vector<std::optional<double>> hits{1.0, 2.0, 3.0, std::nullopt, 4.0, 5.0};
  const auto w = detect_transition(std::span<const std::optional<double>>(hits));
  CHECK(w.used == 5);
  CHECK(w.censored == 1);
  CHECK(w.median == 3.0);
  CHECK_THAT(w.t_lo, WithinAbs(1.2, 1e-12));
  CHECK_THAT(w.t_hi, WithinAbs(4.8, 1e-12));

  std::vector<std::optional<double>> none{std::nullopt};
  CHECK_THROWS_AS(detect_transition(std::span<const std::optional<double>>(none)), diagnostic_error);
}

TEST_CASE("transition window from trajectories", "[stats]") {
  MatrixParams mp(20, 10, 0.1);
  const double t_pred = transition_time_prediction(mp);
  std::vector<MatrixTrajectory> runs;
  for (std::uint64_t r = 0; r < 300; ++r) {
    SimulationConfig cfg{.master_seed = 5, .replicate_index = r, .horizon = 4.0 * t_pred,
                         .stop = StopCondition::TimeHorizon, .record_series = true};
    runs.push_back(simulate_matrix(mp, cfg));
  }
  const double steady = steady_allones_count(mp, Method::Exact).value;
  const auto w = detect_transition(std::span<const MatrixTrajectory>(runs), 0.5, steady);
  CHECK(w.used + w.censored == 300);
  REQUIRE(w.rise_median);
  CHECK(*w.rise_median >= w.median);
  CHECK(w.t_lo <= w.median);
  CHECK(w.median <= w.t_hi);
}
