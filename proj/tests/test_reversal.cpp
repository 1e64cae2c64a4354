#include <catch_amalgamated.hpp>

#include <cmath>

#include <immunechain/analytics.hpp>
#include <immunechain/oracle.hpp>
#include <immunechain/reversal.hpp>
#include <immunechain/stats.hpp>

using namespace immunechain;

namespace {

double fraction_full(const MatrixParams& mp, std::size_t n, std::uint64_t seed) {
  std::size_t hits = 0;
  for (std::size_t r = 0; r < n; ++r) {
    Rng rng(seed, r);
    hits += sample_invariant(mp, rng).column_count(0) == mp.M();
  }
  return static_cast<double>(hits) / n;
}

double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / n); }

/// Oracle stationary law laid out over all 2^(MN) matrix codes.
std::vector<double> oracle_law(const MatrixParams& mp) {
  const auto g = oracle::matrix_generator(mp);
  const auto pi = oracle::stationary_solve(g);
  std::vector<double> law(std::size_t{1} << (mp.M() * mp.N()), 0.0);
  for (std::size_t s = 0; s < g.size(); ++s) law[g.states[s]] = pi[s];
  return law;
}

}  // namespace

TEST_CASE("reversal state is write-once", "[reversal]") {
  ReversalState rev(2, 3);
  rev.pick_row(0);
  CHECK(rev.determined_count() == 3);
  rev.pick_column(0);
  CHECK(rev.matrix().at(0, 0));
  CHECK_FALSE(rev.matrix().at(1, 0));
  rev.pick_row(1);
  CHECK_FALSE(rev.matrix().at(1, 0));
  CHECK(rev.matrix().at(1, 1));
  CHECK(rev.complete());
  CHECK_THROWS_AS(rev.pick_entry(2, 0), invalid_input);
}

TEST_CASE("pai-off anchors", "[reversal]") {
  const std::size_t n = 200000;
  const double one = fraction_full(MatrixParams(1, 1, 0.5), n, 1);
  CHECK(std::abs(one - 0.5) <= 3.0 * binomial_se(0.5, n));
  const double two = fraction_full(MatrixParams(2, 1, 0.5), n, 2);
  CHECK(std::abs(two - 1.0 / 6) <= 3.0 * binomial_se(1.0 / 6, n));
}

TEST_CASE("pai-on anchor", "[reversal]") {
  const std::size_t n = 200000;
  const double f = fraction_full(MatrixParams(1, 1, 0.5, 0.5), n, 3);
  CHECK(std::abs(f - 2.0 / 3) <= 3.0 * binomial_se(2.0 / 3, n));
}

TEST_CASE("without mutation both entry points agree", "[reversal]") {
  MatrixParams mp(5, 4, 0.3);
  for (std::uint64_t s = 0; s < 200; ++s) CHECK(sample_invariant_pai_off(mp, s) == sample_invariant_pai_on(mp, s));
  CHECK_THROWS_AS(sample_invariant_pai_off(MatrixParams(2, 2, 0.3, 0.1), 1), invalid_input);
}

TEST_CASE("pai-on count matches the exact mean", "[reversal]") {
  MatrixParams mp(2, 2, 0.3, 0.2);
  const auto counts = sample_allones_counts(mp, 100000, 4);
  const auto est = estimate_mean(std::span<const int>(counts));
  CHECK(std::abs(est.point - steady_allones_count(mp, Method::Exact).value) <= 3.0 * est.std_error);
}

TEST_CASE("sampler reproduces the full stationary law", "[reversal][oracle][property]") {
  struct Case {
    int M, N;
    double p, lambda;
  };
  for (const auto& c : {Case{2, 1, 0.5, 0.0}, Case{2, 2, 0.5, 0.0}, Case{2, 2, 0.3, 0.2}, Case{1, 3, 0.4, 0.3},
                        Case{3, 1, 0.6, 0.0}}) {
    MatrixParams mp(c.M, c.N, c.p, c.lambda);
    const auto hist = sample_state_histogram(mp, 300000, 5);
    const auto emp = normalize_counts(std::span<const std::uint64_t>(hist));
    const auto law = oracle_law(mp);
    const double tv = empirical_tv(emp, law);
    UNSCOPED_INFO("M=" << c.M << " N=" << c.N << " TV=" << tv);
    CHECK(tv < 0.01);
    const auto chi = chi_square_gof(hist, law);
    CHECK(chi.p_value > 1e-4);
  }
}

TEST_CASE("every draw is fully determined", "[reversal][property]") {
  MatrixParams mp(6, 5, 0.2, 0.4);
  Rng rng(8);
  for (int d = 0; d < 500; ++d) {
    const auto m = sample_invariant(mp, rng);
    CHECK(m.caches_consistent());
  }
  Rng tiny(9);
  CHECK_THROWS_AS(sample_invariant(MatrixParams(50, 50, 0.2), tiny, 3), diagnostic_error);
}

TEST_CASE("columns are exchangeable", "[reversal][property]") {
  MatrixParams mp(3, 3, 0.4, 0.2);
  const std::size_t n = 100000;
  std::vector<double> c0(4, 0.0), c2(4, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    Rng rng(10, r);
    const auto m = sample_invariant(mp, rng);
    c0[m.column_count(0)] += 1.0 / n;
    c2[m.column_count(2)] += 1.0 / n;
  }
  CHECK(empirical_tv(c0, c2) < 0.01);
}

TEST_CASE("more mutation dominates entrywise under shared randomness", "[reversal][property]") {
  // Couple two walks on the same uniforms: a step that is an entry pick at
  // the smaller rate is also one at the larger rate, so every entry decided
  // to 1 at the small rate is 1 at the large rate too.
  const int M = 4, N = 3;
  const double p = 0.3, q = 0.7;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    ReversalState lo(M, N), hi(M, N);
    const double lam_lo = 0.1, lam_hi = 0.6;
    while (!lo.complete() || !hi.complete()) {
      const double u = rng.uniform();
      const auto e = rng.index(static_cast<std::uint64_t>(M) * N);
      const int i = static_cast<int>(e / N), j = static_cast<int>(e % N);
      // Thresholds on the rate scale of the larger walk.
      const double total = p + q + N * lam_hi;
      const double x = u * total;
      // Large walk: column / row / entry by its own weights.
      if (x < N * lam_hi) {
        hi.pick_entry(i, j);
        if (x < N * lam_lo) lo.pick_entry(i, j);
      } else if (x < N * lam_hi + q) {
        hi.pick_row(i);
        lo.pick_row(i);
      } else {
        hi.pick_column(j);
        lo.pick_column(j);
      }
    }
    for (int i = 0; i < M; ++i)
      for (int jj = 0; jj < N; ++jj)
        if (lo.matrix().at(i, jj)) REQUIRE(hi.matrix().at(i, jj));
  }
}

TEST_CASE("histogram size guard", "[reversal]") {
  CHECK_THROWS_AS(sample_state_histogram(MatrixParams(5, 5, 0.3), 10, 1), invalid_input);
}
