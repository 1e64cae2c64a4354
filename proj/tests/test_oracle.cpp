#include <catch_amalgamated.hpp>

#include <immunechain/oracle.hpp>

using namespace immunechain;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("stationary solve on tiny generators", "[oracle]") {
  oracle::DenseGenerator two{{0, 1}, {0.0, 0.5, 0.5, 0.0}};
  two.fill_diagonal();
  REQUIRE(two.valid());
  const auto pi2 = oracle::stationary_solve(two);
  CHECK_THAT(pi2[0], WithinAbs(0.5, 1e-15));
  CHECK_THAT(pi2[1], WithinAbs(0.5, 1e-15));

  const auto pi3 = oracle::stationary_solve(oracle::single_column_generator(SingleColumnParams(2, 1.0, 0.5)));
  CHECK_THAT(pi3[0], WithinAbs(1.0 / 2, 1e-15));
  CHECK_THAT(pi3[1], WithinAbs(1.0 / 3, 1e-15));
  CHECK_THAT(pi3[2], WithinAbs(1.0 / 6, 1e-15));

  const auto g = oracle::matrix_generator(MatrixParams(2, 1, 0.5));
  const auto pim = oracle::stationary_solve(g);
  CHECK_THAT(pim[g.index_of(0b11)], WithinAbs(1.0 / 6, 1e-15));
}

TEST_CASE("reducible generators are rejected", "[oracle]") {
  oracle::DenseGenerator g{{0, 1, 2}, {0, 1, 0, 1, 0, 0, 0, 0, 0}};
  g.fill_diagonal();
  CHECK_THROWS_AS(oracle::stationary_solve(g), diagnostic_error);
}

TEST_CASE("matrix generator state space", "[oracle]") {
  // With mutation every matrix is reachable; without it only those built
  // from whole rows minus whole columns.
  CHECK(oracle::matrix_generator(MatrixParams(2, 2, 0.3, 0.1)).size() == 16);
  const auto g = oracle::matrix_generator(MatrixParams(2, 2, 0.3));
  CHECK(g.size() < 16);
  CHECK_THROWS_AS(g.index_of(0b0110), invalid_input);
  CHECK_THROWS(oracle::matrix_generator(MatrixParams(5, 5, 0.3, 0.1)));
}

TEST_CASE("stationary residuals are tiny on every generator", "[oracle][property]") {
  for (int M = 1; M <= 12; ++M)
    for (double p : {0.1, 0.5, 0.9}) {
      const auto g = oracle::single_column_generator(SingleColumnParams(M, 1.5, p));
      REQUIRE(g.valid());
      CHECK(oracle::stationary_residual(g, oracle::stationary_solve(g)) < 1e-10);
    }
  for (int M = 1; M <= 3; ++M)
    for (int N = 1; N <= 3; ++N)
      for (double lam : {0.0, 0.3}) {
        const auto g = oracle::matrix_generator(MatrixParams(M, N, 0.4, lam));
        REQUIRE(g.valid());
        CHECK(oracle::stationary_residual(g, oracle::stationary_solve(g)) < 1e-10);
      }
}

TEST_CASE("hitting moments", "[oracle]") {
  const std::size_t t1[] = {1};
  const auto h1 = oracle::hitting_moments(oracle::single_column_generator(SingleColumnParams(1, 1.0, 0.5)), t1);
  CHECK_THAT(h1.mean[0], WithinRel(2.0, 1e-14));
  CHECK_THAT(h1.second[0], WithinRel(8.0, 1e-14));
  CHECK(h1.mean[1] == 0.0);
  CHECK(h1.second[1] == 0.0);

  const std::size_t t2[] = {2};
  const auto h2 = oracle::hitting_moments(oracle::single_column_generator(SingleColumnParams(2, 1.0, 0.5)), t2);
  CHECK_THAT(h2.mean[0], WithinRel(10.0, 1e-14));
  CHECK_THAT(h2.mean[1], WithinRel(8.0, 1e-14));
}

TEST_CASE("second moments dominate squared means", "[oracle][property]") {
  for (int M = 1; M <= 30; ++M)
    for (double alpha : {0.5, 2.0})
      for (double p : {0.1, 0.9}) {
        const auto g = oracle::single_column_generator(SingleColumnParams(M, alpha, p));
        const std::size_t target[] = {static_cast<std::size_t>(M)};
        const auto h = oracle::hitting_moments(g, target);
        for (int k = 0; k <= M; ++k) CHECK(h.second[k] >= h.mean[k] * h.mean[k]);
      }
}

TEST_CASE("coupon enumeration", "[oracle][coupon]") {
  CHECK(oracle::coupon_enumerate(2, 2) == oracle::Rational{1, 2});
  CHECK(oracle::coupon_enumerate(3, 3) == oracle::Rational{2, 9});
  CHECK(oracle::coupon_enumerate(1, 1) == oracle::Rational{1, 1});
  for (int N = 2; N <= 5; ++N)
    for (int k = 0; k < N; ++k) CHECK(oracle::coupon_enumerate(N, k).num == 0);
  CHECK(244140625 % oracle::coupon_enumerate(5, 12).den == 0);  // 5^12 sequences
  CHECK_THROWS_AS(oracle::coupon_enumerate(5, 30), diagnostic_error);
}
