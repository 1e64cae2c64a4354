#pragma once

// Brute-force ground truth on small instances: dense generators built
// straight from the rate definitions, stationary laws and hitting moments
// by subtraction-free elimination, and exact coupon counting.
//
// The eliminations follow Grassmann-Taksar-Heyman: diagonals are never
// formed by subtraction, they are recomputed as sums of the remaining
// off-diagonal rates. This keeps tiny stationary masses and huge hitting
// times accurate to a few ulps relative, which plain LU does not.

#include <cstdint>
#include <deque>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "params.hpp"

namespace immunechain::oracle {

/// Dense rate matrix; the diagonal is stored as minus the row sum.
struct DenseGenerator {
  std::vector<std::uint64_t> states;  // state labels (k, or matrix code)
  std::vector<double> rates;          // row-major n x n

  std::size_t size() const noexcept { return states.size(); }
  double rate(std::size_t i, std::size_t j) const { return rates[i * size() + j]; }
  double& rate(std::size_t i, std::size_t j) { return rates[i * size() + j]; }

  std::size_t index_of(std::uint64_t label) const {
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i] == label) return i;
    throw invalid_input("state label not in generator");
  }

  void fill_diagonal() {
    for (std::size_t i = 0; i < size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < size(); ++j)
        if (j != i) s += rate(i, j);
      rate(i, i) = -s;
    }
  }

  /// Off-diagonals nonnegative and rows summing to zero within `tol`.
  bool valid(double tol = 1e-12) const {
    for (std::size_t i = 0; i < size(); ++i) {
      double s = 0.0;
      double scale = 0.0;
      for (std::size_t j = 0; j < size(); ++j) {
        if (j != i && rate(i, j) < 0.0) return false;
        s += rate(i, j);
        scale += std::abs(rate(i, j));
      }
      if (std::abs(s) > tol * std::max(1.0, scale)) return false;
    }
    return true;
  }
};

inline constexpr std::size_t kMaxDenseStates = std::size_t{1} << 12;

/// Single-column chain on {0..M}: k -> k+1 at alpha q (1 - k/M), k -> 0 at p (k > 0).
inline DenseGenerator single_column_generator(const SingleColumnParams& params) {
  const int M = params.M();
  DenseGenerator g;
  const auto n = static_cast<std::size_t>(M) + 1;
  g.states.resize(n);
  std::iota(g.states.begin(), g.states.end(), 0);
  g.rates.assign(n * n, 0.0);
  for (int k = 0; k <= M; ++k) {
    if (k < M) g.rate(k, k + 1) = params.alpha() * params.q() * (M - k) / M;
    if (k > 0) g.rate(k, 0) += params.p();
  }
  g.fill_diagonal();
  return g;
}

/**
 * Matrix chain restricted to the states reachable from the zero matrix
 * (the unique closed class). States are bit codes with bit (i*N + j)
 * holding entry (i, j); state 0 is the zero matrix.
 */
inline DenseGenerator matrix_generator(const MatrixParams& params) {
  const int M = params.M();
  const int N = params.N();
  if (M * N > 20) throw diagnostic_error("matrix oracle limited to M*N <= 20");

  auto row_mask = [N](int i) { return ((std::uint64_t{1} << N) - 1) << (i * N); };
  std::uint64_t col_mask_0 = 0;
  for (int i = 0; i < M; ++i) col_mask_0 |= std::uint64_t{1} << (i * N);
  auto col_mask = [col_mask_0](int j) { return col_mask_0 << j; };

  struct Move {
    std::uint64_t to;
    double rate;
  };
  auto moves = [&](std::uint64_t s) {
    std::vector<Move> out;
    for (int i = 0; i < M; ++i) out.push_back({s | row_mask(i), params.q() / M});
    for (int j = 0; j < N; ++j) out.push_back({s & ~col_mask(j), params.p() / N});
    if (params.lambda_m() > 0.0)
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) out.push_back({s | (std::uint64_t{1} << (i * N + j)), params.lambda_m() / M});
    return out;
  };

  std::unordered_map<std::uint64_t, std::size_t> index;
  std::vector<std::uint64_t> order{0};
  index[0] = 0;
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (const auto& mv : moves(order[head])) {
      if (!index.contains(mv.to)) {
        if (order.size() >= kMaxDenseStates) throw diagnostic_error("matrix oracle exceeds dense state cap");
        index[mv.to] = order.size();
        order.push_back(mv.to);
      }
    }
  }

  DenseGenerator g;
  g.states = order;
  const std::size_t n = order.size();
  g.rates.assign(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (const auto& mv : moves(order[a])) {
      const std::size_t b = index.at(mv.to);
      if (b != a) g.rate(a, b) += mv.rate;
    }
  g.fill_diagonal();
  return g;
}

namespace detail {

inline std::vector<bool> reach(const DenseGenerator& g, std::size_t from, bool forward) {
  const std::size_t n = g.size();
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue{from};
  seen[from] = true;
  while (!queue.empty()) {
    const std::size_t x = queue.front();
    queue.pop_front();
    for (std::size_t y = 0; y < n; ++y) {
      const double r = forward ? g.rate(x, y) : g.rate(y, x);
      if (y != x && r > 0.0 && !seen[y]) {
        seen[y] = true;
        queue.push_back(y);
      }
    }
  }
  return seen;
}

}  // namespace detail

/// Solves pi Q = 0, sum pi = 1 for an irreducible generator.
inline std::vector<double> stationary_solve(const DenseGenerator& g) {
  const std::size_t n = g.size();
  if (n == 0) throw invalid_input("empty generator");
  if (n > kMaxDenseStates) throw diagnostic_error("generator exceeds dense state cap");
  for (bool forward : {true, false}) {
    const auto seen = detail::reach(g, 0, forward);
    for (bool s : seen)
      if (!s) throw diagnostic_error("generator is reducible");
  }
  if (n == 1) return {1.0};

  std::vector<double> a(g.rates);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  for (std::size_t k = n - 1; k >= 1; --k) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += at(k, j);
    if (!(s > 0.0)) throw diagnostic_error("generator is reducible");
    for (std::size_t i = 0; i < k; ++i) at(i, k) /= s;
    for (std::size_t i = 0; i < k; ++i) {
      const double w = at(i, k);
      if (w == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) at(i, j) += w * at(k, j);
    }
  }
  std::vector<double> pi(n, 0.0);
  pi[0] = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < j; ++i) s += pi[i] * at(i, j);
    pi[j] = s;
  }
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& x : pi) x /= total;
  return pi;
}

/// max_j |(pi Q)_j|.
inline double stationary_residual(const DenseGenerator& g, std::span<const double> pi) {
  double worst = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += pi[i] * g.rate(i, j);
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

struct HittingMoments {
  std::vector<double> mean;    // E_x[tau]
  std::vector<double> second;  // E_x[tau^2]
};

namespace detail {

/// Solves out_x v_x = b_x + sum_y r_xy v_y over non-target states, where
/// out_x includes the exit rate into the target set.
inline std::vector<double> absorbing_solve(std::vector<double> r, std::vector<double> exit, std::vector<double> b) {
  const std::size_t m = exit.size();
  auto at = [&](std::size_t i, std::size_t j) -> double& { return r[i * m + j]; };
  std::vector<double> out(m, 0.0);
  for (std::size_t k = m; k-- > 0;) {
    double s = exit[k];
    for (std::size_t j = 0; j < k; ++j) s += at(k, j);
    if (!(s > 0.0)) throw diagnostic_error("target set is not reachable from every state");
    out[k] = s;
    for (std::size_t i = 0; i < k; ++i) {
      const double w = at(i, k) / s;
      if (w == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j)
        if (j != i) at(i, j) += w * at(k, j);
      exit[i] += w * exit[k];
      b[i] += w * b[k];
    }
  }
  std::vector<double> v(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    double s = b[k];
    for (std::size_t j = 0; j < k; ++j) s += at(k, j) * v[j];
    v[k] = s / out[k];
  }
  return v;
}

}  // namespace detail

/**
 * First and second moments of the continuous-time hitting time of `target`
 * (indices into g.states) from every state: -Q m1 = 1 and -Q m2 = 2 m1 on
 * the complement, zero on the target.
 */
inline HittingMoments hitting_moments(const DenseGenerator& g, std::span<const std::size_t> target) {
  const std::size_t n = g.size();
  std::vector<bool> in_target(n, false);
  for (std::size_t t : target) {
    if (t >= n) throw invalid_input("target index out of range");
    in_target[t] = true;
  }
  std::vector<std::size_t> free;
  for (std::size_t x = 0; x < n; ++x)
    if (!in_target[x]) free.push_back(x);
  const std::size_t m = free.size();

  std::vector<double> r(m * m, 0.0);
  std::vector<double> exit(m, 0.0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t y = 0; y < n; ++y) {
      if (y == free[a]) continue;
      const double rate = g.rate(free[a], y);
      if (in_target[y]) exit[a] += rate;
    }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t c = 0; c < m; ++c)
      if (a != c) r[a * m + c] = g.rate(free[a], free[c]);

  const auto m1 = detail::absorbing_solve(r, exit, std::vector<double>(m, 1.0));
  std::vector<double> rhs2(m);
  for (std::size_t a = 0; a < m; ++a) rhs2[a] = 2.0 * m1[a];
  const auto m2 = detail::absorbing_solve(r, exit, rhs2);

  HittingMoments out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t a = 0; a < m; ++a) {
    out.mean[free[a]] = m1[a];
    out.second[free[a]] = m2[a];
  }
  return out;
}

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/**
 * Exact P(k uniform draws from N coupons see every coupon), counting draw
 * sequences by the set of coupons seen so far. Needs N <= 20 and N^k < 2^63.
 */
inline Rational coupon_enumerate(int N, int k) {
  if (N < 1 || k < 0) throw invalid_input("need N >= 1 and k >= 0");
  if (N > 20) throw diagnostic_error("coupon enumeration limited to N <= 20");
  std::uint64_t total = 1;
  for (int t = 0; t < k; ++t) {
    if (total > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(N))
      throw diagnostic_error("coupon enumeration size cap exceeded (N^k >= 2^63)");
    total *= static_cast<std::uint64_t>(N);
  }
  if (k < N) return {0, 1};

  const std::size_t masks = std::size_t{1} << N;
  std::vector<std::uint64_t> count(masks, 0), next(masks, 0);
  count[0] = 1;
  for (int t = 0; t < k; ++t) {
    std::fill(next.begin(), next.end(), 0);
    for (std::size_t s = 0; s < masks; ++s) {
      if (count[s] == 0) continue;
      for (int c = 0; c < N; ++c) next[s | (std::size_t{1} << c)] += count[s];
    }
    count.swap(next);
  }
  const std::uint64_t hits = count[masks - 1];
  const std::uint64_t g = std::gcd(hits, total);
  return {hits / g, total / g};
}

}  // namespace immunechain::oracle
