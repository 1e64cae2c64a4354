#pragma once

// Closed-form and asymptotic quantities for both chains. Every Gamma ratio
// is evaluated as a difference of log-Gammas and exponentiated once, since
// Gamma(201 + x) alone overflows a double.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "model.hpp"
#include "params.hpp"

namespace immunechain {

/// log Gamma(x) for x > 0, without touching the global signgam.
inline double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

enum class Method { Exact, Asymptotic };

inline const char* to_string(Method m) { return m == Method::Exact ? "exact" : "asymptotic"; }

struct ClosedFormReport {
  std::string quantity;
  double value = 0.0;
  Method method = Method::Exact;
  std::string formula_id;
};

// ---------------------------------------------------------------------------
// Single-column chain
// ---------------------------------------------------------------------------

/**
 * Invariant law of the single-column chain,
 *
 *   pi_k = Gamma(M+1)/Gamma(M+1-k) * Gamma(beta+M-k)/Gamma(beta+M) * p/(p + alpha q),
 *
 * with beta = pM/(alpha q). The result is renormalized; a sum further than
 * 1e-8 from one before renormalizing is reported as a diagnostic.
 */
inline std::vector<double> invariant_pmf(const SingleColumnParams& params) {
  const int M = params.M();
  const double beta = params.a();
  const double log_pi0 = std::log(params.p() / (params.p() + params.alpha() * params.q()));
  const double lg_m1 = log_gamma(M + 1.0);
  const double lg_bm = log_gamma(beta + M);

  std::vector<double> pi(static_cast<std::size_t>(M) + 1);
  double total = 0.0;
  for (int k = 0; k <= M; ++k) {
    const double lp = lg_m1 - log_gamma(M + 1.0 - k) + log_gamma(beta + M - k) - lg_bm + log_pi0;
    pi[k] = std::exp(lp);
    total += pi[k];
  }
  if (!(std::abs(total - 1.0) < 1e-8)) throw diagnostic_error("invariant pmf does not sum to one");
  for (double& x : pi) x /= total;
  return pi;
}

/// pi_{M-k} / pi_M = Gamma(beta+k) / (Gamma(k+1) Gamma(beta)).
inline double zero_count_ratio(const SingleColumnParams& params, int k) {
  if (k < 0 || k > params.M()) throw invalid_input("k must lie in {0..M}");
  const double beta = params.a();
  return std::exp(log_gamma(beta + k) - log_gamma(k + 1.0) - log_gamma(beta));
}

/// Large-k form k^(a-1) / Gamma(a) of zero_count_ratio.
inline double zero_count_ratio_leading_order(double a, int k) {
  if (k < 1) throw invalid_input("k must be >= 1");
  return std::exp((a - 1.0) * std::log(static_cast<double>(k)) - log_gamma(a));
}

namespace detail {

/// First two moments of the number of steps to reach M in the uniformized
/// jump chain (p' = p/L, q' = alpha q/L, L = alpha q + p), for every start.
struct StepMoments {
  std::vector<double> mean;
  std::vector<double> second;
};

inline std::vector<double> step_means(const SingleColumnParams& params) {
  const int M = params.M();
  const double rate = params.uniformization_rate();
  const double pp = params.p() / rate;
  const double qq = params.alpha() * params.q() / rate;
  const double a = params.a();

  // 1 + p' f(0) = Gamma(M+1+a) / (Gamma(a+1) Gamma(M+1)).
  const double log_g = log_gamma(M + 1.0 + a) - log_gamma(a + 1.0) - log_gamma(M + 1.0);
  const double g = std::exp(log_g);

  // f(M-i) = M g/(p'M + q'i) + q'i/(p'M + q'i) f(M-i+1), f(M) = 0.
  std::vector<double> f(static_cast<std::size_t>(M) + 1, 0.0);
  for (int i = 1; i <= M; ++i) {
    const double denom = pp * M + qq * i;
    f[M - i] = M * g / denom + qq * i / denom * f[M - i + 1];
  }
  return f;
}

inline StepMoments step_moments(const SingleColumnParams& params) {
  const int M = params.M();
  const double rate = params.uniformization_rate();
  const double pp = params.p() / rate;
  const double qq = params.alpha() * params.q() / rate;

  StepMoments out;
  out.mean = step_means(params);
  const auto& f = out.mean;

  // g(k) = 2f(k) - 1 + p' g(0) + q'(k/M) g(k) + q'(1-k/M) g(k+1), g(M) = 0.
  // Written as g(k) = u_k + (1 - w_k) g(0); w_k is the probability of
  // reaching M before the next reset and is accumulated as a product.
  std::vector<double> u(static_cast<std::size_t>(M) + 1, 0.0);
  std::vector<double> w(static_cast<std::size_t>(M) + 1, 1.0);
  for (int k = M - 1; k >= 0; --k) {
    const double up = qq * (1.0 - static_cast<double>(k) / M);
    const double d = pp + up;
    u[k] = (2.0 * f[k] - 1.0 + up * u[k + 1]) / d;
    w[k] = up * w[k + 1] / d;
  }
  const double g0 = u[0] / w[0];
  out.second.assign(static_cast<std::size_t>(M) + 1, 0.0);
  for (int k = 0; k < M; ++k) out.second[k] = u[k] + (1.0 - w[k]) * g0;
  out.second[0] = g0;
  return out;
}

}  // namespace detail

/**
 * E[tau | X_0 = start] in continuous time, tau the first time the column is
 * all ones. Solved on the uniformized jump chain via the telescoping
 * product for 1 + p' f(0) and the backward recursion for f(k), then divided
 * by the uniformization rate.
 */
inline double hitting_time_mean_exact(const SingleColumnParams& params, ColumnState start = {}) {
  check_state(start, params);
  if (start.k == params.M()) return 0.0;
  return detail::step_means(params)[start.k] / params.uniformization_rate();
}

/// Continuous-time means for every start state 0..M.
inline std::vector<double> hitting_time_means(const SingleColumnParams& params) {
  auto f = detail::step_means(params);
  for (double& x : f) x /= params.uniformization_rate();
  return f;
}

/// Leading order M^(a+1) / (Gamma(a+1) a) as M grows with a fixed. Tied to
/// alpha = 1; for other alpha the exact value is authoritative.
inline double hitting_time_mean_asymptotic(double a, int M) {
  if (!(a > 0.0) || M < 1) throw invalid_input("need a > 0 and M >= 1");
  return std::exp((a + 1.0) * std::log(static_cast<double>(M)) - log_gamma(a + 1.0)) / a;
}

inline double hitting_time_mean_asymptotic(const SingleColumnParams& params) {
  return hitting_time_mean_asymptotic(params.a(), params.M());
}

/**
 * Var[tau | X_0 = start] in continuous time. With S the step count of the
 * uniformized chain and L its rate, tau is a sum of S independent Exp(L)
 * holding times, so Var tau = (E S + Var S) / L^2.
 */
inline double hitting_time_variance_exact(const SingleColumnParams& params, ColumnState start = {}) {
  check_state(start, params);
  if (start.k == params.M()) return 0.0;
  const auto m = detail::step_moments(params);
  const double mean_steps = m.mean[start.k];
  const double var_steps = m.second[start.k] - mean_steps * mean_steps;
  const double rate = params.uniformization_rate();
  return (mean_steps + var_steps) / (rate * rate);
}

// ---------------------------------------------------------------------------
// Coupon collector
// ---------------------------------------------------------------------------

/// P(all N coupons seen within k uniform draws), by inclusion-exclusion.
inline double coupon_done_by_draws(int N, long k) {
  if (N < 1 || k < 0) throw invalid_input("need N >= 1 and k >= 0");
  if (k < N) return 0.0;
  long double sum = 0.0L;
  long double binom = 1.0L;  // C(N, i), built up from i = 0
  for (int i = 1; i <= N; ++i) {
    binom = binom * (N - i + 1) / i;
    const long double term = binom * std::pow(static_cast<long double>(i) / N, static_cast<long double>(k));
    sum += ((N - i) % 2 == 0) ? term : -term;
  }
  return std::clamp(static_cast<double>(sum), 0.0, 1.0);
}

/// P(all N coupons seen by time t) when draws arrive at total `rate`;
/// each coupon is an independent Poisson stream of rate rate/N.
inline double coupon_done_by_time(int N, double t, double rate = 1.0) {
  if (N < 1 || !(t >= 0.0) || !(rate > 0.0)) throw invalid_input("need N >= 1, t >= 0, rate > 0");
  if (t == 0.0) return 0.0;
  const double seen = -std::expm1(-rate * t / N);
  return std::exp(N * std::log(seen));
}

/// Smallest c for which coupon_tail_bounds is offered.
inline constexpr double kCouponTailThreshold = 1.0;

struct TailBounds {
  double lower;  // bound on P(sigma < n log n - c n)
  double upper;  // bound on P(sigma > n log n + c n)
};

inline TailBounds coupon_tail_bounds(int n, double c) {
  if (n < 1) throw invalid_input("n must be >= 1");
  if (!(c >= kCouponTailThreshold)) throw invalid_input("c below the documented threshold 1.0");
  return {std::exp(-3.0 * c * c / (std::numbers::pi * std::numbers::pi)), std::exp(-c)};
}

/// Gamma(M+1) Gamma(1+x) / Gamma(M+1+x) = prod_{i=1..M} i/(i+x). The
/// product runs in long double up to kGammaRatioProductMax factors; beyond
/// that the log-gamma form is used.
inline constexpr int kGammaRatioProductMax = 100000;

inline double gamma_ratio(int M, double x) {
  if (M <= kGammaRatioProductMax) {
    long double r = 1.0L;
    for (int i = 1; i <= M; ++i) r *= static_cast<long double>(i) / (i + static_cast<long double>(x));
    return static_cast<double>(r);
  }
  return std::exp(log_gamma(M + 1.0) + log_gamma(1.0 + x) - log_gamma(M + 1.0 + x));
}

/**
 * E[exp(-alpha T)] for T the time to collect M coupons drawn at total rate
 * q, i.e. prod_{i<M} p_i/(p_i + alpha) with p_i = q(1 - i/M), in Gamma form
 * Gamma(M+1) Gamma(1 + M alpha/q) / Gamma(M + 1 + M alpha/q).
 */
inline double collection_time_laplace(int M, double q, double alpha) {
  if (M < 1 || !(q > 0.0) || !(alpha >= 0.0)) throw invalid_input("need M >= 1, q > 0, alpha >= 0");
  return gamma_ratio(M, M * alpha / q);
}

// ---------------------------------------------------------------------------
// Matrix chain
// ---------------------------------------------------------------------------

/// Stationary probability that a fixed column is all ones. Each entry of
/// the column is refreshed at rate q~/M, the column wiped at rate p/N.
inline double steady_allones_probability(const MatrixParams& params) {
  return collection_time_laplace(params.M(), params.q_tilde(), params.p() / params.N());
}

/// Expected number of all-ones columns in steady state.
///   Exact:      N * steady_allones_probability
///   Asymptotic: N * Gamma(1 + b~) * M^(-b~)
inline ClosedFormReport steady_allones_count(const MatrixParams& params, Method method) {
  if (method == Method::Exact)
    return {"steady_allones_count", params.N() * steady_allones_probability(params), Method::Exact, "gamma-ratio"};
  const double b = params.b_tilde();
  const double v = params.N() * std::exp(log_gamma(1.0 + b) - b * std::log(static_cast<double>(params.M())));
  return {"steady_allones_count", v, Method::Asymptotic, "stirling-m-power"};
}

/// N * Gamma(1 + b~) * (M/q~)^(-b~); differs from the Asymptotic form by q~^b~.
inline ClosedFormReport steady_allones_count_scaled_variant(const MatrixParams& params) {
  const double b = params.b_tilde();
  const double v = params.N() * std::exp(log_gamma(1.0 + b) - b * std::log(params.M() / params.q_tilde()));
  return {"steady_allones_count", v, Method::Asymptotic, "stirling-m-over-q-power"};
}

/**
 * Expected number of all-ones columns at time t from the zero matrix. Column
 * j is full iff all its M entries were refreshed after the later of 0 and
 * its last wipe; with r = p/N and F(s) = (1 - e^{-q~ s/M})^M this is
 *
 *   N * ( int_0^t r e^{-r s} F(s) ds + e^{-r t} F(t) ).
 */
inline double allones_count_at_time(const MatrixParams& params, double t) {
  if (!(t >= 0.0)) throw invalid_input("t must be nonnegative");
  if (t == 0.0) return 0.0;
  const int M = params.M();
  const double refresh = params.q_tilde() / M;
  const double wipe = params.p() / params.N();
  auto full_by = [&](double s) {
    if (s <= 0.0) return 0.0;
    return std::exp(M * std::log(-std::expm1(-refresh * s)));
  };
  auto integrand = [&](double s) { return wipe * std::exp(-wipe * s) * full_by(s); };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, t, 20, 1e-13);
  return params.N() * (integral + std::exp(-wipe * t) * full_by(t));
}

/// Predicted transition time M log(M) / q~.
inline double transition_time_prediction(const MatrixParams& params) {
  return params.M() * std::log(static_cast<double>(params.M())) / params.q_tilde();
}

struct IdentifiedParams {
  SingleColumnParams single;
  MatrixParams matrix;
};

/**
 * Maps the discrete model's (p_d, p_m) onto both chains: the single column
 * gets p = p_d/N and alpha = 1 + lambda_m, the matrix p = p_d, with
 * lambda_m = p_m M in both.
 */
inline IdentifiedParams identify_parameters(double p_d, int N, double p_m, int M) {
  if (!(p_d > 0.0 && p_d < 1.0)) throw invalid_input("p_d must lie in (0,1)");
  if (!(p_m >= 0.0)) throw invalid_input("p_m must be nonnegative");
  if (N < 1 || M < 1) throw invalid_input("need N >= 1 and M >= 1");
  const double lambda_m = p_m * M;
  return {SingleColumnParams(M, 1.0 + lambda_m, p_d / N), MatrixParams(M, N, p_d, lambda_m)};
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline std::vector<ClosedFormReport> analyze(const SingleColumnParams& params) {
  return {
      {"a", params.a(), Method::Exact, "p-m-over-alpha-q"},
      {"invariant_pi_0", invariant_pmf(params).front(), Method::Exact, "log-gamma-ratio"},
      {"invariant_pi_M", invariant_pmf(params).back(), Method::Exact, "log-gamma-ratio"},
      {"hitting_time_mean", hitting_time_mean_exact(params), Method::Exact, "telescoping-product"},
      {"hitting_time_mean", hitting_time_mean_asymptotic(params), Method::Asymptotic, "leading-order-m-power"},
      {"hitting_time_variance", hitting_time_variance_exact(params), Method::Exact, "uniformized-second-moment"},
  };
}

inline std::vector<ClosedFormReport> analyze(const MatrixParams& params) {
  return {
      {"b", params.b(), Method::Exact, "p-m-over-q-n"},
      {"b_tilde", params.b_tilde(), Method::Exact, "p-m-over-qtilde-n"},
      {"q_tilde", params.q_tilde(), Method::Exact, "q-plus-lambda"},
      {"steady_allones_probability", steady_allones_probability(params), Method::Exact, "gamma-ratio"},
      steady_allones_count(params, Method::Exact),
      steady_allones_count(params, Method::Asymptotic),
      steady_allones_count_scaled_variant(params),
      {"transition_time_prediction", transition_time_prediction(params), Method::Asymptotic, "m-log-m-over-qtilde"},
  };
}

}  // namespace immunechain
