#pragma once

#include <cmath>
#include <string>

#include "errors.hpp"

namespace immunechain {

/**
 * Parameters of the single-column chain on {0, ..., M}.
 *
 * Up-moves k -> k+1 happen at rate alpha*q*(1 - k/M), resets k -> 0 at
 * rate p. The derived shape a = p*M/(alpha*q) controls both the invariant
 * law (where it appears as beta) and the hitting-time growth M^(a+1).
 */
class SingleColumnParams {
 public:
  SingleColumnParams(int M, double alpha, double p) : M_(M), alpha_(alpha), p_(p), q_(1.0 - p) {
    if (M < 1) throw invalid_input("M must be >= 1, got " + std::to_string(M));
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw invalid_input("alpha must be a positive finite real");
    if (!(p > 0.0 && p < 1.0)) throw invalid_input("p must lie in (0,1)");
    if (!std::isfinite(a()) || !(a() > 0.0)) throw invalid_input("derived a = pM/(alpha q) is not finite");
  }

  int M() const noexcept { return M_; }
  double alpha() const noexcept { return alpha_; }
  double p() const noexcept { return p_; }
  double q() const noexcept { return q_; }

  double a() const noexcept { return p_ * M_ / (alpha_ * q_); }
  /// Largest total exit rate; the rate of the uniformized jump chain.
  double uniformization_rate() const noexcept { return alpha_ * q_ + p_; }

 private:
  int M_;
  double alpha_;
  double p_;
  double q_;
};

/**
 * Parameters of the M x N matrix chain.
 *
 * Each row is set to ones at rate q/M, each column zeroed at rate p/N and
 * each entry set to one at rate lambda_m/M (PAI). lambda_m = 0 is PAI off.
 */
class MatrixParams {
 public:
  MatrixParams(int M, int N, double p, double lambda_m = 0.0)
      : M_(M), N_(N), p_(p), q_(1.0 - p), lambda_m_(lambda_m) {
    if (M < 1) throw invalid_input("M must be >= 1, got " + std::to_string(M));
    if (N < 1) throw invalid_input("N must be >= 1, got " + std::to_string(N));
    if (!(p > 0.0 && p < 1.0)) throw invalid_input("p must lie in (0,1)");
    if (!(lambda_m >= 0.0) || !std::isfinite(lambda_m))
      throw invalid_input("lambda_m must be a nonnegative finite real");
  }

  int M() const noexcept { return M_; }
  int N() const noexcept { return N_; }
  double p() const noexcept { return p_; }
  double q() const noexcept { return q_; }
  double lambda_m() const noexcept { return lambda_m_; }
  bool pai_on() const noexcept { return lambda_m_ > 0.0; }

  double q_tilde() const noexcept { return q_ + lambda_m_; }
  double b() const noexcept { return p_ * M_ / (q_ * N_); }
  double b_tilde() const noexcept { return p_ * M_ / (q_tilde() * N_); }

  /// q (rows) + p (columns) + N*lambda_m (entries).
  double total_rate() const noexcept { return q_ + p_ + N_ * lambda_m_; }

 private:
  int M_;
  int N_;
  double p_;
  double q_;
  double lambda_m_;
};

}  // namespace immunechain
