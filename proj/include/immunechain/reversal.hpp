#pragma once

// Perfect sampling of the matrix chain's stationary law by running its
// events backwards in time.
//
// Reading the stationary chain backwards, entry (i, j) equals the effect of
// the most recent forward event among {row i set, entry (i, j) set, column
// j zeroed}. The backward walk therefore draws events with the forward
// jump-chain probabilities and lets the first event touching an entry
// decide it; later (older) events never overwrite. The walk stops once
// every entry is decided.

#include <cstdint>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace immunechain {

class ReversalState {
 public:
  ReversalState(int rows, int cols)
      : rows_(rows),
        cols_(cols),
        forbidden_(cols, false),
        set_rows_(rows, false),
        determined_(static_cast<std::size_t>(rows) * cols, 0),
        col_open_(cols, rows),
        matrix_(rows, cols) {}

  /// Column j was zeroed: its undecided entries become 0.
  void pick_column(int j) {
    check(0, j);
    if (forbidden_[j]) return;
    forbidden_[j] = true;
    for (int i = 0; i < rows_; ++i) decide(i, j, false);
  }

  /// Row i was set: its undecided entries become 1.
  void pick_row(int i) {
    check(i, 0);
    if (set_rows_[i]) return;
    set_rows_[i] = true;
    for (int j = 0; j < cols_; ++j) decide(i, j, true);
  }

  void pick_entry(int i, int j) {
    check(i, j);
    decide(i, j, true);
  }

  bool entry_determined(int i, int j) const { return determined_[cell(i, j)] != 0; }
  bool column_forbidden(int j) const { return forbidden_[j]; }
  bool row_set(int i) const { return set_rows_[i]; }
  std::size_t determined_count() const noexcept { return determined_count_; }
  bool complete() const noexcept { return determined_count_ == determined_.size(); }
  const MatrixState& matrix() const noexcept { return matrix_; }

 private:
  std::size_t cell(int i, int j) const { return static_cast<std::size_t>(i) * cols_ + j; }
  void check(int i, int j) const {
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_) throw invalid_input("reversal pick index out of range");
  }
  void decide(int i, int j, bool value) {
    auto& d = determined_[cell(i, j)];
    if (d) return;
    d = 1;
    ++determined_count_;
    --col_open_[j];
    if (value) matrix_.set_entry(i, j);
  }

  int rows_;
  int cols_;
  std::vector<bool> forbidden_;
  std::vector<bool> set_rows_;
  std::vector<std::uint8_t> determined_;
  std::vector<int> col_open_;
  std::size_t determined_count_ = 0;
  MatrixState matrix_;
};

inline constexpr std::uint64_t kReversalIterationCap = 1'000'000'000ULL;

/**
 * One stationary draw of the matrix chain (PAI on or off). Each backward
 * step zeroes a uniform column with probability p/(1 + N lambda_m), sets a
 * uniform row with probability q/(1 + N lambda_m) and otherwise sets a
 * uniform entry.
 */
inline MatrixState sample_invariant(const MatrixParams& params, Rng& rng,
                                    std::uint64_t iteration_cap = kReversalIterationCap) {
  const int M = params.M();
  const int N = params.N();
  const double total = params.total_rate();
  const double col_w = params.p();
  const double row_w = params.q();
  const bool pai = params.pai_on();
  const auto entries = static_cast<std::uint64_t>(M) * static_cast<std::uint64_t>(N);

  ReversalState rev(M, N);
  for (std::uint64_t step = 0; !rev.complete(); ++step) {
    if (step >= iteration_cap) throw diagnostic_error("reversal sampler exceeded its iteration cap");
    const double u = rng.uniform() * total;
    if (u < col_w) {
      rev.pick_column(static_cast<int>(rng.index(N)));
    } else if (!pai || u < col_w + row_w) {
      rev.pick_row(static_cast<int>(rng.index(M)));
    } else {
      const auto e = rng.index(entries);
      rev.pick_entry(static_cast<int>(e / N), static_cast<int>(e % N));
    }
  }
  return rev.matrix();
}

inline MatrixState sample_invariant_pai_on(const MatrixParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return sample_invariant(params, rng);
}

inline MatrixState sample_invariant_pai_off(const MatrixParams& params, std::uint64_t seed) {
  if (params.pai_on()) throw invalid_input("sample_invariant_pai_off requires lambda_m = 0");
  Rng rng(seed);
  return sample_invariant(params, rng);
}

/// All-ones column counts of n independent draws; draw r uses stream (master_seed, r).
inline std::vector<int> sample_allones_counts(const MatrixParams& params, std::size_t n, std::uint64_t master_seed,
                                              unsigned threads = 0) {
  return parallel_map(n, threads, [&](std::size_t r) {
    Rng rng(master_seed, r);
    return sample_invariant(params, rng).full_columns();
  });
}

/// Histogram of n draws over the 2^(M N) matrix codes (see MatrixState::encode).
inline std::vector<std::uint64_t> sample_state_histogram(const MatrixParams& params, std::size_t n,
                                                         std::uint64_t master_seed) {
  const int bits = params.M() * params.N();
  if (bits > 20) throw invalid_input("state histogram needs M*N <= 20");
  std::vector<std::uint64_t> hist(std::size_t{1} << bits, 0);
  for (std::size_t r = 0; r < n; ++r) {
    Rng rng(master_seed, r);
    ++hist[sample_invariant(params, rng).encode()];
  }
  return hist;
}

}  // namespace immunechain
