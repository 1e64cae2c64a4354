#pragma once

// State types and transition semantics for the single-column and matrix
// chains, plus the row/column operator algebra used by the reversal sampler.
// Indices are 0-based throughout.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "params.hpp"

namespace immunechain {

struct ColumnState {
  int k = 0;  // number of ones, 0 <= k <= M
  friend bool operator==(ColumnState, ColumnState) = default;
};

struct ColumnTransition {
  ColumnState target;
  double rate;
};

inline void check_state(ColumnState s, const SingleColumnParams& params) {
  if (s.k < 0 || s.k > params.M())
    throw invalid_input("column state " + std::to_string(s.k) + " outside {0..M}");
}

/// Outgoing transitions of the single-column chain. The reset 0 -> 0 is a
/// self-loop and is omitted.
inline std::vector<ColumnTransition> enumerate_rates(ColumnState state, const SingleColumnParams& params) {
  check_state(state, params);
  std::vector<ColumnTransition> out;
  const int M = params.M();
  if (state.k < M) {
    const double up = params.alpha() * params.q() * (1.0 - static_cast<double>(state.k) / M);
    out.push_back({ColumnState{state.k + 1}, up});
  }
  if (state.k > 0) out.push_back({ColumnState{0}, params.p()});
  return out;
}

enum class EventKind : std::uint8_t { RowSet, ColumnZero, EntrySet };

struct MatrixEvent {
  EventKind kind = EventKind::RowSet;
  int row = -1;  // unused for ColumnZero
  int col = -1;  // unused for RowSet
  double time = 0.0;

  static MatrixEvent row_set(int i, double t = 0.0) { return {EventKind::RowSet, i, -1, t}; }
  static MatrixEvent column_zero(int j, double t = 0.0) { return {EventKind::ColumnZero, -1, j, t}; }
  static MatrixEvent entry_set(int i, int j, double t = 0.0) { return {EventKind::EntrySet, i, j, t}; }
};

/**
 * Binary M x N matrix with cached per-column one-counts and a cached number
 * of all-ones columns. Entries are stored column-major so that zeroing a
 * column touches contiguous memory.
 */
class MatrixState {
 public:
  MatrixState(int rows, int cols)
      : rows_(rows), cols_(cols), bits_(checked_size(rows, cols), 0), col_count_(cols, 0) {}

  static MatrixState ones(int rows, int cols) {
    MatrixState s(rows, cols);
    std::fill(s.bits_.begin(), s.bits_.end(), 1);
    std::fill(s.col_count_.begin(), s.col_count_.end(), rows);
    s.full_cols_ = cols;
    return s;
  }

  /// Builds a state from nested rows of 0/1 values.
  static MatrixState from_rows(const std::vector<std::vector<int>>& rows) {
    if (rows.empty() || rows.front().empty()) throw invalid_input("matrix must be non-empty");
    MatrixState s(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int i = 0; i < s.rows_; ++i) {
      if (static_cast<int>(rows[i].size()) != s.cols_) throw invalid_input("ragged matrix rows");
      for (int j = 0; j < s.cols_; ++j) {
        if (rows[i][j] != 0 && rows[i][j] != 1) throw invalid_input("matrix entries must be 0 or 1");
        if (rows[i][j] == 1) s.set_entry(i, j);
      }
    }
    return s;
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }

  bool at(int i, int j) const {
    check_row(i);
    check_col(j);
    return bits_[offset(i, j)] != 0;
  }
  int column_count(int j) const {
    check_col(j);
    return col_count_[j];
  }
  /// Number of columns consisting only of ones.
  int full_columns() const noexcept { return full_cols_; }
  int ones() const noexcept {
    int total = 0;
    for (int c : col_count_) total += c;
    return total;
  }

  void set_row(int i) {
    check_row(i);
    for (int j = 0; j < cols_; ++j) {
      auto& bit = bits_[offset(i, j)];
      if (bit == 0) {
        bit = 1;
        if (++col_count_[j] == rows_) ++full_cols_;
      }
    }
  }

  void zero_column(int j) {
    check_col(j);
    if (col_count_[j] == 0) return;
    if (col_count_[j] == rows_) --full_cols_;
    auto first = bits_.begin() + static_cast<std::ptrdiff_t>(j) * rows_;
    std::fill(first, first + rows_, 0);
    col_count_[j] = 0;
  }

  void set_entry(int i, int j) {
    check_row(i);
    check_col(j);
    auto& bit = bits_[offset(i, j)];
    if (bit != 0) return;
    bit = 1;
    if (++col_count_[j] == rows_) ++full_cols_;
  }

  void apply(const MatrixEvent& e) {
    switch (e.kind) {
      case EventKind::RowSet: set_row(e.row); break;
      case EventKind::ColumnZero: zero_column(e.col); break;
      case EventKind::EntrySet: set_entry(e.row, e.col); break;
    }
  }

  /// Recounts every column and compares with the caches.
  bool caches_consistent() const {
    int full = 0;
    for (int j = 0; j < cols_; ++j) {
      int c = 0;
      for (int i = 0; i < rows_; ++i) c += bits_[offset(i, j)];
      if (c != col_count_[j]) return false;
      if (c == rows_) ++full;
    }
    return full == full_cols_;
  }

  /// Bit (i*cols + j) of the code holds entry (i, j); needs rows*cols <= 64.
  std::uint64_t encode() const {
    if (rows_ * cols_ > 64) throw invalid_input("encode needs rows*cols <= 64");
    std::uint64_t code = 0;
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        if (bits_[offset(i, j)]) code |= std::uint64_t{1} << (i * cols_ + j);
    return code;
  }

  static MatrixState decode(std::uint64_t code, int rows, int cols) {
    if (rows * cols > 64) throw invalid_input("decode needs rows*cols <= 64");
    MatrixState s(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        if ((code >> (i * cols + j)) & 1U) s.set_entry(i, j);
    return s;
  }

  friend bool operator==(const MatrixState& a, const MatrixState& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.bits_ == b.bits_;
  }

 private:
  static std::size_t checked_size(int rows, int cols) {
    if (rows < 1 || cols < 1) throw invalid_input("matrix dimensions must be positive");
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  std::size_t offset(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * rows_ + static_cast<std::size_t>(i);
  }
  void check_row(int i) const {
    if (i < 0 || i >= rows_) throw invalid_input("row index " + std::to_string(i) + " out of range");
  }
  void check_col(int j) const {
    if (j < 0 || j >= cols_) throw invalid_input("column index " + std::to_string(j) + " out of range");
  }

  int rows_;
  int cols_;
  std::vector<std::uint8_t> bits_;
  std::vector<int> col_count_;
  int full_cols_ = 0;
};

inline MatrixState apply_event(MatrixState state, const MatrixEvent& event) {
  state.apply(event);
  return state;
}

namespace detail {

inline std::vector<bool> index_mask(const std::vector<int>& indices, int size, const char* what) {
  std::vector<bool> mask(size, false);
  for (int x : indices) {
    if (x < 0 || x >= size) throw invalid_input(std::string(what) + " index " + std::to_string(x) + " out of range");
    mask[x] = true;
  }
  return mask;
}

}  // namespace detail

/**
 * Result of applying H_{S_1}, W_{R_1}, ..., H_{S_T}, W_{R_T} to `start`,
 * evaluated through the closed form
 *
 *   Z_{Sbar_1} A D_{Rbar_1} + sum_t O_{S_t \ Sbar_{t+1}} D_{Rbar_t},
 *
 * with Sbar_t, Rbar_t the unions of S_t..S_T and R_t..R_T. H_S sets the
 * rows in S to ones, W_R zeroes the columns in R.
 */
inline MatrixState compose_closed_form(const MatrixState& start, const std::vector<std::vector<int>>& additions,
                                       const std::vector<std::vector<int>>& deletions) {
  if (additions.size() != deletions.size())
    throw invalid_input("additions and deletions must have the same length");
  const int M = start.rows();
  const int N = start.cols();
  const std::size_t T = additions.size();

  // Suffix unions; index T is the empty set.
  std::vector<std::vector<bool>> s_bar(T + 1, std::vector<bool>(M, false));
  std::vector<std::vector<bool>> r_bar(T + 1, std::vector<bool>(N, false));
  std::vector<std::vector<bool>> s_mask(T), r_mask(T);
  for (std::size_t t = T; t-- > 0;) {
    s_mask[t] = detail::index_mask(additions[t], M, "row");
    r_mask[t] = detail::index_mask(deletions[t], N, "column");
    for (int i = 0; i < M; ++i) s_bar[t][i] = s_bar[t + 1][i] || s_mask[t][i];
    for (int j = 0; j < N; ++j) r_bar[t][j] = r_bar[t + 1][j] || r_mask[t][j];
  }

  std::vector<int> sum(static_cast<std::size_t>(M) * N, 0);
  auto cell = [&](int i, int j) -> int& { return sum[static_cast<std::size_t>(i) * N + j]; };

  const auto& rows_touched = s_bar[0];
  const auto& cols_deleted = r_bar[0];
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j)
      if (!rows_touched[i] && !cols_deleted[j] && start.at(i, j)) cell(i, j) += 1;

  for (std::size_t t = 0; t < T; ++t)
    for (int i = 0; i < M; ++i) {
      if (!s_mask[t][i] || s_bar[t + 1][i]) continue;
      for (int j = 0; j < N; ++j)
        if (!r_bar[t][j]) cell(i, j) += 1;
    }

  MatrixState out(M, N);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j) {
      if (cell(i, j) > 1) throw diagnostic_error("closed-form terms overlap; entries must stay binary");
      if (cell(i, j) == 1) out.set_entry(i, j);
    }
  return out;
}

/// Sequential replay of the same step list (row sets first within each step).
inline MatrixState replay_steps(MatrixState state, const std::vector<std::vector<int>>& additions,
                                const std::vector<std::vector<int>>& deletions) {
  if (additions.size() != deletions.size())
    throw invalid_input("additions and deletions must have the same length");
  for (std::size_t t = 0; t < additions.size(); ++t) {
    for (int i : additions[t]) state.set_row(i);
    for (int j : deletions[t]) state.zero_column(j);
  }
  return state;
}

}  // namespace immunechain
