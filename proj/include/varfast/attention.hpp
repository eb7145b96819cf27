#pragma once

#include <cstddef>

#include "varfast/op_counter.hpp"
#include "varfast/rng.hpp"
#include "varfast/tensor.hpp"

namespace varfast {

// Query/key/value projections of one attention layer, all d x d.
struct AttentionParams {
  FlatMatrix w_q;
  FlatMatrix w_k;
  FlatMatrix w_v;
  double entry_bound = 1.0;

  AttentionParams() = default;
  AttentionParams(FlatMatrix q, FlatMatrix k, FlatMatrix v, double bound);

  std::size_t dim() const noexcept { return w_q.rows(); }

  // Entries i.i.d. uniform on [-bound, bound].
  static AttentionParams random(std::size_t d, double bound, Rng& rng);
};

// a (n x m) times b (m x p), fixed ascending reduction order.
FlatMatrix matmul(const FlatMatrix& a, const FlatMatrix& b);

// Largest column absolute sum, the inf->inf operator norm of x -> x W for row vectors.
double max_col_abs_sum(const FlatMatrix& w) noexcept;

inline constexpr std::size_t kMaterializeLimit = 4096;

// Softmax attention D^{-1} A X W_V with A_ij = exp(<X_i W_Q, X_j W_K>).
// Rows are evaluated in the shifted form exp(s_ij - max_j s_ij), which leaves
// the normalised result unchanged.
FlatMatrix attn_exact(const FlatMatrix& x, const AttentionParams& p, OpCounter* ops = nullptr);

// The unnormalised matrix A itself, for tests and small oracles.
FlatMatrix attn_matrix(const FlatMatrix& x, const AttentionParams& p);

}  // namespace varfast
