#pragma once

#include "varfast/attention.hpp"
#include "varfast/tensor.hpp"

namespace varfast {

// Upper bound on |Attn(X) - Attn(X')|_inf for every X with |X - X'|_inf <= e,
// computed from the known input X' only:
//   ev    = e * colsum(W_V), and likewise eq, ek
//   Delta = d (eq (|X'W_K| + ek) + |X'W_Q| ek)  bounds every score change
//   |dP|_1 <= exp(2 Delta) - 1                 per softmax row
//   bound = ev + (exp(2 Delta) - 1) (halfrange(X'W_V) + ev)
double attention_perturbation_bound(const FlatMatrix& x_known, const AttentionParams& p, double e);

// Largest half column range (max - min) / 2 over the columns of m.
double max_half_range(const FlatMatrix& m) noexcept;

}  // namespace varfast
