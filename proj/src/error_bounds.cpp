#include "varfast/error_bounds.hpp"

#include <algorithm>
#include <cmath>

namespace varfast {

double max_half_range(const FlatMatrix& m) noexcept {
  double best = 0.0;
  for (std::size_t l = 0; l < m.cols(); ++l) {
    double lo = INFINITY;
    double hi = -INFINITY;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      lo = std::min(lo, m.at(i, l));
      hi = std::max(hi, m.at(i, l));
    }
    if (m.rows() > 0) best = std::max(best, 0.5 * (hi - lo));
  }
  return best;
}

double attention_perturbation_bound(const FlatMatrix& x_known, const AttentionParams& p, double e) {
  if (e == 0.0) return 0.0;
  const double d = static_cast<double>(p.dim());
  const double eq = e * max_col_abs_sum(p.w_q);
  const double ek = e * max_col_abs_sum(p.w_k);
  const double ev = e * max_col_abs_sum(p.w_v);
  const double q_norm = inf_norm(matmul(x_known, p.w_q));
  const double k_norm = inf_norm(matmul(x_known, p.w_k));
  const double spread = max_half_range(matmul(x_known, p.w_v));
  const double score_shift = d * (eq * (k_norm + ek) + q_norm * ek);
  return ev + std::expm1(2.0 * score_shift) * (spread + ev);
}

}  // namespace varfast
