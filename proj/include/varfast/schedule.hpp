#pragma once

#include <cstddef>
#include <vector>

namespace varfast {

// Scale sizes of the token pyramid: scale k (1-based) is
// alpha^(k-1) x alpha^(k-1) tokens, the last one n x n.
class PyramidSchedule {
 public:
  PyramidSchedule(int alpha, int num_scales);

  int alpha() const noexcept { return alpha_; }
  int num_scales() const noexcept { return num_scales_; }

  // Side length h_k = w_k of scale k, 1 <= k <= num_scales.
  std::size_t side(int k) const;
  // n = alpha^(K-1).
  std::size_t final_side() const { return side(num_scales_); }
  const std::vector<std::size_t>& sides() const noexcept { return sides_; }

  // L_k = sum_{i<=k} alpha^(2(i-1)), counted by summation.
  std::size_t tokens_through(int k) const;
  // (alpha^(2k) - 1) / (alpha^2 - 1), evaluated in integer arithmetic.
  static std::size_t geometric_token_count(int alpha, int k);

 private:
  int alpha_;
  int num_scales_;
  std::vector<std::size_t> sides_;
};

}  // namespace varfast
