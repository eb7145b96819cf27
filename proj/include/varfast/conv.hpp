#pragma once

#include <cstddef>
#include <vector>

#include "varfast/op_counter.hpp"
#include "varfast/rng.hpp"
#include "varfast/tensor.hpp"

namespace varfast {

// c_out kernels of shape 3 x 3 x c_in and one bias shared by every output
// channel. Kernel l, tap (m, n), input channel c lives at
// ((l * 3 + m) * 3 + n) * c_in + c.
class ConvKernelSet {
 public:
  ConvKernelSet() = default;
  ConvKernelSet(std::size_t c_in, std::size_t c_out, std::vector<double> weights, double bias);

  static ConvKernelSet zeros(std::size_t c_in, std::size_t c_out, double bias = 0.0);
  // Weights and bias i.i.d. uniform on [-bound, bound].
  static ConvKernelSet random(std::size_t c_in, std::size_t c_out, double bound, Rng& rng);

  std::size_t c_in() const noexcept { return c_in_; }
  std::size_t c_out() const noexcept { return c_out_; }
  double bias() const noexcept { return bias_; }

  double weight(std::size_t l, std::size_t m, std::size_t n, std::size_t c) const noexcept {
    return weights_[((l * 3 + m) * 3 + n) * c_in_ + c];
  }
  const std::vector<double>& weights() const noexcept { return weights_; }

  // Largest |weight|.
  double entry_norm() const noexcept;
  // 9 * c_in * entry_norm(): inf-norm Lipschitz constant of the layer.
  double lipschitz_bound() const noexcept { return 9.0 * static_cast<double>(c_in_) * entry_norm(); }

 private:
  std::size_t c_in_ = 0;
  std::size_t c_out_ = 0;
  std::vector<double> weights_;
  double bias_ = 0.0;
};

struct ResNetBlock {
  ConvKernelSet conv1;
  ConvKernelSet conv2;
};

// Y_ijl = sum_{m,n in 0..2} sum_c X_{i+m-1, j+n-1, c} K^l_{m,n,c} + b,
// out-of-range X read as zero. Stride 1, so the spatial size is preserved.
TokenMap conv_forward(const TokenMap& x, const ConvKernelSet& k, OpCounter* ops = nullptr);

// x + conv2(conv1(x)); no activation.
TokenMap resnet_forward(const TokenMap& x, const ResNetBlock& block, OpCounter* ops = nullptr);

}  // namespace varfast
