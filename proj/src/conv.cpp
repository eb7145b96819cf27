#include "varfast/conv.hpp"

#include <string>

#include "varfast/errors.hpp"
#include "varfast/parallel.hpp"

namespace varfast {

ConvKernelSet::ConvKernelSet(std::size_t c_in, std::size_t c_out, std::vector<double> weights, double bias)
    : c_in_(c_in), c_out_(c_out), weights_(std::move(weights)), bias_(bias) {
  if (c_in == 0 || c_out == 0) throw DimensionMismatch("conv kernels need c_in, c_out >= 1");
  if (weights_.size() != 9 * c_in * c_out) {
    throw DimensionMismatch("conv weights have " + std::to_string(weights_.size()) + " entries, expected " +
                            std::to_string(9 * c_in * c_out));
  }
}

ConvKernelSet ConvKernelSet::zeros(std::size_t c_in, std::size_t c_out, double bias) {
  return ConvKernelSet(c_in, c_out, std::vector<double>(9 * c_in * c_out, 0.0), bias);
}

ConvKernelSet ConvKernelSet::random(std::size_t c_in, std::size_t c_out, double bound, Rng& rng) {
  std::vector<double> w(9 * c_in * c_out);
  for (double& v : w) v = rng.uniform(-bound, bound);
  const double bias = rng.uniform(-bound, bound);
  return ConvKernelSet(c_in, c_out, std::move(w), bias);
}

double ConvKernelSet::entry_norm() const noexcept { return inf_norm(weights_); }

TokenMap conv_forward(const TokenMap& x, const ConvKernelSet& k, OpCounter* ops) {
  if (x.channels() != k.c_in()) {
    throw DimensionMismatch("conv_forward: input has " + std::to_string(x.channels()) + " channels, kernels expect " +
                            std::to_string(k.c_in()));
  }
  const std::size_t h = x.height();
  const std::size_t w = x.width();
  const std::size_t c_in = k.c_in();
  const std::size_t c_out = k.c_out();
  TokenMap out(h, w, c_out);
  parallel_for(h, [&](std::size_t i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t l = 0; l < c_out; ++l) {
        double acc = k.bias();
        for (std::size_t m = 0; m < 3; ++m) {
          if (i + m < 1 || i + m - 1 >= h) continue;
          for (std::size_t n = 0; n < 3; ++n) {
            if (j + n < 1 || j + n - 1 >= w) continue;
            for (std::size_t c = 0; c < c_in; ++c) acc += x.at(i + m - 1, j + n - 1, c) * k.weight(l, m, n, c);
          }
        }
        out.at(i, j, l) = acc;
      }
    }
  });
  tally(ops, count_conv(h, w, c_in, c_out));
  return out;
}

TokenMap resnet_forward(const TokenMap& x, const ResNetBlock& block, OpCounter* ops) {
  if (block.conv1.c_in() != x.channels() || block.conv1.c_out() != x.channels() ||
      block.conv2.c_in() != x.channels() || block.conv2.c_out() != x.channels()) {
    throw DimensionMismatch("resnet_forward: block channels must equal the input channels");
  }
  TokenMap y = conv_forward(conv_forward(x, block.conv1, ops), block.conv2, ops);
  auto out = y.data();
  const auto in = x.data();
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = in[t] + out[t];
  tally(ops, {0, static_cast<std::uint64_t>(x.size()), 0});
  return y;
}

}  // namespace varfast
