#include "varfast/op_counter.hpp"

namespace varfast {

std::string_view stage_name(Stage s) noexcept {
  switch (s) {
    case Stage::Stage1Attn: return "stage1_attn";
    case Stage::Stage1Up: return "stage1_up";
    case Stage::Stage2: return "stage2";
    case Stage::Stage3: return "stage3";
  }
  return "unknown";
}

OpCounter StageCounters::total() const noexcept {
  OpCounter sum;
  for (const auto& c : by_stage) sum += c;
  return sum;
}

OpCounter count_attn_exact(std::size_t tokens, std::size_t d) noexcept {
  const std::uint64_t L = tokens;
  const std::uint64_t D = d;
  const std::uint64_t dot = 2 * D - 1;
  OpCounter c;
  c.mults = L * L * dot + 2 * L * D * dot + L * L * D + L * D * dot;
  c.adds = L * (L - 1);
  c.exps = L * L;
  return c;
}

OpCounter count_attn_fast(std::size_t tokens, std::size_t d, std::size_t k_feat) noexcept {
  const std::uint64_t L = tokens;
  const std::uint64_t D = d;
  const std::uint64_t k = k_feat;
  OpCounter c;
  c.mults = 3 * L * D * (2 * D - 1) + 2 * L * (k - 1) + 2 * L * k * (D + 1) + L * D;
  c.adds = k * (L - 1) + L * (k - 1);
  c.exps = 0;
  return c;
}

OpCounter count_up_interpolate(std::size_t h, std::size_t w, std::size_t H, std::size_t W,
                               std::size_t c) noexcept {
  if (h == H && w == W) return {};
  const std::uint64_t rows = H;
  const std::uint64_t cols = W;
  const std::uint64_t entries = rows * cols * c;
  OpCounter out;
  out.mults = 5 * (rows + cols) + 16 * rows * cols + 16 * entries;
  out.adds = 3 * (rows + cols) + 16 * entries;
  return out;
}

OpCounter count_conv(std::size_t h, std::size_t w, std::size_t c_in, std::size_t c_out) noexcept {
  const std::uint64_t taps = (3 * static_cast<std::uint64_t>(h) - 2) * (3 * static_cast<std::uint64_t>(w) - 2);
  OpCounter out;
  out.mults = c_out * c_in * taps;
  out.adds = c_out * c_in * taps;
  return out;
}

}  // namespace varfast
