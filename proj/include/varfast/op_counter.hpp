#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace varfast {

// Scalar operation tallies. Every kernel adds a closed-form count derived
// from its loop structure and the shapes involved, so the totals never
// depend on data values or on the thread count.
struct OpCounter {
  std::uint64_t mults = 0;
  std::uint64_t adds = 0;
  std::uint64_t exps = 0;

  OpCounter& operator+=(const OpCounter& o) noexcept {
    mults += o.mults;
    adds += o.adds;
    exps += o.exps;
    return *this;
  }
  friend OpCounter operator+(OpCounter a, const OpCounter& b) noexcept { return a += b; }
  friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

inline void tally(OpCounter* ops, const OpCounter& c) noexcept {
  if (ops) *ops += c;
}

enum class Stage { Stage1Attn = 0, Stage1Up = 1, Stage2 = 2, Stage3 = 3 };
inline constexpr std::array<Stage, 4> kAllStages = {Stage::Stage1Attn, Stage::Stage1Up, Stage::Stage2,
                                                    Stage::Stage3};
std::string_view stage_name(Stage s) noexcept;

struct StageCounters {
  std::array<OpCounter, 4> by_stage{};

  OpCounter& operator[](Stage s) noexcept { return by_stage[static_cast<std::size_t>(s)]; }
  const OpCounter& operator[](Stage s) const noexcept { return by_stage[static_cast<std::size_t>(s)]; }
  OpCounter stage1() const noexcept { return (*this)[Stage::Stage1Attn] + (*this)[Stage::Stage1Up]; }
  OpCounter total() const noexcept;
  friend bool operator==(const StageCounters&, const StageCounters&) = default;
};

// Softmax attention on L tokens of width d:
//   mults = L^2(2d-1) + 2Ld(2d-1) + L^2 d + Ld(2d-1)
//   adds  = L(L-1)   (normaliser row sums)
//   exps  = L^2
OpCounter count_attn_exact(std::size_t tokens, std::size_t d) noexcept;

// Low-rank attention with k feature columns:
//   projections 3Ld(2d-1), feature rows 2L(k-1), V^T[XW_V | 1] and
//   U(.) at Lk(d+1) each, normalisation Ld.
//   adds  = k(L-1) + L(k-1)   (normaliser V^T 1 and U (V^T 1))
OpCounter count_attn_fast(std::size_t tokens, std::size_t d, std::size_t k_feat) noexcept;

// Separable 4x4 resampling from (h, w) to (H, W) with c channels.
// Zero when the target equals the source (identity).
OpCounter count_up_interpolate(std::size_t h, std::size_t w, std::size_t H, std::size_t W,
                               std::size_t c) noexcept;

// 3x3 zero-padded convolution; only in-range taps are counted, i.e.
// (3h-2)(3w-2) taps per input/output channel pair, plus one bias add each.
OpCounter count_conv(std::size_t h, std::size_t w, std::size_t c_in, std::size_t c_out) noexcept;

}  // namespace varfast
