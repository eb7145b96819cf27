#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "varfast/op_counter.hpp"
#include "varfast/schedule.hpp"
#include "varfast/tensor.hpp"

namespace varfast {

// Piecewise-cubic resampling kernels with support (-2, 2).
//  - CubicBSpline: (1/6)((2-|x|)^3 - 4(1-|x|)^3) on |x| < 1, (1/6)(2-|x|)^3 on 1 <= |x| < 2.
//    Non-negative and bounded by 2/3.
//  - CatmullRom: Keys kernel with a = -1/2. Interpolating, but has negative
//    lobes, so outputs can leave the source range.
enum class KernelChoice { CubicBSpline, CatmullRom };

KernelChoice parse_kernel(std::string_view name);
std::string_view kernel_name(KernelChoice k) noexcept;

double kernel_eval(KernelChoice choice, double x) noexcept;

// Resamples x to target_h x target_w with a 4x4 tap neighbourhood.
// Source coordinate of output row i is (i + 0.5) * h / target_h - 0.5;
// taps at floor(s) - 1 .. floor(s) + 2 take weights W(f+1), W(f), W(1-f), W(2-f)
// with f the fractional part, indices are clamped to the edge and the four
// weights renormalised to sum to one. A target equal to the source size
// returns the input unchanged.
TokenMap up_interpolate(const TokenMap& x, std::size_t target_h, std::size_t target_w,
                        KernelChoice choice = KernelChoice::CubicBSpline, OpCounter* ops = nullptr);

// Pyramid step k: [x_init, up(X_1 -> h_2), ..., up(X_k -> h_{k+1})].
std::vector<TokenMap> pyramid_up(const TokenMap& x_init, std::span<const TokenMap> maps,
                                 const PyramidSchedule& schedule,
                                 KernelChoice choice = KernelChoice::CubicBSpline, OpCounter* ops = nullptr);

}  // namespace varfast
