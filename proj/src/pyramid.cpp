#include "varfast/pyramid.hpp"

#include <array>
#include <cmath>
#include <string>

#include "varfast/errors.hpp"

namespace varfast {

KernelChoice parse_kernel(std::string_view name) {
  if (name == "bspline") return KernelChoice::CubicBSpline;
  if (name == "catmullrom") return KernelChoice::CatmullRom;
  throw ConfigError("unknown kernel '" + std::string(name) + "' (expected bspline or catmullrom)");
}

std::string_view kernel_name(KernelChoice k) noexcept {
  return k == KernelChoice::CatmullRom ? "catmullrom" : "bspline";
}

double kernel_eval(KernelChoice choice, double x) noexcept {
  const double t = std::abs(x);
  if (!(t < 2.0)) return 0.0;
  if (choice == KernelChoice::CubicBSpline) {
    const double a = 2.0 - t;
    if (t < 1.0) {
      const double b = 1.0 - t;
      return (a * a * a - 4.0 * b * b * b) / 6.0;
    }
    return a * a * a / 6.0;
  }
  constexpr double a = -0.5;
  if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
}

namespace {

struct Taps {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

// Source taps and normalised weights for each of `target` outputs along one axis.
std::vector<Taps> axis_taps(std::size_t source, std::size_t target, KernelChoice choice) {
  std::vector<Taps> taps(target);
  const double scale = static_cast<double>(source) / static_cast<double>(target);
  const auto last = static_cast<std::ptrdiff_t>(source) - 1;
  for (std::size_t i = 0; i < target; ++i) {
    const double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
    const double base = std::floor(s);
    const double f = s - base;
    const std::array<double, 4> raw = {kernel_eval(choice, f + 1.0), kernel_eval(choice, f),
                                       kernel_eval(choice, 1.0 - f), kernel_eval(choice, 2.0 - f)};
    const double sum = raw[0] + raw[1] + raw[2] + raw[3];
    const double inv = 1.0 / sum;
    for (int t = 0; t < 4; ++t) {
      const auto src = static_cast<std::ptrdiff_t>(base) - 1 + t;
      taps[i].index[static_cast<std::size_t>(t)] =
          static_cast<std::size_t>(src < 0 ? 0 : (src > last ? last : src));
      taps[i].weight[static_cast<std::size_t>(t)] = raw[static_cast<std::size_t>(t)] * inv;
    }
  }
  return taps;
}

}  // namespace

TokenMap up_interpolate(const TokenMap& x, std::size_t target_h, std::size_t target_w, KernelChoice choice,
                        OpCounter* ops) {
  if (target_h < x.height() || target_w < x.width()) {
    throw InvalidTarget("up_interpolate: target " + std::to_string(target_h) + "x" + std::to_string(target_w) +
                        " is smaller than source " + std::to_string(x.height()) + "x" +
                        std::to_string(x.width()));
  }
  if (target_h == x.height() && target_w == x.width()) return x;

  const auto rows = axis_taps(x.height(), target_h, choice);
  const auto cols = axis_taps(x.width(), target_w, choice);
  const std::size_t c = x.channels();
  TokenMap out(target_h, target_w, c);
  std::array<double, 16> w2{};
  for (std::size_t i = 0; i < target_h; ++i) {
    const Taps& ry = rows[i];
    for (std::size_t j = 0; j < target_w; ++j) {
      const Taps& rx = cols[j];
      for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) w2[a * 4 + b] = ry.weight[a] * rx.weight[b];
      }
      for (std::size_t l = 0; l < c; ++l) {
        double acc = 0.0;
        for (std::size_t a = 0; a < 4; ++a) {
          for (std::size_t b = 0; b < 4; ++b) acc += w2[a * 4 + b] * x.at(ry.index[a], rx.index[b], l);
        }
        out.at(i, j, l) = acc;
      }
    }
  }
  tally(ops, count_up_interpolate(x.height(), x.width(), target_h, target_w, c));
  return out;
}

std::vector<TokenMap> pyramid_up(const TokenMap& x_init, std::span<const TokenMap> maps,
                                 const PyramidSchedule& schedule, KernelChoice choice, OpCounter* ops) {
  if (x_init.height() != 1 || x_init.width() != 1) throw DimensionMismatch("pyramid_up: x_init must be 1x1");
  const auto k = static_cast<int>(maps.size());
  if (k + 1 > schedule.num_scales()) {
    throw DimensionMismatch("pyramid_up: " + std::to_string(k) + " maps exceed the schedule");
  }
  std::vector<TokenMap> out;
  out.reserve(maps.size() + 1);
  out.push_back(x_init);
  for (int r = 1; r <= k; ++r) {
    const TokenMap& m = maps[static_cast<std::size_t>(r - 1)];
    const std::size_t h = schedule.side(r);
    if (m.height() != h || m.width() != h || m.channels() != x_init.channels()) {
      throw DimensionMismatch("pyramid_up: map " + std::to_string(r) + " does not match the schedule");
    }
    const std::size_t next = schedule.side(r + 1);
    out.push_back(up_interpolate(m, next, next, choice, ops));
  }
  return out;
}

}  // namespace varfast
