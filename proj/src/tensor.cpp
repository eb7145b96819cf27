#include "varfast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "varfast/errors.hpp"

namespace varfast {

TokenMap::TokenMap(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels), data_(height * width * channels, fill) {}

TokenMap::TokenMap(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (data_.size() != height * width * channels) {
    throw DimensionMismatch("token map data has " + std::to_string(data_.size()) + " entries, expected " +
                            std::to_string(height * width * channels));
  }
}

FlatMatrix::FlatMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

FlatMatrix::FlatMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionMismatch("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                            std::to_string(rows * cols));
  }
}

FlatMatrix flatten(std::span<const TokenMap> maps) {
  if (maps.empty()) return {};
  const std::size_t d = maps.front().channels();
  std::size_t rows = 0;
  for (const auto& m : maps) {
    if (m.channels() != d) {
      throw DimensionMismatch("flatten: channel counts differ (" + std::to_string(d) + " vs " +
                              std::to_string(m.channels()) + ")");
    }
    rows += m.pixels();
  }
  std::vector<double> data;
  data.reserve(rows * d);
  for (const auto& m : maps) data.insert(data.end(), m.values().begin(), m.values().end());
  return FlatMatrix(rows, d, std::move(data));
}

FlatMatrix flatten(const TokenMap& map) { return FlatMatrix(map.pixels(), map.channels(), map.values()); }

std::vector<TokenMap> reshape_to_pyramid(const FlatMatrix& m, const PyramidSchedule& schedule, int k) {
  const std::size_t expected = schedule.tokens_through(k);
  if (m.rows() != expected) {
    throw DimensionMismatch("reshape_to_pyramid: " + std::to_string(m.rows()) + " rows, schedule needs " +
                            std::to_string(expected));
  }
  std::vector<TokenMap> out;
  out.reserve(static_cast<std::size_t>(k));
  const std::size_t d = m.cols();
  auto it = m.values().begin();
  for (int r = 1; r <= k; ++r) {
    const std::size_t h = schedule.side(r);
    const auto count = static_cast<std::ptrdiff_t>(h * h * d);
    out.emplace_back(h, h, d, std::vector<double>(it, it + count));
    it += count;
  }
  return out;
}

TokenMap reshape_to_map(const FlatMatrix& m, std::size_t height, std::size_t width) {
  if (m.rows() != height * width) {
    throw DimensionMismatch("reshape_to_map: " + std::to_string(m.rows()) + " rows for a " +
                            std::to_string(height) + "x" + std::to_string(width) + " map");
  }
  return TokenMap(height, width, m.cols(), m.values());
}

double inf_norm(std::span<const double> values) noexcept {
  double best = 0.0;
  for (double v : values) best = std::max(best, std::abs(v));
  return best;
}

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) noexcept {
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, std::abs(a[i] - b[i]));
  return best;
}

}  // namespace

double inf_norm_diff(const TokenMap& a, const TokenMap& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("inf_norm_diff: token map shapes differ");
  return max_abs_diff(a.data(), b.data());
}

double inf_norm_diff(const FlatMatrix& a, const FlatMatrix& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("inf_norm_diff: matrix shapes differ");
  return max_abs_diff(a.data(), b.data());
}

FlatMatrix clip_entries(const FlatMatrix& m, double r_bound) {
  if (!(r_bound > 0.0)) throw Error("clip_entries: bound must be positive");
  std::vector<double> data = m.values();
  for (double& v : data) v = std::clamp(v, -r_bound, r_bound);
  return FlatMatrix(m.rows(), m.cols(), std::move(data));
}

bool all_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace varfast
