#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "varfast/schedule.hpp"

namespace varfast {

// h x w x c grid of doubles stored in (row, column, channel) raster order.
class TokenMap {
 public:
  TokenMap() = default;
  TokenMap(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
  TokenMap(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t pixels() const noexcept { return height_ * width_; }

  double& at(std::size_t i, std::size_t j, std::size_t l) noexcept {
    return data_[(i * width_ + j) * channels_ + l];
  }
  double at(std::size_t i, std::size_t j, std::size_t l) const noexcept {
    return data_[(i * width_ + j) * channels_ + l];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool same_shape(const TokenMap& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  friend bool operator==(const TokenMap&, const TokenMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

// Row-major rows x cols matrix of doubles (token sequences and weights).
class FlatMatrix {
 public:
  FlatMatrix() = default;
  FlatMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  FlatMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool same_shape(const FlatMatrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  friend bool operator==(const FlatMatrix&, const FlatMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Stacks the maps' tokens in scale order, raster order inside each map.
FlatMatrix flatten(std::span<const TokenMap> maps);
FlatMatrix flatten(const TokenMap& map);

// Inverse of flatten for the first k scales of the schedule.
std::vector<TokenMap> reshape_to_pyramid(const FlatMatrix& m, const PyramidSchedule& schedule, int k);
// Single h x w map view of an (h*w) x c matrix.
TokenMap reshape_to_map(const FlatMatrix& m, std::size_t height, std::size_t width);

double inf_norm(std::span<const double> values) noexcept;
inline double inf_norm(const TokenMap& m) noexcept { return inf_norm(m.data()); }
inline double inf_norm(const FlatMatrix& m) noexcept { return inf_norm(m.data()); }

double inf_norm_diff(const TokenMap& a, const TokenMap& b);
double inf_norm_diff(const FlatMatrix& a, const FlatMatrix& b);

FlatMatrix clip_entries(const FlatMatrix& m, double r_bound);

bool all_finite(std::span<const double> values) noexcept;

}  // namespace varfast
