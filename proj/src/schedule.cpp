#include "varfast/schedule.hpp"

#include <limits>
#include <string>

#include "varfast/errors.hpp"

namespace varfast {

PyramidSchedule::PyramidSchedule(int alpha, int num_scales) : alpha_(alpha), num_scales_(num_scales) {
  if (alpha < 2) throw ConfigError("alpha must be >= 2, got " + std::to_string(alpha));
  if (num_scales < 1) throw ConfigError("num_scales must be >= 1, got " + std::to_string(num_scales));
  std::size_t side = 1;
  sides_.reserve(static_cast<std::size_t>(num_scales));
  for (int k = 1; k <= num_scales; ++k) {
    sides_.push_back(side);
    if (k < num_scales) {
      if (side > std::numeric_limits<std::uint32_t>::max() / static_cast<std::size_t>(alpha)) {
        throw ConfigError("pyramid side overflows");
      }
      side *= static_cast<std::size_t>(alpha);
    }
  }
}

std::size_t PyramidSchedule::side(int k) const {
  if (k < 1 || k > num_scales_) throw DimensionMismatch("scale index " + std::to_string(k) + " out of range");
  return sides_[static_cast<std::size_t>(k - 1)];
}

std::size_t PyramidSchedule::tokens_through(int k) const {
  if (k < 0 || k > num_scales_) throw DimensionMismatch("scale index " + std::to_string(k) + " out of range");
  std::size_t total = 0;
  for (int r = 0; r < k; ++r) total += sides_[static_cast<std::size_t>(r)] * sides_[static_cast<std::size_t>(r)];
  return total;
}

std::size_t PyramidSchedule::geometric_token_count(int alpha, int k) {
  if (alpha < 2 || k < 0) throw ConfigError("geometric_token_count: need alpha >= 2 and k >= 0");
  const auto a2 = static_cast<std::size_t>(alpha) * static_cast<std::size_t>(alpha);
  std::size_t power = 1;
  for (int i = 0; i < k; ++i) power *= a2;
  return (power - 1) / (a2 - 1);
}

}  // namespace varfast
