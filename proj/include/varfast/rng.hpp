#pragma once

#include <cstdint>

namespace varfast {

// Counter-based SplitMix64 stream.
//
// Draw number c (0-based) of a stream with key s is
//   mix(s + (c + 1) * 0x9E3779B97F4A7C15)
// where mix is the SplitMix64 finaliser
//   z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//   z ^= z >> 27; z *= 0x94D049BB133111EB;
//   z ^= z >> 31;
// All arithmetic is modulo 2^64, so streams are identical on every platform.
// Independent substreams are keyed by substream(seed, index), which lets
// parallel trials draw without sharing state.
class Rng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit Rng(std::uint64_t seed) noexcept : key_(seed) {}

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  // Key of the index-th child stream of seed.
  static std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix(seed ^ mix(index + 0x632BE59BD9B4E019ULL));
  }

  static Rng substream(std::uint64_t seed, std::uint64_t index) noexcept {
    return Rng(substream_key(seed, index));
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix(key_ + counter_ * kGamma);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next_unit(); }

  // Uniform integer in [lo, hi] (inclusive). Modulo bias is negligible for the
  // small ranges used here and keeps the mapping portable.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace varfast
