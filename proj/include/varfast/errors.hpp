#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace varfast {

// Base of every error raised by the library. Callers that only need to
// distinguish "could not approximate" from everything else catch
// RangeTooLarge first and Error second.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidTarget : public Error {
 public:
  using Error::Error;
};

class TooLargeToMaterialize : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// No polynomial degree up to the configured cap meets the accuracy target.
class RangeTooLarge : public Error {
 public:
  RangeTooLarge(double score_bound, int g_max)
      : Error("no degree <= " + std::to_string(g_max) +
              " reaches the target accuracy for score bound " + std::to_string(score_bound)),
        score_bound_(score_bound),
        g_max_(g_max) {}

  double score_bound() const noexcept { return score_bound_; }
  int g_max() const noexcept { return g_max_; }

 private:
  double score_bound_;
  int g_max_;
};

class NonPositiveRowSum : public Error {
 public:
  explicit NonPositiveRowSum(std::size_t row)
      : Error("approximate normaliser is not positive in row " + std::to_string(row)), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class NumericOverflow : public Error {
 public:
  NumericOverflow(std::size_t i, std::size_t j)
      : Error("non-finite attention score at (" + std::to_string(i) + ", " + std::to_string(j) + ")"),
        i_(i),
        j_(j) {}
  std::size_t row() const noexcept { return i_; }
  std::size_t col() const noexcept { return j_; }

 private:
  std::size_t i_;
  std::size_t j_;
};

}  // namespace varfast
