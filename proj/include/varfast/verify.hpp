#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "varfast/pipeline.hpp"

namespace varfast {

struct TrialParams {
  double eps = 0.0;
  double r = 0.0;
  int g = 0;
  std::size_t k = 0;
  std::size_t d = 0;
  std::size_t c_in = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct BoundReport {
  std::string suite;
  std::size_t trials = 0;
  std::size_t skipped = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;
  double threshold = 1.0;     // a trial violates when lhs / rhs > threshold
  double max_ratio_alt = 0.0; // B4 only: ratio against the R^(g+2) form
  std::vector<TrialParams> params;

  bool passed() const noexcept { return violations == 0; }
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  // Multiplies every right-hand side. Values below 1 exist only as a negative
  // control for the violation path.
  double bound_scale = 1.0;
};

// Slack on the exact-arithmetic bounds that absorbs double rounding in the lhs.
inline constexpr double kRoundingSlack = 1e-12;
// Safety factor for the bound whose proof chain loses constants.
inline constexpr double kSafetyFactor = 4.0;

// Right-hand sides in exact arithmetic.
// sum_i |a_i| i R^(i-1): Lipschitz constant of sum_i a_i x^i on [-R, R].
double poly_lipschitz_constant(std::span<const double> coeffs, double r);
// 2 k eps R + k eps^2 for inner products of k-vectors with entries in [-R, R]
// whose perturbations are bounded by eps.
double inner_product_bound(std::size_t k, double eps, double r);
// 9 c_in eps R for a 3x3 convolution with kernel entries bounded by R.
double conv_error_bound(std::size_t c_in, double eps, double r);

// Trial t draws from Rng::substream(opts.seed, t); results do not depend on
// evaluation order or thread count.
BoundReport verify_poly_lipschitz(std::size_t trials, const VerifyOptions& opts = {});
BoundReport verify_inner_product(std::size_t trials, const VerifyOptions& opts = {});
BoundReport verify_attention_error(std::size_t trials, const VerifyOptions& opts = {});
BoundReport verify_upinterp_nonexpansive(std::size_t trials, const VerifyOptions& opts = {});
BoundReport verify_conv_error(std::size_t trials, const VerifyOptions& opts = {});

// End-to-end FAST vs EXACT over `seeds` seeds; seeds where degree selection
// fails are skipped.
BoundReport verify_mode_equivalence(std::size_t seeds, const ModelConfig& cfg, const VerifyOptions& opts = {});

// Pieces of the composed attention bound used by verify_attention_error.
struct AttentionBoundTerms {
  int degree = 0;
  std::size_t k_feat = 0;
  double r_eff = 0.0;
  double rhs = 0.0;       // C k R^(g+1) d eps + delta'
  double rhs_alt = 0.0;   // C k R^(g+2) d eps + delta'
  bool usable = false;    // false when the perturbation is too large for the constant C
};

AttentionBoundTerms attention_error_rhs(const FlatMatrix& x, const FlatMatrix& x_pert, const AttentionParams& p,
                                        double eps, double delta, int degree);

struct PhaseRow {
  double c = 0.0;
  double r = 0.0;
  double b = 0.0;
  int g = 0;         // g_max + 1 on FAIL rows
  bool ok = false;
  double err = 0.0;  // measured |fast - exact|_inf, NaN on FAIL rows
};

// R = c sqrt(ln n), b = d R^2 with W_Q = W_K = W_V = I and X uniform on
// [-R, R]^(m x d), m = min(n, 256).
std::vector<PhaseRow> phase_sweep(std::size_t n, std::span<const double> c_values, double delta, int g_max,
                                  std::size_t d = 4, std::uint64_t seed = 0);

}  // namespace varfast
