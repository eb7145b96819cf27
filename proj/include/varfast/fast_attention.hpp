#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "varfast/attention.hpp"
#include "varfast/op_counter.hpp"
#include "varfast/tensor.hpp"

namespace varfast {

struct ApproxConfig {
  double delta = 1e-6;  // entrywise relative error target, (0, 0.1]
  int g_max = 24;       // largest admissible Taylor degree
  double r_bound = 0.5; // entry bound for inputs and weights

  void validate() const;
};

// Smallest g with b^(g+1)/(g+1)! <= delta * exp(-2b). For |s| <= b this makes
// |T_g(s) - e^s| <= delta * e^-b <= delta * e^s, i.e. every approximated
// entry has relative error at most delta and stays positive.
// Throws RangeTooLarge when no g <= g_max qualifies.
int select_degree(double score_bound, double delta, int g_max);

// Non-throwing form: the degree, or -1 when none qualifies.
int try_select_degree(double score_bound, double delta, int g_max) noexcept;

// Whether degree g satisfies the criterion for the given bound.
bool degree_satisfies(double score_bound, double delta, int g) noexcept;

// Symmetric-monomial features of the truncated exponential:
// phi(q)_m = q^m / sqrt(prod_i m_i!) for every multiset m over [d] with
// |m| <= g, so <phi(q), phi(k)> = sum_{t<=g} <q,k>^t / t!.
// Multisets are listed by size, then lexicographically as non-decreasing
// index sequences; each one extends a parent by its largest index, which is
// how feature_map builds them with two multiplications apiece.
class PolyFeatureMap {
 public:
  PolyFeatureMap(std::size_t dim, int degree);

  std::size_t dim() const noexcept { return dim_; }
  int degree() const noexcept { return degree_; }
  std::size_t size() const noexcept { return parent_.size(); }

  // Multiplicities m_1..m_d of feature f.
  std::vector<int> exponents(std::size_t f) const;
  // sqrt(multinomial(|m|; m) / |m|!) = 1 / sqrt(prod_i m_i!).
  double coefficient(std::size_t f) const;

  void apply(std::span<const double> q, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> q) const;

  // C(d + g, g).
  static std::size_t feature_count(std::size_t dim, int degree);

 private:
  std::size_t dim_;
  int degree_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> last_;
  std::vector<double> step_;  // 1 / sqrt(multiplicity of the last index)
};

std::vector<double> feature_map(std::span<const double> q, const PolyFeatureMap& fm);

struct LowRankFactors {
  FlatMatrix u;  // L x k, rows phi(Q_i)
  FlatMatrix v;  // L x k, rows phi(K_j)
  int degree = 0;
  double score_bound = 0.0;  // b = d * |Q|_inf * |K|_inf
  std::size_t k_feat() const noexcept { return u.cols(); }
};

// Projects, measures b, selects the degree and builds U, V.
LowRankFactors build_factors(const FlatMatrix& x, const AttentionParams& p, const ApproxConfig& cfg,
                             OpCounter* ops = nullptr);

// Same with a caller-chosen degree (no accuracy guarantee implied).
LowRankFactors build_factors_with_degree(const FlatMatrix& x, const AttentionParams& p, int degree,
                                         OpCounter* ops = nullptr);

struct FastAttentionResult {
  FlatMatrix output;
  int degree = 0;
  std::size_t k_feat = 0;
  double score_bound = 0.0;
  double value_norm = 0.0;   // |X W_V|_inf
  double error_bound = 0.0;  // 2 delta |X W_V|_inf / (1 - delta)
};

// D~^{-1} U (V^T (X W_V)) with D~ = diag(U (V^T 1)); nothing L x L is formed.
FlatMatrix attn_fast(const FlatMatrix& x, const AttentionParams& p, const ApproxConfig& cfg,
                     OpCounter* ops = nullptr);
FastAttentionResult attn_fast_traced(const FlatMatrix& x, const AttentionParams& p, const ApproxConfig& cfg,
                                     OpCounter* ops = nullptr);
// Fixed-degree evaluation; error_bound is filled with the delta contract only
// if the degree meets the criterion for this input, otherwise +inf.
FastAttentionResult attn_fast_with_degree(const FlatMatrix& x, const AttentionParams& p, int degree,
                                          double delta, OpCounter* ops = nullptr);

// Additive error promised by attn_fast for a given delta and |X W_V|_inf.
double fast_error_bound(double delta, double value_norm) noexcept;

}  // namespace varfast
