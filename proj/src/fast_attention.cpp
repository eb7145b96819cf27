#include "varfast/fast_attention.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "varfast/errors.hpp"
#include "varfast/parallel.hpp"

namespace varfast {

void ApproxConfig::validate() const {
  if (!(delta > 0.0 && delta <= 0.1)) throw ConfigError("delta must lie in (0, 0.1]");
  if (g_max < 1) throw ConfigError("g_max must be >= 1");
  if (!(r_bound > 0.0) || !std::isfinite(r_bound)) throw ConfigError("r_bound must be positive and finite");
}

bool degree_satisfies(double score_bound, double delta, int g) noexcept {
  if (g < 0 || !(delta > 0.0) || !(score_bound >= 0.0) || !std::isfinite(score_bound)) return false;
  if (score_bound == 0.0) return true;
  const double lhs = (g + 1) * std::log(score_bound) - std::lgamma(static_cast<double>(g) + 2.0);
  return lhs <= std::log(delta) - 2.0 * score_bound;
}

int try_select_degree(double score_bound, double delta, int g_max) noexcept {
  for (int g = 0; g <= g_max; ++g) {
    if (degree_satisfies(score_bound, delta, g)) return g;
  }
  return -1;
}

int select_degree(double score_bound, double delta, int g_max) {
  if (std::isnan(score_bound) || score_bound < 0.0) throw Error("select_degree: score bound must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("select_degree: delta must lie in (0, 1)");
  const int g = try_select_degree(score_bound, delta, g_max);
  if (g < 0) throw RangeTooLarge(score_bound, g_max);
  return g;
}

namespace {

// Keeps U and V (L x k each) within reach of desk memory.
constexpr std::size_t kMaxFeatures = std::size_t{1} << 24;

}  // namespace

std::size_t PolyFeatureMap::feature_count(std::size_t dim, int degree) {
  if (degree < 0) throw Error("feature_count: negative degree");
  // C(d + g, g) built as prod_{t=1..g} (d + t) / t, exact at every step.
  std::size_t c = 1;
  for (int t = 1; t <= degree; ++t) {
    const std::size_t num = dim + static_cast<std::size_t>(t);
    if (c > std::numeric_limits<std::size_t>::max() / num) return std::numeric_limits<std::size_t>::max();
    c = c * num / static_cast<std::size_t>(t);
  }
  return c;
}

PolyFeatureMap::PolyFeatureMap(std::size_t dim, int degree) : dim_(dim), degree_(degree) {
  if (dim == 0) throw DimensionMismatch("feature map needs dim >= 1");
  const std::size_t total = feature_count(dim, degree);
  if (total > kMaxFeatures) {
    throw Error("feature map with d=" + std::to_string(dim) + ", g=" + std::to_string(degree) + " has " +
                std::to_string(total) + " features, above the supported maximum");
  }
  parent_.reserve(total);
  last_.reserve(total);
  step_.reserve(total);
  std::vector<std::size_t> last_count;
  last_count.reserve(total);
  parent_.push_back(0);
  last_.push_back(0);
  step_.push_back(1.0);
  last_count.push_back(0);
  std::size_t begin = 0;
  std::size_t end = 1;
  for (int t = 1; t <= degree; ++t) {
    for (std::size_t p = begin; p < end; ++p) {
      const std::size_t first = (t == 1) ? 0 : last_[p];
      for (std::size_t j = first; j < dim; ++j) {
        const std::size_t mult = (t > 1 && j == last_[p]) ? last_count[p] + 1 : 1;
        parent_.push_back(p);
        last_.push_back(j);
        step_.push_back(1.0 / std::sqrt(static_cast<double>(mult)));
        last_count.push_back(mult);
      }
    }
    begin = end;
    end = parent_.size();
  }
}

std::vector<int> PolyFeatureMap::exponents(std::size_t f) const {
  if (f >= size()) throw DimensionMismatch("feature index out of range");
  std::vector<int> m(dim_, 0);
  for (; f != 0; f = parent_[f]) ++m[last_[f]];
  return m;
}

double PolyFeatureMap::coefficient(std::size_t f) const {
  if (f >= size()) throw DimensionMismatch("feature index out of range");
  double c = 1.0;
  for (; f != 0; f = parent_[f]) c *= step_[f];
  return c;
}

void PolyFeatureMap::apply(std::span<const double> q, std::span<double> out) const {
  if (q.size() != dim_) throw DimensionMismatch("feature_map: vector length differs from the map dimension");
  if (out.size() != size()) throw DimensionMismatch("feature_map: output length differs from the feature count");
  out[0] = 1.0;
  for (std::size_t f = 1; f < out.size(); ++f) out[f] = out[parent_[f]] * q[last_[f]] * step_[f];
}

std::vector<double> PolyFeatureMap::apply(std::span<const double> q) const {
  std::vector<double> out(size());
  apply(q, out);
  return out;
}

std::vector<double> feature_map(std::span<const double> q, const PolyFeatureMap& fm) { return fm.apply(q); }

namespace {

FlatMatrix feature_rows(const FlatMatrix& m, const PolyFeatureMap& fm) {
  FlatMatrix out(m.rows(), fm.size());
  parallel_for(m.rows(), [&](std::size_t i) { fm.apply(m.row(i), out.row(i)); });
  return out;
}

LowRankFactors factors_from(const FlatMatrix& q, const FlatMatrix& k, int degree, double b) {
  const PolyFeatureMap fm(q.cols(), degree);
  LowRankFactors f;
  f.u = feature_rows(q, fm);
  f.v = feature_rows(k, fm);
  f.degree = degree;
  f.score_bound = b;
  return f;
}

void check_input(const FlatMatrix& x, const AttentionParams& p) {
  if (x.cols() != p.dim()) throw DimensionMismatch("fast attention input width differs from the weights");
  if (x.rows() == 0) throw DimensionMismatch("fast attention input has no rows");
}

double score_bound_of(const FlatMatrix& q, const FlatMatrix& k) {
  return static_cast<double>(q.cols()) * inf_norm(q) * inf_norm(k);
}

}  // namespace

LowRankFactors build_factors(const FlatMatrix& x, const AttentionParams& p, const ApproxConfig& cfg,
                             OpCounter* ops) {
  check_input(x, p);
  const FlatMatrix q = matmul(x, p.w_q);
  const FlatMatrix k = matmul(x, p.w_k);
  const double b = score_bound_of(q, k);
  const int g = select_degree(b, cfg.delta, cfg.g_max);
  LowRankFactors f = factors_from(q, k, g, b);
  const std::uint64_t L = x.rows();
  const std::uint64_t d = p.dim();
  tally(ops, {2 * L * d * (2 * d - 1) + 2 * L * (f.k_feat() - 1), 0, 0});
  return f;
}

LowRankFactors build_factors_with_degree(const FlatMatrix& x, const AttentionParams& p, int degree,
                                         OpCounter* ops) {
  check_input(x, p);
  const FlatMatrix q = matmul(x, p.w_q);
  const FlatMatrix k = matmul(x, p.w_k);
  LowRankFactors f = factors_from(q, k, degree, score_bound_of(q, k));
  const std::uint64_t L = x.rows();
  const std::uint64_t d = p.dim();
  tally(ops, {2 * L * d * (2 * d - 1) + 2 * L * (f.k_feat() - 1), 0, 0});
  return f;
}

double fast_error_bound(double delta, double value_norm) noexcept {
  return 2.0 * delta * value_norm / (1.0 - delta);
}

namespace {

// D~^{-1} U (V^T [XW_V | 1]).
FlatMatrix apply_factors(const LowRankFactors& f, const FlatMatrix& values) {
  const std::size_t L = values.rows();
  const std::size_t d = values.cols();
  const std::size_t k = f.k_feat();
  const std::size_t w = d + 1;
  FlatMatrix t(k, w);
  parallel_for(k, [&](std::size_t c) {
    auto row = t.row(c);
    for (std::size_t j = 0; j < L; ++j) {
      const double vjc = f.v.at(j, c);
      const auto val = values.row(j);
      for (std::size_t l = 0; l < d; ++l) row[l] += vjc * val[l];
      row[d] += vjc;
    }
  });
  FlatMatrix out(L, d);
  std::vector<double> bad(L, 0.0);
  parallel_for(L, [&](std::size_t i) {
    std::vector<double> acc(w, 0.0);
    const auto ui = f.u.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      const auto tc = t.row(c);
      for (std::size_t l = 0; l < w; ++l) acc[l] += ui[c] * tc[l];
    }
    if (!(acc[d] > 0.0)) {
      bad[i] = 1.0;
      return;
    }
    const double inv = 1.0 / acc[d];
    auto row = out.row(i);
    for (std::size_t l = 0; l < d; ++l) row[l] = acc[l] * inv;
  });
  for (std::size_t i = 0; i < L; ++i) {
    if (bad[i] != 0.0) throw NonPositiveRowSum(i);
  }
  return out;
}

FastAttentionResult finish(const FlatMatrix& x, const AttentionParams& p, const LowRankFactors& f, OpCounter* ops) {
  const FlatMatrix values = matmul(x, p.w_v);
  FastAttentionResult r;
  r.output = apply_factors(f, values);
  r.degree = f.degree;
  r.k_feat = f.k_feat();
  r.score_bound = f.score_bound;
  r.value_norm = inf_norm(values);
  const std::uint64_t L = x.rows();
  const std::uint64_t d = p.dim();
  const std::uint64_t k = f.k_feat();
  OpCounter rest;
  rest.mults = L * d * (2 * d - 1) + 2 * L * k * (d + 1) + L * d;
  rest.adds = k * (L - 1) + L * (k - 1);
  tally(ops, rest);
  return r;
}

}  // namespace

FastAttentionResult attn_fast_traced(const FlatMatrix& x, const AttentionParams& p, const ApproxConfig& cfg,
                                     OpCounter* ops) {
  const LowRankFactors f = build_factors(x, p, cfg, ops);
  FastAttentionResult r = finish(x, p, f, ops);
  r.error_bound = fast_error_bound(cfg.delta, r.value_norm);
  return r;
}

FlatMatrix attn_fast(const FlatMatrix& x, const AttentionParams& p, const ApproxConfig& cfg, OpCounter* ops) {
  return attn_fast_traced(x, p, cfg, ops).output;
}

FastAttentionResult attn_fast_with_degree(const FlatMatrix& x, const AttentionParams& p, int degree, double delta,
                                          OpCounter* ops) {
  const LowRankFactors f = build_factors_with_degree(x, p, degree, ops);
  FastAttentionResult r = finish(x, p, f, ops);
  r.error_bound = degree_satisfies(f.score_bound, delta, degree) ? fast_error_bound(delta, r.value_norm)
                                                                 : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace varfast
