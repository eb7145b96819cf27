#include "varfast/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "varfast/errors.hpp"
#include "varfast/parallel.hpp"

namespace varfast {

AttentionParams::AttentionParams(FlatMatrix q, FlatMatrix k, FlatMatrix v, double bound)
    : w_q(std::move(q)), w_k(std::move(k)), w_v(std::move(v)), entry_bound(bound) {
  const std::size_t d = w_q.rows();
  for (const FlatMatrix* w : {&w_q, &w_k, &w_v}) {
    if (w->rows() != d || w->cols() != d) throw DimensionMismatch("attention weights must all be d x d");
  }
  if (!(bound > 0.0)) throw ConfigError("attention entry bound must be positive");
  for (const FlatMatrix* w : {&w_q, &w_k, &w_v}) {
    if (inf_norm(*w) > bound) throw ConfigError("attention weight entry exceeds the entry bound");
  }
}

AttentionParams AttentionParams::random(std::size_t d, double bound, Rng& rng) {
  auto draw = [&] {
    FlatMatrix w(d, d);
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    return clip_entries(w, bound);
  };
  FlatMatrix q = draw();
  FlatMatrix k = draw();
  FlatMatrix v = draw();
  return AttentionParams(std::move(q), std::move(k), std::move(v), bound);
}

FlatMatrix matmul(const FlatMatrix& a, const FlatMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionMismatch("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " times " +
                            std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  FlatMatrix out(a.rows(), b.cols());
  const std::size_t m = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < m; ++t) acc += a.at(i, t) * b.at(t, j);
      out.at(i, j) = acc;
    }
  }
  return out;
}

double max_col_abs_sum(const FlatMatrix& w) noexcept {
  double best = 0.0;
  for (std::size_t j = 0; j < w.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) s += std::abs(w.at(i, j));
    best = std::max(best, s);
  }
  return best;
}

namespace {

void check_input(const FlatMatrix& x, const AttentionParams& p) {
  if (x.cols() != p.dim()) {
    throw DimensionMismatch("attention input has " + std::to_string(x.cols()) + " columns, weights expect " +
                            std::to_string(p.dim()));
  }
  if (x.rows() == 0) throw DimensionMismatch("attention input has no rows");
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) acc += a[t] * b[t];
  return acc;
}

}  // namespace

FlatMatrix attn_exact(const FlatMatrix& x, const AttentionParams& p, OpCounter* ops) {
  check_input(x, p);
  const std::size_t L = x.rows();
  const std::size_t d = p.dim();
  const FlatMatrix q = matmul(x, p.w_q);
  const FlatMatrix k = matmul(x, p.w_k);
  const FlatMatrix v = matmul(x, p.w_v);
  FlatMatrix out(L, d);
  parallel_for(L, [&](std::size_t i) {
    std::vector<double> s(L);
    double top = -INFINITY;
    for (std::size_t j = 0; j < L; ++j) {
      s[j] = dot(q.row(i), k.row(j));
      if (!std::isfinite(s[j])) throw NumericOverflow(i, j);
      top = std::max(top, s[j]);
    }
    double norm = 0.0;
    auto row = out.row(i);
    for (std::size_t j = 0; j < L; ++j) {
      const double a = std::exp(s[j] - top);
      norm += a;
      const auto vj = v.row(j);
      for (std::size_t l = 0; l < d; ++l) row[l] += a * vj[l];
    }
    for (std::size_t l = 0; l < d; ++l) row[l] /= norm;
  });
  tally(ops, count_attn_exact(L, d));
  return out;
}

FlatMatrix attn_matrix(const FlatMatrix& x, const AttentionParams& p) {
  check_input(x, p);
  const std::size_t L = x.rows();
  if (L > kMaterializeLimit) {
    throw TooLargeToMaterialize("attn_matrix: " + std::to_string(L) + " tokens exceed the limit of " +
                                std::to_string(kMaterializeLimit));
  }
  const FlatMatrix q = matmul(x, p.w_q);
  const FlatMatrix k = matmul(x, p.w_k);
  FlatMatrix a(L, L);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      const double s = dot(q.row(i), k.row(j));
      const double e = std::exp(s);
      if (!std::isfinite(e)) throw NumericOverflow(i, j);
      a.at(i, j) = e;
    }
  }
  return a;
}

}  // namespace varfast
