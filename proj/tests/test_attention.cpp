#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "varfast/attention.hpp"
#include "varfast/errors.hpp"

using namespace varfast;

namespace {

FlatMatrix random_matrix(std::size_t r, std::size_t c, double bound, Rng& rng) {
  FlatMatrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

FlatMatrix identity(std::size_t d) {
  FlatMatrix m(d, d);
  for (std::size_t i = 0; i < d; ++i) m.at(i, i) = 1.0;
  return m;
}

}  // namespace

TEST_SUITE("attention-exact") {
  TEST_CASE("single token returns x W_V") {
    Rng rng(21);
    const AttentionParams p = AttentionParams::random(3, 0.5, rng);
    const FlatMatrix x = random_matrix(1, 3, 0.5, rng);
    CHECK(inf_norm_diff(attn_exact(x, p), oracle::product(x, p.w_v)) <= 1e-15);
  }

  TEST_CASE("identical rows give x_1 W_V everywhere") {
    Rng rng(22);
    const AttentionParams p = AttentionParams::random(4, 0.5, rng);
    const FlatMatrix row = random_matrix(1, 4, 0.5, rng);
    FlatMatrix x(6, 4);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t l = 0; l < 4; ++l) x.at(i, l) = row.at(0, l);
    const FlatMatrix want = oracle::product(row, p.w_v);
    const FlatMatrix got = attn_exact(x, p);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t l = 0; l < 4; ++l) CHECK(got.at(i, l) == doctest::Approx(want.at(0, l)).epsilon(1e-14));
  }

  TEST_CASE("seeded inputs match the materialised oracle") {
    Rng rng(23);
    for (auto [L, d] : {std::pair<std::size_t, std::size_t>{3, 2}, {17, 4}, {40, 3}}) {
      const AttentionParams p = AttentionParams::random(d, 0.8, rng);
      const FlatMatrix x = random_matrix(L, d, 1.0, rng);
      CHECK(inf_norm_diff(attn_exact(x, p), oracle::attention(x, p.w_q, p.w_k, p.w_v)) <= 1e-13);
    }
  }

  TEST_CASE("attn_matrix entries") {
    Rng rng(24);
    const AttentionParams p = AttentionParams::random(2, 0.5, rng);
    const FlatMatrix ones = attn_matrix(FlatMatrix(5, 2), p);
    for (double v : ones.data()) CHECK(v == 1.0);

    const FlatMatrix x1 = random_matrix(1, 2, 1.0, rng);
    const FlatMatrix q = oracle::product(x1, p.w_q);
    const FlatMatrix k = oracle::product(x1, p.w_k);
    CHECK(attn_matrix(x1, p).at(0, 0) ==
          doctest::Approx(std::exp(q.at(0, 0) * k.at(0, 0) + q.at(0, 1) * k.at(0, 1))).epsilon(1e-15));

    const FlatMatrix x = random_matrix(4, 2, 1.0, rng);
    const FlatMatrix a = attn_matrix(x, p);
    for (std::size_t i = 0; i < 4; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(a.at(i, j) > 0.0);
        sum += a.at(i, j);
      }
      double normalised = 0.0;
      for (std::size_t j = 0; j < 4; ++j) normalised += a.at(i, j) / sum;
      CHECK(std::fabs(normalised - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("attn_matrix refuses to materialise past the guard") {
    const AttentionParams p(identity(1), identity(1), identity(1), 1.0);
    CHECK_THROWS_AS(attn_matrix(FlatMatrix(kMaterializeLimit + 1, 1), p), TooLargeToMaterialize);
  }

  TEST_CASE("outputs are convex combinations of the value rows") {
    Rng rng(25);
    for (int t = 0; t < 50; ++t) {
      const auto L = static_cast<std::size_t>(rng.uniform_int(1, 30));
      const AttentionParams p = AttentionParams::random(3, 1.0, rng);
      const FlatMatrix x = random_matrix(L, 3, 2.0, rng);
      const FlatMatrix v = oracle::product(x, p.w_v);
      const FlatMatrix out = attn_exact(x, p);
      for (std::size_t l = 0; l < 3; ++l) {
        double lo = INFINITY;
        double hi = -INFINITY;
        for (std::size_t j = 0; j < L; ++j) {
          lo = std::min(lo, v.at(j, l));
          hi = std::max(hi, v.at(j, l));
        }
        for (std::size_t i = 0; i < L; ++i) {
          CHECK(out.at(i, l) >= lo - 1e-12);
          CHECK(out.at(i, l) <= hi + 1e-12);
        }
      }
    }
  }

  TEST_CASE("large scores stay finite thanks to the row shift") {
    const AttentionParams p(identity(2), identity(2), identity(2), 1.0);
    const FlatMatrix x(3, 2, std::vector<double>{30.0, 0.0, 0.0, 30.0, 20.0, 20.0});
    const FlatMatrix out = attn_exact(x, p);
    CHECK(all_finite(out.data()));
    CHECK(inf_norm_diff(out, oracle::attention(x, p.w_q, p.w_k, p.w_v)) <= 1e-12);
  }

  TEST_CASE("non-finite scores raise NumericOverflow with the position") {
    const AttentionParams p(identity(1), identity(1), identity(1), 1.0);
    const FlatMatrix x(2, 1, std::vector<double>{1.0, 1e200});
    try {
      attn_exact(x, p);
      FAIL("expected NumericOverflow");
    } catch (const NumericOverflow& e) {
      CHECK(e.row() == 1);
      CHECK(e.col() == 1);
    }
  }

  TEST_CASE("operation count follows the closed form") {
    Rng rng(26);
    const AttentionParams p = AttentionParams::random(2, 0.5, rng);
    OpCounter ops;
    attn_exact(random_matrix(3, 2, 0.5, rng), p, &ops);
    CHECK(ops.mults == 27 + 36 + 18 + 18);
    CHECK(ops.adds == 6);
    CHECK(ops.exps == 9);
    CHECK(ops == count_attn_exact(3, 2));
  }

  TEST_CASE("parameters validate shapes and the entry bound") {
    Rng rng(27);
    const AttentionParams p = AttentionParams::random(4, 0.3, rng);
    CHECK(p.dim() == 4);
    CHECK(inf_norm(p.w_q) <= 0.3);
    CHECK(inf_norm(p.w_k) <= 0.3);
    CHECK(inf_norm(p.w_v) <= 0.3);
    CHECK_THROWS_AS(AttentionParams(FlatMatrix(2, 2), FlatMatrix(2, 3), FlatMatrix(2, 2), 1.0), DimensionMismatch);
    CHECK_THROWS_AS(AttentionParams(identity(2), identity(2), identity(2), 0.5), ConfigError);
    CHECK_THROWS_AS(attn_exact(FlatMatrix(3, 3), p), DimensionMismatch);
  }

  TEST_CASE("max_col_abs_sum is the largest column l1 norm") {
    const FlatMatrix w(2, 2, std::vector<double>{1.0, -3.0, -2.0, 0.5});
    CHECK(max_col_abs_sum(w) == 3.5);
  }
}
