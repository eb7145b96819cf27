#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "varfast/errors.hpp"
#include "varfast/pyramid.hpp"
#include "varfast/rng.hpp"

using namespace varfast;

namespace {

TokenMap random_map(std::size_t h, std::size_t w, std::size_t c, Rng& rng) {
  TokenMap m(h, w, c);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

double catmull_rom(double x) {
  const double t = std::fabs(x);
  if (t < 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
  if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
  return 0.0;
}

}  // namespace

TEST_SUITE("pyramid") {
  TEST_CASE("kernel closed forms") {
    CHECK(kernel_eval(KernelChoice::CubicBSpline, 0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(kernel_eval(KernelChoice::CubicBSpline, 1.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(kernel_eval(KernelChoice::CubicBSpline, 2.0) == 0.0);
    CHECK(kernel_eval(KernelChoice::CatmullRom, 2.0) == 0.0);
    CHECK(kernel_eval(KernelChoice::CatmullRom, 0.0) == 1.0);
    CHECK(kernel_eval(KernelChoice::CatmullRom, 1.0) == doctest::Approx(0.0));
    CHECK(kernel_eval(KernelChoice::CubicBSpline, -3.5) == 0.0);
    for (double x = -2.5; x <= 2.5; x += 0.01) {
      const double w = kernel_eval(KernelChoice::CubicBSpline, x);
      CHECK(w >= 0.0);
      CHECK(w <= 1.0);
      CHECK(w == doctest::Approx(oracle::bspline(x)).epsilon(1e-13));
      CHECK(kernel_eval(KernelChoice::CatmullRom, x) == doctest::Approx(catmull_rom(x)).epsilon(1e-13));
    }
    CHECK(kernel_eval(KernelChoice::CatmullRom, 1.5) < 0.0);
  }

  TEST_CASE("kernel names parse") {
    CHECK(parse_kernel("bspline") == KernelChoice::CubicBSpline);
    CHECK(parse_kernel("catmullrom") == KernelChoice::CatmullRom);
    CHECK(kernel_name(KernelChoice::CatmullRom) == "catmullrom");
    CHECK_THROWS_AS(parse_kernel("lanczos"), ConfigError);
  }

  TEST_CASE("constant maps stay constant under enlargement") {
    for (auto choice : {KernelChoice::CubicBSpline, KernelChoice::CatmullRom}) {
      const TokenMap c(3, 2, 2, 0.75);
      const TokenMap up = up_interpolate(c, 7, 9, choice);
      CHECK(up.height() == 7);
      CHECK(up.width() == 9);
      for (double v : up.data()) CHECK(v == doctest::Approx(0.75).epsilon(1e-15));
    }
  }

  TEST_CASE("a single token fills the whole target") {
    const TokenMap one(1, 1, 3, std::vector<double>{0.1, -0.2, 0.3});
    const TokenMap up = up_interpolate(one, 4, 4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t l = 0; l < 3; ++l) CHECK(up.at(i, j, l) == doctest::Approx(one.at(0, 0, l)).epsilon(1e-15));
  }

  TEST_CASE("2x2 map to 4x4 matches the straight-loop oracle") {
    const TokenMap x(2, 2, 1, std::vector<double>{0.0, 1.0, 2.0, 3.0});
    const TokenMap got = up_interpolate(x, 4, 4);
    const TokenMap want = oracle::up_interpolate(x, 4, 4);
    CHECK(inf_norm_diff(got, want) <= 1e-14);
    // Symmetric data: the first and last rows mirror around the centre value 1.5.
    CHECK(got.at(0, 0, 0) + got.at(3, 3, 0) == doctest::Approx(3.0).epsilon(1e-14));
  }

  TEST_CASE("random maps match the oracle for both kernels and uneven ratios") {
    Rng rng(11);
    const std::pair<std::size_t, std::size_t> shapes[] = {{1, 1}, {2, 3}, {3, 3}, {4, 2}, {5, 7}};
    for (auto [h, w] : shapes) {
      const TokenMap x = random_map(h, w, 3, rng);
      for (std::size_t th : {h, h + 1, 2 * h, 3 * h + 2}) {
        for (std::size_t tw : {w + 1, 2 * w, 4 * w}) {
          CHECK(inf_norm_diff(up_interpolate(x, th, tw), oracle::up_interpolate(x, th, tw)) <= 1e-13);
          CHECK(inf_norm_diff(up_interpolate(x, th, tw, KernelChoice::CatmullRom),
                              oracle::up_interpolate(x, th, tw, catmull_rom)) <= 1e-13);
        }
      }
    }
  }

  TEST_CASE("same-size target is the identity and shrinking is rejected") {
    Rng rng(12);
    const TokenMap x = random_map(3, 4, 2, rng);
    CHECK(up_interpolate(x, 3, 4) == x);
    OpCounter ops;
    up_interpolate(x, 3, 4, KernelChoice::CubicBSpline, &ops);
    CHECK(ops == OpCounter{});
    CHECK_THROWS_AS(up_interpolate(x, 2, 4), InvalidTarget);
    CHECK_THROWS_AS(up_interpolate(x, 3, 3), InvalidTarget);
  }

  TEST_CASE("B-spline output stays within each channel's source range") {
    Rng rng(13);
    for (int t = 0; t < 200; ++t) {
      const auto h = static_cast<std::size_t>(rng.uniform_int(1, 5));
      const auto w = static_cast<std::size_t>(rng.uniform_int(1, 5));
      const TokenMap x = random_map(h, w, 2, rng);
      const TokenMap up = up_interpolate(x, h * 2 + 1, w * 3);
      for (std::size_t l = 0; l < 2; ++l) {
        double lo = INFINITY;
        double hi = -INFINITY;
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) {
            lo = std::min(lo, x.at(i, j, l));
            hi = std::max(hi, x.at(i, j, l));
          }
        for (std::size_t i = 0; i < up.height(); ++i)
          for (std::size_t j = 0; j < up.width(); ++j) {
            CHECK(up.at(i, j, l) >= lo - 1e-14);
            CHECK(up.at(i, j, l) <= hi + 1e-14);
          }
      }
    }
  }

  TEST_CASE("up-interpolation is non-expansive over 1000 random pairs") {
    Rng rng(14);
    int violations = 0;
    for (int t = 0; t < 1000; ++t) {
      const auto h = static_cast<std::size_t>(rng.uniform_int(1, 6));
      const auto w = static_cast<std::size_t>(rng.uniform_int(1, 6));
      const TokenMap x = random_map(h, w, 2, rng);
      TokenMap y = x;
      const double eps = rng.uniform(0.0, 0.1);
      for (double& v : y.data()) v += rng.uniform(-eps, eps);
      const std::size_t th = h * static_cast<std::size_t>(rng.uniform_int(1, 4)) + 1;
      const std::size_t tw = w * static_cast<std::size_t>(rng.uniform_int(1, 4));
      if (inf_norm_diff(up_interpolate(x, th, tw), up_interpolate(y, th, tw)) > inf_norm_diff(x, y) + 1e-15) {
        ++violations;
      }
    }
    CHECK(violations == 0);
  }

  TEST_CASE("identical inputs give bit-identical outputs") {
    Rng rng(15);
    const TokenMap x = random_map(4, 4, 3, rng);
    CHECK(up_interpolate(x, 9, 8) == up_interpolate(x, 9, 8));
  }

  TEST_CASE("operation count follows the separable tap layout") {
    OpCounter ops;
    up_interpolate(TokenMap(2, 3, 4, 1.0), 5, 7, KernelChoice::CubicBSpline, &ops);
    const std::uint64_t rows_cols = 5 + 7;
    const std::uint64_t pixels = 35;
    CHECK(ops.mults == 5 * rows_cols + 16 * pixels + 16 * pixels * 4);
    CHECK(ops.adds == 3 * rows_cols + 16 * pixels * 4);
    CHECK(ops == count_up_interpolate(2, 3, 5, 7, 4));
  }

  TEST_CASE("pyramid_up prepends x_init and grows each map to the next scale") {
    const PyramidSchedule s(2, 3);
    const TokenMap x_init(1, 1, 2, std::vector<double>{0.3, -0.4});
    const TokenMap x1(1, 1, 2, std::vector<double>{1.5, 2.5});
    const auto one = pyramid_up(x_init, std::vector<TokenMap>{x1}, s);
    REQUIRE(one.size() == 2);
    CHECK(one[0] == x_init);
    CHECK(one[1].height() == 2);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        CHECK(one[1].at(i, j, 0) == doctest::Approx(1.5).epsilon(1e-15));
        CHECK(one[1].at(i, j, 1) == doctest::Approx(2.5).epsilon(1e-15));
      }

    Rng rng(16);
    const std::vector<TokenMap> maps = {random_map(1, 1, 2, rng), random_map(2, 2, 2, rng)};
    const auto two = pyramid_up(x_init, maps, s);
    REQUIRE(two.size() == 3);
    CHECK(two[0].height() == 1);
    CHECK(two[1].height() == 2);
    CHECK(two[2].height() == 4);
    CHECK(inf_norm_diff(two[1], oracle::up_interpolate(maps[0], 2, 2)) <= 1e-14);
    CHECK(inf_norm_diff(two[2], oracle::up_interpolate(maps[1], 4, 4)) <= 1e-14);

    const std::vector<TokenMap> wrong = {random_map(2, 2, 2, rng)};
    CHECK_THROWS_AS(pyramid_up(x_init, wrong, s), DimensionMismatch);
    const std::vector<TokenMap> too_many = {maps[0], maps[1], random_map(4, 4, 2, rng)};
    CHECK_THROWS_AS(pyramid_up(x_init, too_many, s), DimensionMismatch);
  }
}
