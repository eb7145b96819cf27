#include "varfast/metrics.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "varfast/errors.hpp"

namespace varfast {

ScalingReport fit_exponent(std::span<const ScalingPoint> points) {
  if (points.size() < 3) {
    throw InsufficientData("fit_exponent needs at least 3 points, got " + std::to_string(points.size()));
  }
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& p : points) {
    if (!(p.n > 0.0) || !(p.count > 0.0)) throw InsufficientData("fit_exponent needs positive n and count");
    sx += std::log(p.n);
    sy += std::log(p.count);
  }
  const double m = static_cast<double>(points.size());
  const double mx = sx / m;
  const double my = sy / m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.count) - my);
  }
  if (!(sxx > 0.0)) throw InsufficientData("fit_exponent needs at least two distinct n");
  ScalingReport r;
  r.points.assign(points.begin(), points.end());
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss = 0.0;
  for (const auto& p : points) {
    const double e = std::log(p.count) - (r.intercept + r.slope * std::log(p.n));
    ss += e * e;
  }
  r.residual = std::sqrt(ss / m);
  return r;
}

std::string_view bench_stage_name(BenchStage s) noexcept {
  switch (s) {
    case BenchStage::Stage1: return "stage1";
    case BenchStage::Stage2: return "stage2";
    case BenchStage::Stage3: return "stage3";
  }
  return "unknown";
}

OpCounter stage_ops(const StageCounters& c, BenchStage s) noexcept {
  switch (s) {
    case BenchStage::Stage1: return c.stage1();
    case BenchStage::Stage2: return c[Stage::Stage2];
    case BenchStage::Stage3: return c[Stage::Stage3];
  }
  return {};
}

BenchTable run_bench(const ModelConfig& base, int k_min, int k_max, std::uint64_t seed) {
  if (k_min < 2 || k_max < k_min + 2) {
    throw ConfigError("bench needs k_min >= 2 and at least three scale counts (k_max >= k_min + 2)");
  }
  constexpr BenchStage kStages[] = {BenchStage::Stage1, BenchStage::Stage2, BenchStage::Stage3};
  constexpr ExecutionMode kModes[] = {ExecutionMode::Exact, ExecutionMode::Fast};
  BenchTable table;
  for (int K = k_min; K <= k_max; ++K) {
    ModelConfig cfg = base;
    cfg.num_scales = K;
    const VarModel model = build_model(cfg, seed);
    const TokenMap x_init = initial_token(cfg.d, cfg.approx.r_bound, seed);
    for (ExecutionMode mode : kModes) {
      const RunResult run = run_model(model, x_init, mode);
      for (std::size_t s = 0; s < 3; ++s) {
        BenchRow row;
        row.num_scales = K;
        row.n = model.schedule.final_side();
        row.tokens = model.schedule.tokens_through(K);
        row.mode = mode;
        row.stage = kStages[s];
        row.ops = stage_ops(run.trace.ops, kStages[s]);
        row.wall_ms = run.trace.wall_ms[s];
        table.rows.push_back(row);
      }
    }
  }
  for (BenchStage stage : kStages) {
    for (ExecutionMode mode : kModes) {
      std::vector<ScalingPoint> pts;
      for (const auto& row : table.rows) {
        if (row.stage == stage && row.mode == mode) {
          pts.push_back({static_cast<double>(row.n), static_cast<double>(row.ops.mults)});
        }
      }
      table.slopes.push_back({stage, mode, fit_exponent(pts)});
    }
  }
  return table;
}

}  // namespace varfast
