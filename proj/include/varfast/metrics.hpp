#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "varfast/op_counter.hpp"
#include "varfast/pipeline.hpp"

namespace varfast {

struct ScalingPoint {
  double n = 0.0;
  double count = 0.0;
};

struct ScalingReport {
  std::vector<ScalingPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the log-log fit residuals
};

// Ordinary least squares on (ln n, ln count). Needs >= 3 positive points.
ScalingReport fit_exponent(std::span<const ScalingPoint> points);

enum class BenchStage { Stage1, Stage2, Stage3 };

std::string_view bench_stage_name(BenchStage s) noexcept;
OpCounter stage_ops(const StageCounters& c, BenchStage s) noexcept;

struct BenchRow {
  int num_scales = 0;
  std::size_t n = 0;
  std::size_t tokens = 0;  // L_K
  ExecutionMode mode = ExecutionMode::Exact;
  BenchStage stage = BenchStage::Stage1;
  OpCounter ops;
  double wall_ms = 0.0;
};

struct BenchSlope {
  BenchStage stage = BenchStage::Stage1;
  ExecutionMode mode = ExecutionMode::Exact;
  ScalingReport fit;
};

struct BenchTable {
  std::vector<BenchRow> rows;
  std::vector<BenchSlope> slopes;
};

// Runs the full pipeline once per (K, mode) for K in [k_min, k_max] and fits
// multiplication-count slopes against n = alpha^(K-1). Rows are ordered by
// K, then mode (exact, fast), then stage.
BenchTable run_bench(const ModelConfig& base, int k_min, int k_max, std::uint64_t seed);

}  // namespace varfast
