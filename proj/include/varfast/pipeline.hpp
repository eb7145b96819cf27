#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varfast/attention.hpp"
#include "varfast/conv.hpp"
#include "varfast/fast_attention.hpp"
#include "varfast/op_counter.hpp"
#include "varfast/pyramid.hpp"
#include "varfast/schedule.hpp"
#include "varfast/tensor.hpp"

namespace varfast {

enum class ExecutionMode { Exact, Fast };

ExecutionMode parse_mode(std::string_view name);
std::string_view mode_name(ExecutionMode m) noexcept;

struct DecoderLayer {
  enum class Kind { ResNet, Attention, UpInterp, FinalConv };
  Kind kind = Kind::ResNet;
  ResNetBlock resnet;         // Kind::ResNet
  AttentionParams attention;  // Kind::Attention
  ConvKernelSet conv;         // Kind::FinalConv
};

std::string_view layer_kind_name(DecoderLayer::Kind k) noexcept;

struct DecoderSpec {
  static constexpr std::size_t kMaxDepth = 8;
  std::vector<DecoderLayer> layers;
};

enum class DecoderPreset { Minimal, Default, Deep };

DecoderPreset parse_decoder_preset(std::string_view name);
std::string_view decoder_preset_name(DecoderPreset p) noexcept;
std::vector<DecoderLayer::Kind> decoder_layout(DecoderPreset p);

struct ModelConfig {
  int alpha = 2;
  int num_scales = 4;
  std::size_t d = 4;
  std::size_t out_channels = 3;
  ApproxConfig approx;
  KernelChoice kernel = KernelChoice::CubicBSpline;
  DecoderPreset decoder = DecoderPreset::Default;

  void validate() const;
};

struct VarModel {
  PyramidSchedule schedule{2, 1};
  std::vector<AttentionParams> attn;       // one per scale
  std::vector<ConvKernelSet> stage2_convs; // one per scale, d -> d
  DecoderSpec decoder;
  ApproxConfig approx;
  KernelChoice kernel = KernelChoice::CubicBSpline;

  std::size_t dim() const noexcept { return attn.empty() ? 0 : attn.front().dim(); }
};

// Every weight is drawn uniform on [-r_bound, r_bound] from a substream of
// the seed that depends only on the layer's role and index.
VarModel build_model(const ModelConfig& cfg, std::uint64_t seed);
DecoderSpec build_decoder(std::span<const DecoderLayer::Kind> layout, std::size_t d, std::size_t out_channels,
                          double bound, std::uint64_t seed);
TokenMap initial_token(std::size_t d, double bound, std::uint64_t seed);

// One attention-type layer (or other layer) as seen by the run trace.
struct LayerTrace {
  std::string stage;
  std::string kind;
  std::size_t index = 0;
  std::size_t tokens = 0;
  int degree = -1;             // fast attention only
  std::size_t k_feat = 0;      // fast attention only
  double score_bound = 0.0;    // fast attention only
  double delta_prime = 0.0;    // local approximation bound (fast attention)
  double error_bound = 0.0;    // accumulated bound on |fast - exact| after the layer
};

struct RunTrace {
  ExecutionMode mode = ExecutionMode::Exact;
  StageCounters ops;
  std::vector<LayerTrace> layers;
  std::vector<std::size_t> stage1_tokens;  // L_k fed to attention k
  double stage1_bound = 0.0;
  double stage2_bound = 0.0;
  double composed_bound = 0.0;  // bound on the final image
  double wall_ms[3] = {0.0, 0.0, 0.0};
};

// Z_0 = x_init; Z_k = pyramid_up(x_init, Attn_k(Z_{k-1})), returns Attn_K(Z_{K-1}).
// Every attention input is clipped to approx.r_bound first, in both modes.
FlatMatrix var_transformer(const TokenMap& x_init, const VarModel& model, ExecutionMode mode,
                           RunTrace* trace = nullptr);

// sum_k conv_k(up(r_k -> n x n)), k ascending. input_error bounds the
// inf-norm error of every r_k; the propagated bound goes to trace->stage2_bound.
TokenMap reconstruct_feature_map(std::span<const TokenMap> maps, const VarModel& model, RunTrace* trace = nullptr,
                                 double input_error = 0.0);

// Applies the layers in order. Attention layers flatten h x w x d to (h w) x d,
// clip to approx.r_bound, attend and reshape back. UpInterp doubles h and w.
// input_error is propagated layer by layer into trace->composed_bound.
TokenMap decode(const TokenMap& feature_map, const DecoderSpec& spec, ExecutionMode mode,
                const ApproxConfig& approx, KernelChoice kernel = KernelChoice::CubicBSpline,
                RunTrace* trace = nullptr, double input_error = 0.0);

struct RunResult {
  TokenMap image;
  RunTrace trace;
};

RunResult run_model(const VarModel& model, const TokenMap& x_init, ExecutionMode mode);
RunResult run_end_to_end(std::uint64_t seed, const ModelConfig& cfg, ExecutionMode mode);

}  // namespace varfast
