#include "varfast/pipeline.hpp"

#include <chrono>
#include <string>

#include "varfast/error_bounds.hpp"
#include "varfast/errors.hpp"

namespace varfast {

ExecutionMode parse_mode(std::string_view name) {
  if (name == "exact") return ExecutionMode::Exact;
  if (name == "fast") return ExecutionMode::Fast;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected exact or fast)");
}

std::string_view mode_name(ExecutionMode m) noexcept { return m == ExecutionMode::Fast ? "fast" : "exact"; }

std::string_view layer_kind_name(DecoderLayer::Kind k) noexcept {
  switch (k) {
    case DecoderLayer::Kind::ResNet: return "resnet";
    case DecoderLayer::Kind::Attention: return "attention";
    case DecoderLayer::Kind::UpInterp: return "upinterp";
    case DecoderLayer::Kind::FinalConv: return "finalconv";
  }
  return "unknown";
}

DecoderPreset parse_decoder_preset(std::string_view name) {
  if (name == "minimal") return DecoderPreset::Minimal;
  if (name == "default") return DecoderPreset::Default;
  if (name == "deep") return DecoderPreset::Deep;
  throw ConfigError("unknown decoder preset '" + std::string(name) + "' (expected minimal, default or deep)");
}

std::string_view decoder_preset_name(DecoderPreset p) noexcept {
  switch (p) {
    case DecoderPreset::Minimal: return "minimal";
    case DecoderPreset::Default: return "default";
    case DecoderPreset::Deep: return "deep";
  }
  return "unknown";
}

std::vector<DecoderLayer::Kind> decoder_layout(DecoderPreset p) {
  using K = DecoderLayer::Kind;
  switch (p) {
    case DecoderPreset::Minimal: return {K::FinalConv};
    case DecoderPreset::Default: return {K::ResNet, K::Attention, K::UpInterp, K::ResNet, K::FinalConv};
    case DecoderPreset::Deep:
      return {K::ResNet, K::Attention, K::ResNet, K::UpInterp, K::ResNet, K::Attention, K::ResNet, K::FinalConv};
  }
  return {};
}

void ModelConfig::validate() const {
  if (alpha < 2 || alpha > 16) throw ConfigError("alpha must lie in [2, 16]");
  if (num_scales < 1 || num_scales > 12) throw ConfigError("num_scales must lie in [1, 12]");
  if (d < 1 || d > 64) throw ConfigError("d must lie in [1, 64]");
  if (out_channels < 1 || out_channels > 64) throw ConfigError("out_channels must lie in [1, 64]");
  approx.validate();
}

namespace {

// Substream indices for the roles of the model weights.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kAttnStream = 1000;
constexpr std::uint64_t kStage2Stream = 2000;
constexpr std::uint64_t kDecoderStream = 3000;

}  // namespace

DecoderSpec build_decoder(std::span<const DecoderLayer::Kind> layout, std::size_t d, std::size_t out_channels,
                          double bound, std::uint64_t seed) {
  if (layout.size() > DecoderSpec::kMaxDepth) throw ConfigError("decoder depth exceeds 8 layers");
  DecoderSpec spec;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    Rng rng = Rng::substream(seed, i);
    DecoderLayer layer;
    layer.kind = layout[i];
    switch (layer.kind) {
      case DecoderLayer::Kind::ResNet:
        layer.resnet.conv1 = ConvKernelSet::random(d, d, bound, rng);
        layer.resnet.conv2 = ConvKernelSet::random(d, d, bound, rng);
        break;
      case DecoderLayer::Kind::Attention:
        layer.attention = AttentionParams::random(d, bound, rng);
        break;
      case DecoderLayer::Kind::UpInterp:
        break;
      case DecoderLayer::Kind::FinalConv:
        if (i + 1 != layout.size()) throw ConfigError("FinalConv must be the last decoder layer");
        layer.conv = ConvKernelSet::random(d, out_channels, bound, rng);
        break;
    }
    spec.layers.push_back(std::move(layer));
  }
  return spec;
}

TokenMap initial_token(std::size_t d, double bound, std::uint64_t seed) {
  Rng rng = Rng::substream(seed, kInitStream);
  TokenMap x(1, 1, d);
  for (double& v : x.data()) v = rng.uniform(-bound, bound);
  return x;
}

VarModel build_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  VarModel m;
  m.schedule = PyramidSchedule(cfg.alpha, cfg.num_scales);
  m.approx = cfg.approx;
  m.kernel = cfg.kernel;
  const double r = cfg.approx.r_bound;
  for (int k = 0; k < cfg.num_scales; ++k) {
    Rng ra = Rng::substream(seed, kAttnStream + static_cast<std::uint64_t>(k));
    m.attn.push_back(AttentionParams::random(cfg.d, r, ra));
    Rng rc = Rng::substream(seed, kStage2Stream + static_cast<std::uint64_t>(k));
    m.stage2_convs.push_back(ConvKernelSet::random(cfg.d, cfg.d, r, rc));
  }
  const auto layout = decoder_layout(cfg.decoder);
  m.decoder = build_decoder(layout, cfg.d, cfg.out_channels, r, Rng::substream_key(seed, kDecoderStream));
  return m;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct AttentionStep {
  FlatMatrix output;
  double error_out = 0.0;
};

// One attention layer in either mode. In FAST mode the returned bound covers
// |fast output - exact output| given |fast input - exact input| <= error_in.
AttentionStep attention_step(const FlatMatrix& x, const AttentionParams& p, ExecutionMode mode,
                             const ApproxConfig& approx, OpCounter* ops, LayerTrace* layer, double error_in) {
  const FlatMatrix xc = clip_entries(x, approx.r_bound);
  AttentionStep step;
  if (mode == ExecutionMode::Exact) {
    step.output = attn_exact(xc, p, ops);
    return step;
  }
  FastAttentionResult r = attn_fast_traced(xc, p, approx, ops);
  step.error_out = r.error_bound + attention_perturbation_bound(xc, p, error_in);
  if (layer) {
    layer->degree = r.degree;
    layer->k_feat = r.k_feat;
    layer->score_bound = r.score_bound;
    layer->delta_prime = r.error_bound;
  }
  step.output = std::move(r.output);
  return step;
}

}  // namespace

FlatMatrix var_transformer(const TokenMap& x_init, const VarModel& model, ExecutionMode mode, RunTrace* trace) {
  const std::size_t d = model.dim();
  if (x_init.height() != 1 || x_init.width() != 1 || x_init.channels() != d) {
    throw DimensionMismatch("var_transformer: x_init must be 1x1x" + std::to_string(d));
  }
  const int K = model.schedule.num_scales();
  if (static_cast<int>(model.attn.size()) != K) throw DimensionMismatch("var_transformer: one attention per scale");
  OpCounter attn_ops;
  OpCounter up_ops;
  FlatMatrix z = flatten(x_init);
  double error = 0.0;
  for (int k = 1; k <= K; ++k) {
    LayerTrace layer;
    layer.stage = "stage1";
    layer.kind = "attention";
    layer.index = static_cast<std::size_t>(k);
    layer.tokens = z.rows();
    AttentionStep step = attention_step(z, model.attn[static_cast<std::size_t>(k - 1)], mode, model.approx,
                                        &attn_ops, &layer, error);
    error = step.error_out;
    layer.error_bound = error;
    if (trace) {
      trace->stage1_tokens.push_back(z.rows());
      trace->layers.push_back(layer);
    }
    if (k == K) {
      if (trace) {
        trace->ops[Stage::Stage1Attn] += attn_ops;
        trace->ops[Stage::Stage1Up] += up_ops;
        trace->stage1_bound = error;
      }
      return std::move(step.output);
    }
    const auto maps = reshape_to_pyramid(step.output, model.schedule, k);
    const auto grown = pyramid_up(x_init, maps, model.schedule, model.kernel, &up_ops);
    z = flatten(grown);
  }
  return z;  // unreachable: K >= 1
}

TokenMap reconstruct_feature_map(std::span<const TokenMap> maps, const VarModel& model, RunTrace* trace,
                                 double input_error) {
  const int K = model.schedule.num_scales();
  if (static_cast<int>(maps.size()) != K || static_cast<int>(model.stage2_convs.size()) != K) {
    throw DimensionMismatch("reconstruct_feature_map: expected " + std::to_string(K) + " maps");
  }
  const std::size_t n = model.schedule.final_side();
  const std::size_t d = model.dim();
  OpCounter ops;
  TokenMap sum(n, n, d);
  double bound = 0.0;
  for (int k = 1; k <= K; ++k) {
    const TokenMap& r = maps[static_cast<std::size_t>(k - 1)];
    const std::size_t h = model.schedule.side(k);
    if (r.height() != h || r.width() != h || r.channels() != d) {
      throw DimensionMismatch("reconstruct_feature_map: map " + std::to_string(k) + " does not match the schedule");
    }
    const ConvKernelSet& conv = model.stage2_convs[static_cast<std::size_t>(k - 1)];
    const TokenMap term = conv_forward(up_interpolate(r, n, n, model.kernel, &ops), conv, &ops);
    if (k == 1) {
      sum = term;
    } else {
      auto out = sum.data();
      const auto in = term.data();
      for (std::size_t t = 0; t < out.size(); ++t) out[t] += in[t];
      ops.adds += out.size();
    }
    bound += conv.lipschitz_bound() * input_error;
  }
  if (trace) {
    trace->ops[Stage::Stage2] += ops;
    trace->stage2_bound = bound;
  }
  return sum;
}

TokenMap decode(const TokenMap& feature_map, const DecoderSpec& spec, ExecutionMode mode, const ApproxConfig& approx,
                KernelChoice kernel, RunTrace* trace, double input_error) {
  if (spec.layers.size() > DecoderSpec::kMaxDepth) throw ConfigError("decoder depth exceeds 8 layers");
  OpCounter ops;
  TokenMap x = feature_map;
  double error = input_error;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const DecoderLayer& layer = spec.layers[i];
    LayerTrace lt;
    lt.stage = "stage3";
    lt.kind = std::string(layer_kind_name(layer.kind));
    lt.index = i;
    lt.tokens = x.pixels();
    switch (layer.kind) {
      case DecoderLayer::Kind::ResNet:
        x = resnet_forward(x, layer.resnet, &ops);
        error *= 1.0 + layer.resnet.conv1.lipschitz_bound() * layer.resnet.conv2.lipschitz_bound();
        break;
      case DecoderLayer::Kind::Attention: {
        AttentionStep step = attention_step(flatten(x), layer.attention, mode, approx, &ops, &lt, error);
        x = reshape_to_map(step.output, x.height(), x.width());
        error = step.error_out;
        break;
      }
      case DecoderLayer::Kind::UpInterp:
        x = up_interpolate(x, 2 * x.height(), 2 * x.width(), kernel, &ops);
        break;
      case DecoderLayer::Kind::FinalConv:
        x = conv_forward(x, layer.conv, &ops);
        error *= layer.conv.lipschitz_bound();
        break;
    }
    if (mode == ExecutionMode::Exact) error = 0.0;
    lt.error_bound = error;
    if (trace) trace->layers.push_back(std::move(lt));
  }
  if (trace) {
    trace->ops[Stage::Stage3] += ops;
    trace->composed_bound = error;
  }
  return x;
}

RunResult run_model(const VarModel& model, const TokenMap& x_init, ExecutionMode mode) {
  RunResult result;
  RunTrace& trace = result.trace;
  trace.mode = mode;
  auto t0 = Clock::now();
  const FlatMatrix s1 = var_transformer(x_init, model, mode, &trace);
  trace.wall_ms[0] = elapsed_ms(t0);
  t0 = Clock::now();
  const auto maps = reshape_to_pyramid(s1, model.schedule, model.schedule.num_scales());
  const TokenMap fm = reconstruct_feature_map(maps, model, &trace, trace.stage1_bound);
  trace.wall_ms[1] = elapsed_ms(t0);
  t0 = Clock::now();
  result.image = decode(fm, model.decoder, mode, model.approx, model.kernel, &trace, trace.stage2_bound);
  trace.wall_ms[2] = elapsed_ms(t0);
  return result;
}

RunResult run_end_to_end(std::uint64_t seed, const ModelConfig& cfg, ExecutionMode mode) {
  const VarModel model = build_model(cfg, seed);
  return run_model(model, initial_token(cfg.d, cfg.approx.r_bound, seed), mode);
}

}  // namespace varfast
