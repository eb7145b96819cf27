#include "varfast/cli.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string_view>
#include <system_error>

#include "CLI11.hpp"
#include "varfast/errors.hpp"
#include "varfast/metrics.hpp"

namespace varfast {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw ConfigError("invalid value '" + value + "' for " + key);
  return out;
}

template <typename T>
T parse_in_range(const std::string& key, const std::string& value, T lo, T hi) {
  const T v = parse_number<T>(key, value);
  if (!(v >= lo && v <= hi)) {
    std::ostringstream msg;
    msg << key << " = " << value << " is outside [" << lo << ", " << hi << "]";
    throw ConfigError(msg.str());
  }
  return v;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt_fixed(double v, int digits) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, ptr);
}

nlohmann::ordered_json ops_json(const OpCounter& c) {
  nlohmann::ordered_json j;
  j["mults"] = c.mults;
  j["adds"] = c.adds;
  j["exps"] = c.exps;
  return j;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  ModelConfig& m = cfg.model;
  if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "alpha") {
    m.alpha = parse_in_range<int>(key, value, 2, 16);
  } else if (key == "num_scales" || key == "scales") {
    m.num_scales = parse_in_range<int>(key, value, 1, 12);
  } else if (key == "d") {
    m.d = parse_in_range<std::size_t>(key, value, 1, 64);
  } else if (key == "out_channels") {
    m.out_channels = parse_in_range<std::size_t>(key, value, 1, 64);
  } else if (key == "r_bound") {
    m.approx.r_bound = parse_in_range<double>(key, value, 1e-12, 1e6);
  } else if (key == "delta") {
    m.approx.delta = parse_in_range<double>(key, value, 1e-300, 0.1);
  } else if (key == "g_max") {
    m.approx.g_max = parse_in_range<int>(key, value, 1, 64);
  } else if (key == "kernel") {
    m.kernel = parse_kernel(value);
  } else if (key == "mode") {
    cfg.mode = parse_mode(value);
  } else if (key == "decoder") {
    m.decoder = parse_decoder_preset(value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void validate_run_config(const RunConfig& cfg) {
  cfg.model.validate();
  std::size_t side = 1;
  for (int k = 1; k < cfg.model.num_scales; ++k) side *= static_cast<std::size_t>(cfg.model.alpha);
  // The decoder attends over (2n)^2 tokens at most; keep n at desk scale.
  if (side > 512) throw ConfigError("final side alpha^(K-1) = " + std::to_string(side) + " exceeds 512");
}

void write_image(const std::filesystem::path& path, const TokenMap& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << image.height() << ' ' << image.width() << ' ' << image.channels() << '\n';
  for (double v : image.data()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (char& byte : bytes) {
      byte = static_cast<char>(bits & 0xFFu);
      bits >>= 8;
    }
    out.write(bytes, 8);
  }
  if (!out) throw Error("failed writing " + path.string());
}

TokenMap read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c = 0;
  if (!(hs >> h >> w >> c)) throw Error("bad image header in " + path.string());
  std::vector<double> data(h * w * c);
  for (double& v : data) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw Error("truncated image data in " + path.string());
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
    v = std::bit_cast<double>(bits);
  }
  return TokenMap(h, w, c, std::move(data));
}

nlohmann::ordered_json trace_to_json(const RunConfig& cfg, const RunTrace& trace) {
  using nlohmann::ordered_json;
  const ModelConfig& m = cfg.model;
  ordered_json j;
  j["seed"] = cfg.seed;
  j["mode"] = std::string(mode_name(trace.mode));
  ordered_json c;
  c["alpha"] = m.alpha;
  c["num_scales"] = m.num_scales;
  c["d"] = m.d;
  c["out_channels"] = m.out_channels;
  c["r_bound"] = m.approx.r_bound;
  c["delta"] = m.approx.delta;
  c["g_max"] = m.approx.g_max;
  c["kernel"] = std::string(kernel_name(m.kernel));
  c["decoder"] = std::string(decoder_preset_name(m.decoder));
  j["config"] = c;
  j["stage1_tokens"] = trace.stage1_tokens;
  ordered_json ops;
  for (Stage s : kAllStages) ops[std::string(stage_name(s))] = ops_json(trace.ops[s]);
  ops["total"] = ops_json(trace.ops.total());
  j["ops"] = ops;
  ordered_json layers = ordered_json::array();
  for (const auto& l : trace.layers) {
    ordered_json e;
    e["stage"] = l.stage;
    e["kind"] = l.kind;
    e["index"] = l.index;
    e["tokens"] = l.tokens;
    if (l.degree >= 0) {
      e["degree"] = l.degree;
      e["k_feat"] = l.k_feat;
      e["score_bound"] = l.score_bound;
      e["delta_prime"] = l.delta_prime;
    }
    e["error_bound"] = l.error_bound;
    layers.push_back(e);
  }
  j["layers"] = layers;
  ordered_json bounds;
  bounds["stage1"] = trace.stage1_bound;
  bounds["stage2"] = trace.stage2_bound;
  bounds["composed"] = trace.composed_bound;
  j["bounds"] = bounds;
  ordered_json wall;
  wall["stage1"] = trace.wall_ms[0];
  wall["stage2"] = trace.wall_ms[1];
  wall["stage3"] = trace.wall_ms[2];
  j["wall_ms"] = wall;
  return j;
}

nlohmann::ordered_json report_to_json(const BoundReport& r) {
  nlohmann::ordered_json j;
  j["trials"] = r.trials;
  j["skipped"] = r.skipped;
  j["violations"] = r.violations;
  j["max_ratio"] = r.max_ratio;
  j["threshold"] = r.threshold;
  if (r.suite == "B4") j["max_ratio_alt"] = r.max_ratio_alt;
  return j;
}

namespace {

// Flag values are kept as strings and funnelled through apply_config_value so
// the config file and the command line share one validation path.
struct CommonFlags {
  std::string config;
  std::map<std::string, std::string> values;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "flat key=value config file");
  const std::pair<const char*, const char*> flags[] = {
      {"--seed", "seed"},       {"--mode", "mode"},       {"--alpha", "alpha"},   {"--scales", "num_scales"},
      {"--d", "d"},             {"--r-bound", "r_bound"}, {"--delta", "delta"},   {"--g-max", "g_max"},
      {"--kernel", "kernel"},   {"--decoder", "decoder"}, {"--out-channels", "out_channels"}};
  for (const auto& [flag, key] : flags) cmd->add_option(flag, f.values[key], std::string("config key ") + key);
}

RunConfig resolve(const CLI::App* cmd, const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) {
    for (const auto& [k, v] : read_config_file(f.config)) apply_config_value(cfg, k, v);
  }
  const std::pair<const char*, const char*> flags[] = {
      {"--seed", "seed"},       {"--mode", "mode"},       {"--alpha", "alpha"},   {"--scales", "num_scales"},
      {"--d", "d"},             {"--r-bound", "r_bound"}, {"--delta", "delta"},   {"--g-max", "g_max"},
      {"--kernel", "kernel"},   {"--decoder", "decoder"}, {"--out-channels", "out_channels"}};
  for (const auto& [flag, key] : flags) {
    if (cmd->count(flag) > 0) apply_config_value(cfg, key, f.values.at(key));
  }
  validate_run_config(cfg);
  return cfg;
}

std::vector<double> parse_c_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<double>("c-list", trim(item)));
  if (out.empty()) throw ConfigError("c-list is empty");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0)) throw ConfigError("c-list entries must be positive");
    if (i > 0 && !(out[i] > out[i - 1])) throw ConfigError("c-list must be strictly ascending");
  }
  return out;
}

std::string default_c_list() {
  std::string s;
  for (int i = 1; i <= 40; ++i) {
    if (i > 1) s += ',';
    s += fmt_fixed(0.05 * i, 2);
  }
  return s;
}

int cmd_generate(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out) {
  const RunResult r = run_end_to_end(cfg.seed, cfg.model, cfg.mode);
  std::filesystem::create_directories(out_dir);
  write_image(out_dir / "image.f64", r.image);
  std::ofstream trace(out_dir / "trace.json");
  if (!trace) throw Error("cannot write trace.json");
  trace << trace_to_json(cfg, r.trace).dump(2) << '\n';
  out << "wrote " << (out_dir / "image.f64").string() << " (" << r.image.height() << 'x' << r.image.width() << 'x'
      << r.image.channels() << ")\n";
  return 0;
}

int cmd_bench(const RunConfig& cfg, int k_min, int k_max, std::ostream& out) {
  const BenchTable t = run_bench(cfg.model, k_min, k_max, cfg.seed);
  out << "K,n,L_K,mode,stage,mults,adds,exps,wall_ms\n";
  for (const auto& r : t.rows) {
    out << r.num_scales << ',' << r.n << ',' << r.tokens << ',' << mode_name(r.mode) << ','
        << bench_stage_name(r.stage) << ',' << r.ops.mults << ',' << r.ops.adds << ',' << r.ops.exps << ','
        << fmt_fixed(r.wall_ms, 3) << '\n';
  }
  for (const auto& s : t.slopes) {
    out << "slope," << bench_stage_name(s.stage) << ',' << mode_name(s.mode) << ',' << fmt_fixed(s.fit.slope, 6)
        << '\n';
  }
  return 0;
}

int cmd_verify(const RunConfig& cfg, std::size_t trials, double bound_scale, std::ostream& out) {
  VerifyOptions opts;
  opts.seed = cfg.seed;
  opts.bound_scale = bound_scale;
  const std::size_t b4 = std::max<std::size_t>(1, trials / 5);
  const std::size_t seeds = std::max<std::size_t>(1, trials / 10);
  const BoundReport reports[] = {
      verify_poly_lipschitz(trials, opts),    verify_inner_product(trials, opts),
      verify_attention_error(b4, opts),       verify_upinterp_nonexpansive(trials, opts),
      verify_conv_error(trials, opts),        verify_mode_equivalence(seeds, cfg.model, opts)};
  nlohmann::ordered_json j;
  bool ok = true;
  for (const auto& r : reports) {
    j[r.suite] = report_to_json(r);
    ok = ok && r.passed();
  }
  out << j.dump(2) << '\n';
  return ok ? 0 : 3;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out) {
  const VarModel model = build_model(cfg.model, cfg.seed);
  const TokenMap x_init = initial_token(cfg.model.d, cfg.model.approx.r_bound, cfg.seed);
  const RunResult fast = run_model(model, x_init, ExecutionMode::Fast);
  const RunResult exact = run_model(model, x_init, ExecutionMode::Exact);
  const double diff = inf_norm_diff(fast.image, exact.image);
  const double bound = fast.trace.composed_bound;
  const bool pass = diff <= bound;
  nlohmann::ordered_json j;
  j["inf_norm_diff"] = diff;
  j["composed_bound"] = bound;
  j["pass"] = pass;
  out << j.dump(2) << '\n';
  return pass ? 0 : 3;
}

int cmd_phase(const RunConfig& cfg, std::size_t n, const std::string& c_list, std::ostream& out) {
  const std::vector<double> cs = parse_c_list(c_list);
  const auto rows = phase_sweep(n, cs, cfg.model.approx.delta, cfg.model.approx.g_max, cfg.model.d, cfg.seed);
  out << "c,R,b,g,status,err\n";
  for (const auto& r : rows) {
    out << fmt(r.c) << ',' << fmt(r.r) << ',' << fmt(r.b) << ',' << r.g << ',' << (r.ok ? "ok" : "FAIL") << ','
        << (r.ok ? fmt(r.err) : std::string("NA")) << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pyramid token generation with exact and low-rank attention"};
  app.require_subcommand(1);

  CommonFlags gen_f;
  CommonFlags bench_f;
  CommonFlags verify_f;
  CommonFlags compare_f;
  CommonFlags phase_f;
  std::string out_dir = ".";
  int k_min = 3;
  int k_max = 6;
  std::size_t trials = 1000;
  double bound_scale = 1.0;
  std::size_t phase_n = 4096;
  std::string c_list = default_c_list();

  auto* gen = app.add_subcommand("generate", "run the pipeline and write image.f64 + trace.json");
  add_common(gen, gen_f);
  gen->add_option("--out", out_dir, "output directory");

  auto* bench = app.add_subcommand("bench", "operation-count CSV over a range of scale counts");
  add_common(bench, bench_f);
  bench->add_option("--k-min", k_min, "smallest K");
  bench->add_option("--k-max", k_max, "largest K");

  auto* verify = app.add_subcommand("verify", "randomised bound suites as JSON");
  add_common(verify, verify_f);
  verify->add_option("--trials", trials, "trials per suite");
  verify->add_option("--bound-scale", bound_scale)->group("");

  auto* compare = app.add_subcommand("compare", "FAST vs EXACT image difference against the composed bound");
  add_common(compare, compare_f);

  auto* phase = app.add_subcommand("phase", "degree / feasibility sweep over R = c sqrt(ln n)");
  add_common(phase, phase_f);
  phase->add_option("--n", phase_n, "sequence length n");
  phase->add_option("--c-list", c_list, "comma-separated ascending c values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(resolve(gen, gen_f), out_dir, out);
    if (bench->parsed()) return cmd_bench(resolve(bench, bench_f), k_min, k_max, out);
    if (verify->parsed()) {
      if (trials < 1) throw ConfigError("trials must be >= 1");
      return cmd_verify(resolve(verify, verify_f), trials, bound_scale, out);
    }
    if (compare->parsed()) return cmd_compare(resolve(compare, compare_f), out);
    if (phase->parsed()) return cmd_phase(resolve(phase, phase_f), phase_n, c_list, out);
  } catch (const RangeTooLarge& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace varfast
