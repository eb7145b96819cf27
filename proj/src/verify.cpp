#include "varfast/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "varfast/errors.hpp"
#include "varfast/fast_attention.hpp"
#include "varfast/parallel.hpp"
#include "varfast/pyramid.hpp"

namespace varfast {

namespace {

// Result of one trial; nullopt marks a skipped trial.
using TrialFn = std::function<std::optional<TrialParams>(std::size_t, Rng&)>;

// Each trial folds its own rounding slack into rhs before scaling.
BoundReport run_trials(std::string suite, std::size_t trials, const VerifyOptions& opts, double threshold,
                       const TrialFn& fn) {
  if (trials == 0) throw ConfigError(suite + ": trials must be >= 1");
  std::vector<std::optional<TrialParams>> results(trials);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng = Rng::substream(opts.seed, t);
    results[t] = fn(t, rng);
  });
  BoundReport report;
  report.suite = std::move(suite);
  report.trials = trials;
  report.threshold = threshold;
  for (auto& r : results) {
    if (!r) {
      ++report.skipped;
      continue;
    }
    r->rhs *= opts.bound_scale;
    const double ratio = r->rhs > 0.0 ? r->lhs / r->rhs : (r->lhs > 0.0 ? INFINITY : 0.0);
    report.max_ratio = std::max(report.max_ratio, ratio);
    if (!(ratio <= threshold)) ++report.violations;
    report.params.push_back(*r);
  }
  return report;
}

double horner(std::span<const double> a, double x) {
  double acc = 0.0;
  for (std::size_t i = a.size(); i-- > 0;) acc = acc * x + a[i];
  return acc;
}

}  // namespace

double poly_lipschitz_constant(std::span<const double> coeffs, double r) {
  double lip = 0.0;
  for (std::size_t i = 1; i < coeffs.size(); ++i) {
    lip += std::abs(coeffs[i]) * static_cast<double>(i) * std::pow(r, static_cast<double>(i - 1));
  }
  return lip;
}

double inner_product_bound(std::size_t k, double eps, double r) {
  const double kk = static_cast<double>(k);
  return 2.0 * kk * eps * r + kk * eps * eps;
}

double conv_error_bound(std::size_t c_in, double eps, double r) { return 9.0 * static_cast<double>(c_in) * eps * r; }

BoundReport verify_poly_lipschitz(std::size_t trials, const VerifyOptions& opts) {
  return run_trials("B1", trials, opts, 1.0, [&](std::size_t, Rng& rng) {
    const auto degree = static_cast<std::size_t>(rng.uniform_int(0, 8));
    std::vector<double> a(degree + 1);
    for (double& c : a) c = rng.uniform(-1.0, 1.0);
    const double r = rng.uniform(1.0, 4.0);
    const double x = rng.uniform(-r, r);
    const double xp = rng.uniform(-r, r);
    double scale = 0.0;
    for (std::size_t i = 0; i <= degree; ++i) scale += std::abs(a[i]) * std::pow(r, static_cast<double>(i));
    TrialParams p;
    p.eps = std::abs(x - xp);
    p.r = r;
    p.g = static_cast<int>(degree);
    p.lhs = std::abs(horner(a, x) - horner(a, xp));
    p.rhs = poly_lipschitz_constant(a, r) * p.eps + kRoundingSlack * scale;
    return std::optional<TrialParams>(p);
  });
}

BoundReport verify_inner_product(std::size_t trials, const VerifyOptions& opts) {
  return run_trials("B2", trials, opts, 1.0, [&](std::size_t, Rng& rng) {
    const auto k = static_cast<std::size_t>(rng.uniform_int(1, 64));
    const double r = rng.uniform(1.0, 4.0);
    const double eps = rng.uniform(0.0, 0.1);
    double uv = 0.0;
    double upvp = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double u = rng.uniform(-r, r);
      const double v = rng.uniform(-r, r);
      const double up = u + rng.uniform(-eps, eps);
      const double vp = v + rng.uniform(-eps, eps);
      uv += u * v;
      upvp += up * vp;
    }
    const double kk = static_cast<double>(k);
    TrialParams p;
    p.eps = eps;
    p.r = r;
    p.k = k;
    p.lhs = std::abs(upvp - uv);
    p.rhs = inner_product_bound(k, eps, r) + kRoundingSlack * kk * (r + eps) * (r + eps);
    return std::optional<TrialParams>(p);
  });
}

AttentionBoundTerms attention_error_rhs(const FlatMatrix& x, const FlatMatrix& x_pert, const AttentionParams& p,
                                        double eps, double delta, int degree) {
  AttentionBoundTerms t;
  t.degree = degree;
  const LowRankFactors f = build_factors_with_degree(x, p, degree);
  const LowRankFactors fp = build_factors_with_degree(x_pert, p, degree);
  const FlatMatrix q = matmul(x, p.w_q);
  const FlatMatrix qp = matmul(x_pert, p.w_q);
  const FlatMatrix k = matmul(x, p.w_k);
  const FlatMatrix kp = matmul(x_pert, p.w_k);
  const FlatMatrix v = matmul(x, p.w_v);
  const FlatMatrix vp = matmul(x_pert, p.w_v);
  double r = 1.0;
  for (const FlatMatrix* m : {&x, &x_pert, &p.w_q, &p.w_k, &p.w_v, &q, &qp, &k, &kp, &f.u, &f.v, &fp.u, &fp.v}) {
    r = std::max(r, inf_norm(*m));
  }
  t.r_eff = r;
  t.k_feat = f.k_feat();
  const double kf = static_cast<double>(t.k_feat);
  const double d = static_cast<double>(p.dim());
  const double g = static_cast<double>(degree);
  const double rg1 = std::pow(r, g + 1.0);
  // Entrywise change of U V^T: k (|dU| |V'| + |U| |dV|) with |dU| <= g R^(g-1) * R d eps.
  const double eta = 2.0 * g * kf * rg1 * d * eps;
  const double b = std::max(f.score_bound, fp.score_bound);
  const double a_min = (1.0 - delta) * std::exp(-b);
  const double rho = eta / a_min;
  t.usable = rho < 1.0;
  if (!t.usable) return t;
  const double value_norm = std::max(inf_norm(v), inf_norm(vp));
  const double c = 1.0 + 4.0 * std::max(g, 1.0) * value_norm / (a_min * (1.0 - rho));
  const double delta_prime = fast_error_bound(delta, inf_norm(v));
  t.rhs = c * kf * rg1 * d * eps + delta_prime;
  t.rhs_alt = c * kf * rg1 * r * d * eps + delta_prime;
  return t;
}

BoundReport verify_attention_error(std::size_t trials, const VerifyOptions& opts) {
  std::vector<double> alt(trials, 0.0);
  BoundReport report =
      run_trials("B4", trials, opts, kSafetyFactor, [&](std::size_t t, Rng& rng) -> std::optional<TrialParams> {
        const auto L = static_cast<std::size_t>(rng.uniform_int(2, 64));
        const std::size_t d = rng.uniform_int(0, 1) == 0 ? 2 : 4;
        const double r = rng.uniform(0.25, 0.75);
        const double eps = std::pow(10.0, rng.uniform(-9.0, -4.0));
        const double delta = std::pow(10.0, rng.uniform(-9.0, -4.0));
        const AttentionParams params = AttentionParams::random(d, r, rng);
        FlatMatrix x(L, d);
        for (double& e : x.data()) e = rng.uniform(-r, r);
        FlatMatrix xp = x;
        for (double& e : xp.data()) e += rng.uniform(-eps, eps);
        const double bx = static_cast<double>(d) * inf_norm(matmul(x, params.w_q)) * inf_norm(matmul(x, params.w_k));
        const double bxp =
            static_cast<double>(d) * inf_norm(matmul(xp, params.w_q)) * inf_norm(matmul(xp, params.w_k));
        constexpr int kGMax = 24;
        const int gx = try_select_degree(bx, delta, kGMax);
        const int gxp = try_select_degree(bxp, delta, kGMax);
        if (gx < 0 || gxp < 0) return std::nullopt;
        const int g = std::max(gx, gxp);
        if (!degree_satisfies(bx, delta, g) || !degree_satisfies(bxp, delta, g)) return std::nullopt;
        const AttentionBoundTerms terms = attention_error_rhs(x, xp, params, eps, delta, g);
        if (!terms.usable) return std::nullopt;
        const FlatMatrix fast = attn_fast_with_degree(xp, params, g, delta).output;
        const FlatMatrix exact = attn_exact(x, params);
        TrialParams p;
        p.eps = eps;
        p.r = terms.r_eff;
        p.g = g;
        p.k = terms.k_feat;
        p.d = d;
        p.lhs = inf_norm_diff(fast, exact);
        p.rhs = terms.rhs;
        alt[t] = terms.rhs_alt > 0.0 ? p.lhs / (terms.rhs_alt * opts.bound_scale) : 0.0;
        return p;
      });
  for (double a : alt) report.max_ratio_alt = std::max(report.max_ratio_alt, a);
  return report;
}

BoundReport verify_upinterp_nonexpansive(std::size_t trials, const VerifyOptions& opts) {
  return run_trials("B5", trials, opts, 1.0, [&](std::size_t, Rng& rng) {
    const auto h = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const auto c = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto th = h * static_cast<std::size_t>(rng.uniform_int(1, 4)) + static_cast<std::size_t>(rng.uniform_int(0, 2));
    const auto tw = w * static_cast<std::size_t>(rng.uniform_int(1, 4)) + static_cast<std::size_t>(rng.uniform_int(0, 2));
    const double eps = rng.uniform(0.0, 0.1);
    TokenMap x(h, w, c);
    for (double& e : x.data()) e = rng.uniform(-1.0, 1.0);
    TokenMap xp = x;
    for (double& e : xp.data()) e += rng.uniform(-eps, eps);
    TrialParams p;
    p.eps = inf_norm_diff(x, xp);
    p.r = 1.0;
    p.c_in = c;
    p.lhs = inf_norm_diff(up_interpolate(x, th, tw), up_interpolate(xp, th, tw));
    p.rhs = p.eps + kRoundingSlack;
    return std::optional<TrialParams>(p);
  });
}

BoundReport verify_conv_error(std::size_t trials, const VerifyOptions& opts) {
  return run_trials("C1", trials, opts, 1.0, [&](std::size_t, Rng& rng) {
    const auto c_in = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto c_out = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto h = static_cast<std::size_t>(rng.uniform_int(1, 8));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, 8));
    const double r = rng.uniform(0.1, 2.0);
    const double eps = rng.uniform(0.0, 0.1);
    const ConvKernelSet k = ConvKernelSet::random(c_in, c_out, r, rng);
    TokenMap x(h, w, c_in);
    for (double& e : x.data()) e = rng.uniform(-1.0, 1.0);
    TokenMap xp = x;
    for (double& e : xp.data()) e += rng.uniform(-eps, eps);
    TrialParams p;
    p.eps = inf_norm_diff(x, xp);
    p.r = r;
    p.c_in = c_in;
    p.lhs = inf_norm_diff(conv_forward(x, k), conv_forward(xp, k));
    p.rhs = conv_error_bound(c_in, p.eps, r) + kRoundingSlack * (1.0 + 9.0 * static_cast<double>(c_in) * r);
    return std::optional<TrialParams>(p);
  });
}

BoundReport verify_mode_equivalence(std::size_t seeds, const ModelConfig& cfg, const VerifyOptions& opts) {
  return run_trials("mode_equiv", seeds, opts, 1.0, [&](std::size_t t, Rng&) -> std::optional<TrialParams> {
    const std::uint64_t seed = Rng::substream_key(opts.seed, t);
    const VarModel model = build_model(cfg, seed);
    const TokenMap x_init = initial_token(cfg.d, cfg.approx.r_bound, seed);
    RunResult fast;
    try {
      fast = run_model(model, x_init, ExecutionMode::Fast);
    } catch (const RangeTooLarge&) {
      return std::nullopt;
    }
    const RunResult exact = run_model(model, x_init, ExecutionMode::Exact);
    TrialParams p;
    p.r = cfg.approx.r_bound;
    p.d = cfg.d;
    for (const auto& layer : fast.trace.layers) {
      p.g = std::max(p.g, layer.degree);
      p.k = std::max(p.k, layer.k_feat);
    }
    p.lhs = inf_norm_diff(fast.image, exact.image);
    p.rhs = fast.trace.composed_bound + kRoundingSlack * (1.0 + inf_norm(exact.image));
    return p;
  });
}

std::vector<PhaseRow> phase_sweep(std::size_t n, std::span<const double> c_values, double delta, int g_max,
                                  std::size_t d, std::uint64_t seed) {
  if (n < 2) throw ConfigError("phase_sweep needs n >= 2");
  for (std::size_t i = 0; i < c_values.size(); ++i) {
    if (!(c_values[i] > 0.0)) throw ConfigError("phase_sweep: c values must be positive");
    if (i > 0 && !(c_values[i] > c_values[i - 1])) throw ConfigError("phase_sweep: c values must be ascending");
  }
  const std::size_t m = std::min<std::size_t>(n, 256);
  std::vector<PhaseRow> rows;
  FlatMatrix eye(d, d);
  for (std::size_t i = 0; i < d; ++i) eye.at(i, i) = 1.0;
  for (std::size_t i = 0; i < c_values.size(); ++i) {
    PhaseRow row;
    row.c = c_values[i];
    row.r = row.c * std::sqrt(std::log(static_cast<double>(n)));
    row.b = static_cast<double>(d) * row.r * row.r;
    const int g = try_select_degree(row.b, delta, g_max);
    if (g < 0) {
      row.g = g_max + 1;
      row.ok = false;
      row.err = std::numeric_limits<double>::quiet_NaN();
      rows.push_back(row);
      continue;
    }
    row.g = g;
    row.ok = true;
    Rng rng = Rng::substream(seed, i);
    FlatMatrix x(m, d);
    for (double& e : x.data()) e = rng.uniform(-row.r, row.r);
    const AttentionParams p(eye, eye, eye, 1.0);
    const FlatMatrix fast = attn_fast_with_degree(x, p, g, delta).output;
    row.err = inf_norm_diff(fast, attn_exact(x, p));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace varfast
