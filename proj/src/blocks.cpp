#include "sadepth/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sadepth::blocks {
namespace {

std::vector<double> uniform_vector(std::size_t n, Rng& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

void check_sab_params(const SabParams& p) {
  const auto c = static_cast<std::size_t>(p.channels);
  if (p.channels < 1 || p.squeeze_weight.size() != 2 * c || p.fuse_weight.size() != c * 2 * c * 9 ||
      p.fuse_bias.size() != c) {
    throw std::invalid_argument("SabParams: shapes inconsistent with channel count");
  }
}

void check_gcb_params(const GcbParams& p) {
  if (p.channels < 1 || p.ratio < 1 || p.channels % p.ratio != 0) {
    throw std::invalid_argument("GcbParams: channels must be a positive multiple of ratio");
  }
  const auto c = static_cast<std::size_t>(p.channels);
  const auto b = static_cast<std::size_t>(p.bottleneck());
  if (p.key.size() != c || p.down.size() != b * c || p.up.size() != c * b ||
      p.norm_scale.size() != b || p.norm_shift.size() != b) {
    throw std::invalid_argument("GcbParams: shapes inconsistent with channel count");
  }
}

}  // namespace

FeatureGrid::FeatureGrid(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 1 || height < 1 || width < 1) {
    throw std::invalid_argument("FeatureGrid: dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
                   static_cast<std::size_t>(width),
               fill);
}

FeatureGrid FeatureGrid::random(int channels, int height, int width, Rng& rng, double scale) {
  FeatureGrid g(channels, height, width);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& x : g.data()) x = u(rng);
  return g;
}

SabParams SabParams::zeros(int channels) {
  if (channels < 1) throw std::invalid_argument("SabParams: channels must be >= 1");
  const auto c = static_cast<std::size_t>(channels);
  return {channels, std::vector<double>(2 * c, 0.0), 0.0, std::vector<double>(c * 2 * c * 9, 0.0),
          std::vector<double>(c, 0.0)};
}

SabParams SabParams::random(int channels, Rng& rng) {
  SabParams p = zeros(channels);
  p.squeeze_weight = uniform_vector(p.squeeze_weight.size(), rng, 1.0);
  p.squeeze_bias = uniform_vector(1, rng, 0.5).front();
  p.fuse_weight = uniform_vector(p.fuse_weight.size(), rng, 0.5);
  p.fuse_bias = uniform_vector(p.fuse_bias.size(), rng, 0.5);
  return p;
}

SabOutput sab_forward(const FeatureGrid& d_next, const FeatureGrid& gcb_feat, const SabParams& params) {
  if (!d_next.same_shape(gcb_feat)) throw std::invalid_argument("sab_forward: input shapes differ");
  check_sab_params(params);
  if (d_next.channels() != params.channels) {
    throw std::invalid_argument("sab_forward: channel count differs from parameters");
  }
  const int C = params.channels;
  const int H = d_next.height();
  const int W = d_next.width();

  SabOutput result;
  SabCache& cache = result.cache;
  cache.d_next = d_next;
  cache.gcb_feat = gcb_feat;
  cache.preactivation = Grid<double>(H, W);
  cache.attention = Grid<double>(H, W);
  cache.fused_input = FeatureGrid(2 * C, H, W);

  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double z = params.squeeze_bias;
      for (int c = 0; c < C; ++c) {
        z += params.squeeze_weight[c] * d_next(c, y, x);
        z += params.squeeze_weight[C + c] * gcb_feat(c, y, x);
      }
      const double a = z > 0.0 ? z : 0.0;
      cache.preactivation(y, x) = z;
      cache.attention(y, x) = a;
      for (int c = 0; c < C; ++c) {
        cache.fused_input(c, y, x) = gcb_feat(c, y, x) * a;
        cache.fused_input(C + c, y, x) = d_next(c, y, x);
      }
    }
  }

  result.out = FeatureGrid(C, H, W);
  const FeatureGrid& in = cache.fused_input;
  for (int o = 0; o < C; ++o) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        double acc = params.fuse_bias[o];
        for (int i = 0; i < 2 * C; ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            const int yy = y + ky - 1;
            if (yy < 0 || yy >= H) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int xx = x + kx - 1;
              if (xx < 0 || xx >= W) continue;
              acc += params.fuse(o, i, ky, kx) * in(i, yy, xx);
            }
          }
        }
        result.out(o, y, x) = acc;
      }
    }
  }
  result.attention = cache.attention;
  return result;
}

SabGradients sab_backward(const FeatureGrid& grad_out, const SabCache& cache, const SabParams& params) {
  if (cache.empty()) throw std::invalid_argument("sab_backward: no forward cache");
  check_sab_params(params);
  const int C = params.channels;
  const int H = cache.d_next.height();
  const int W = cache.d_next.width();
  if (grad_out.channels() != C || grad_out.height() != H || grad_out.width() != W) {
    throw std::invalid_argument("sab_backward: upstream gradient shape differs from output");
  }

  SabGradients g{FeatureGrid(C, H, W), FeatureGrid(C, H, W), SabParams::zeros(C)};
  const FeatureGrid& in = cache.fused_input;
  FeatureGrid d_in(2 * C, H, W);

  for (int o = 0; o < C; ++o) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double go = grad_out(o, y, x);
        g.params.fuse_bias[o] += go;
        if (go == 0.0) continue;
        for (int i = 0; i < 2 * C; ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            const int yy = y + ky - 1;
            if (yy < 0 || yy >= H) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int xx = x + kx - 1;
              if (xx < 0 || xx >= W) continue;
              g.params.fuse(o, i, ky, kx) += go * in(i, yy, xx);
              d_in(i, yy, xx) += go * params.fuse(o, i, ky, kx);
            }
          }
        }
      }
    }
  }

  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double a = cache.attention(y, x);
      double d_a = 0.0;
      for (int c = 0; c < C; ++c) {
        const double d_gated = d_in(c, y, x);
        g.gcb_feat(c, y, x) += d_gated * a;
        d_a += d_gated * cache.gcb_feat(c, y, x);
        g.d_next(c, y, x) += d_in(C + c, y, x);
      }
      const double d_z = cache.preactivation(y, x) > 0.0 ? d_a : 0.0;
      g.params.squeeze_bias += d_z;
      for (int c = 0; c < C; ++c) {
        g.params.squeeze_weight[c] += d_z * cache.d_next(c, y, x);
        g.params.squeeze_weight[C + c] += d_z * cache.gcb_feat(c, y, x);
        g.d_next(c, y, x) += d_z * params.squeeze_weight[c];
        g.gcb_feat(c, y, x) += d_z * params.squeeze_weight[C + c];
      }
    }
  }
  return g;
}

GcbParams GcbParams::zeros(int channels, int ratio) {
  if (channels < 1 || ratio < 1 || channels % ratio != 0) {
    throw std::invalid_argument("GcbParams: channels must be a positive multiple of ratio");
  }
  const auto c = static_cast<std::size_t>(channels);
  const auto b = static_cast<std::size_t>(channels / ratio);
  return {channels,
          ratio,
          std::vector<double>(c, 0.0),
          std::vector<double>(b * c, 0.0),
          std::vector<double>(c * b, 0.0),
          std::vector<double>(b, 1.0),
          std::vector<double>(b, 0.0)};
}

GcbParams GcbParams::random(int channels, int ratio, Rng& rng) {
  GcbParams p = zeros(channels, ratio);
  p.key = uniform_vector(p.key.size(), rng, 1.0);
  p.down = uniform_vector(p.down.size(), rng, 1.0);
  p.up = uniform_vector(p.up.size(), rng, 1.0);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  for (double& s : p.norm_scale) s = scale(rng);
  p.norm_shift = uniform_vector(p.norm_shift.size(), rng, 0.5);
  return p;
}

GcbOutput gcb_forward(const FeatureGrid& x, const GcbParams& params) {
  check_gcb_params(params);
  if (x.channels() != params.channels) {
    throw std::invalid_argument("gcb_forward: channel count differs from parameters");
  }
  const int C = params.channels;
  const int B = params.bottleneck();
  const int N = x.height() * x.width();
  auto at = [&](int c, int j) { return x.data()[static_cast<std::size_t>(c) * N + j]; };

  GcbOutput result;
  GcbCache& cache = result.cache;
  cache.input = x;

  std::vector<double> logits(N, 0.0);
  for (int j = 0; j < N; ++j) {
    for (int c = 0; c < C; ++c) logits[j] += params.key[c] * at(c, j);
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  cache.attention.resize(N);
  double total = 0.0;
  for (int j = 0; j < N; ++j) {
    cache.attention[j] = std::exp(logits[j] - peak);
    total += cache.attention[j];
  }
  for (double& a : cache.attention) a /= total;

  cache.context.assign(C, 0.0);
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j < N; ++j) cache.context[c] += cache.attention[j] * at(c, j);
  }

  std::vector<double> hidden(B, 0.0);
  for (int k = 0; k < B; ++k) {
    for (int c = 0; c < C; ++c) hidden[k] += params.down[k * C + c] * cache.context[c];
  }
  const double mean = std::accumulate(hidden.begin(), hidden.end(), 0.0) / B;
  double var = 0.0;
  for (double h : hidden) var += (h - mean) * (h - mean);
  var /= B;
  cache.inv_std = 1.0 / std::sqrt(var + kLayerNormEpsilon);
  cache.normalized.resize(B);
  cache.preactivation.resize(B);
  cache.activated.resize(B);
  for (int k = 0; k < B; ++k) {
    cache.normalized[k] = (hidden[k] - mean) * cache.inv_std;
    cache.preactivation[k] = params.norm_scale[k] * cache.normalized[k] + params.norm_shift[k];
    cache.activated[k] = cache.preactivation[k] > 0.0 ? cache.preactivation[k] : 0.0;
  }

  result.out = x;
  for (int c = 0; c < C; ++c) {
    double t = 0.0;
    for (int k = 0; k < B; ++k) t += params.up[c * B + k] * cache.activated[k];
    auto plane = result.out.data().subspan(static_cast<std::size_t>(c) * N, N);
    for (double& v : plane) v += t;
  }
  return result;
}

GcbGradients gcb_backward(const FeatureGrid& grad_out, const GcbCache& cache, const GcbParams& params) {
  if (cache.empty()) throw std::invalid_argument("gcb_backward: no forward cache");
  check_gcb_params(params);
  if (!grad_out.same_shape(cache.input)) {
    throw std::invalid_argument("gcb_backward: upstream gradient shape differs from output");
  }
  const int C = params.channels;
  const int B = params.bottleneck();
  const int N = cache.input.height() * cache.input.width();
  auto x_at = [&](int c, int j) { return cache.input.data()[static_cast<std::size_t>(c) * N + j]; };

  GcbGradients g{grad_out, GcbParams::zeros(C, params.ratio)};
  std::fill(g.params.norm_scale.begin(), g.params.norm_scale.end(), 0.0);
  auto dx = g.x.data();

  std::vector<double> d_t(C, 0.0);
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j < N; ++j) d_t[c] += grad_out.data()[static_cast<std::size_t>(c) * N + j];
  }

  std::vector<double> d_norm(B, 0.0);
  for (int k = 0; k < B; ++k) {
    double d_act = 0.0;
    for (int c = 0; c < C; ++c) {
      g.params.up[c * B + k] = d_t[c] * cache.activated[k];
      d_act += params.up[c * B + k] * d_t[c];
    }
    const double d_pre = cache.preactivation[k] > 0.0 ? d_act : 0.0;
    g.params.norm_scale[k] = d_pre * cache.normalized[k];
    g.params.norm_shift[k] = d_pre;
    d_norm[k] = d_pre * params.norm_scale[k];
  }

  double mean_d = 0.0;
  double mean_dn = 0.0;
  for (int k = 0; k < B; ++k) {
    mean_d += d_norm[k];
    mean_dn += d_norm[k] * cache.normalized[k];
  }
  mean_d /= B;
  mean_dn /= B;
  std::vector<double> d_ctx(C, 0.0);
  for (int k = 0; k < B; ++k) {
    const double d_hidden = cache.inv_std * (d_norm[k] - mean_d - cache.normalized[k] * mean_dn);
    for (int c = 0; c < C; ++c) {
      g.params.down[k * C + c] = d_hidden * cache.context[c];
      d_ctx[c] += params.down[k * C + c] * d_hidden;
    }
  }

  std::vector<double> d_attn(N, 0.0);
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j < N; ++j) {
      dx[static_cast<std::size_t>(c) * N + j] += cache.attention[j] * d_ctx[c];
      d_attn[j] += d_ctx[c] * x_at(c, j);
    }
  }
  double weighted = 0.0;
  for (int j = 0; j < N; ++j) weighted += cache.attention[j] * d_attn[j];
  for (int j = 0; j < N; ++j) {
    const double d_logit = cache.attention[j] * (d_attn[j] - weighted);
    for (int c = 0; c < C; ++c) {
      g.params.key[c] += d_logit * x_at(c, j);
      dx[static_cast<std::size_t>(c) * N + j] += d_logit * params.key[c];
    }
  }
  return g;
}

namespace {

constexpr double kKinkMargin = 1e-2;

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

GradcheckReport gradcheck_sab(std::uint64_t seed, double epsilon, GradcheckShape shape) {
  Rng rng(seed);
  const int C = shape.channels;
  FeatureGrid d_next;
  FeatureGrid gcb_feat;
  SabParams params;
  for (;;) {
    d_next = FeatureGrid::random(C, shape.height, shape.width, rng);
    gcb_feat = FeatureGrid::random(C, shape.height, shape.width, rng);
    params = SabParams::random(C, rng);
    const auto fwd = sab_forward(d_next, gcb_feat, params);
    const auto pre = fwd.cache.preactivation.data();
    if (std::all_of(pre.begin(), pre.end(), [](double z) { return std::abs(z) > kKinkMargin; })) break;
  }
  const FeatureGrid upstream = FeatureGrid::random(C, shape.height, shape.width, rng);
  const auto fwd = sab_forward(d_next, gcb_feat, params);
  const auto grads = sab_backward(upstream, fwd.cache, params);
  auto objective = [&] { return dot(upstream.data(), sab_forward(d_next, gcb_feat, params).out.data()); };

  GradcheckReport report{"sab", seed, epsilon, kGradcheckTolerance, {}};
  report.entries.push_back(check_gradient("d_next", d_next.data(), grads.d_next.data(), objective, epsilon));
  report.entries.push_back(check_gradient("gcb_feat", gcb_feat.data(), grads.gcb_feat.data(), objective, epsilon));
  report.entries.push_back(check_gradient("squeeze_weight", params.squeeze_weight,
                                          grads.params.squeeze_weight, objective, epsilon));
  report.entries.push_back(check_gradient("squeeze_bias", {&params.squeeze_bias, 1},
                                          {&grads.params.squeeze_bias, 1}, objective, epsilon));
  report.entries.push_back(
      check_gradient("fuse_weight", params.fuse_weight, grads.params.fuse_weight, objective, epsilon));
  report.entries.push_back(
      check_gradient("fuse_bias", params.fuse_bias, grads.params.fuse_bias, objective, epsilon));
  return report;
}

GradcheckReport gradcheck_gcb(std::uint64_t seed, double epsilon, GradcheckShape shape) {
  Rng rng(seed);
  FeatureGrid x;
  GcbParams params;
  for (;;) {
    x = FeatureGrid::random(shape.channels, shape.height, shape.width, rng);
    params = GcbParams::random(shape.channels, shape.ratio, rng);
    const auto fwd = gcb_forward(x, params);
    const auto& pre = fwd.cache.preactivation;
    if (std::all_of(pre.begin(), pre.end(), [](double z) { return std::abs(z) > kKinkMargin; })) break;
  }
  const FeatureGrid upstream = FeatureGrid::random(shape.channels, shape.height, shape.width, rng);
  const auto fwd = gcb_forward(x, params);
  const auto grads = gcb_backward(upstream, fwd.cache, params);
  auto objective = [&] { return dot(upstream.data(), gcb_forward(x, params).out.data()); };

  GradcheckReport report{"gcb", seed, epsilon, kGradcheckTolerance, {}};
  report.entries.push_back(check_gradient("x", x.data(), grads.x.data(), objective, epsilon));
  report.entries.push_back(check_gradient("key", params.key, grads.params.key, objective, epsilon));
  report.entries.push_back(check_gradient("down", params.down, grads.params.down, objective, epsilon));
  report.entries.push_back(check_gradient("up", params.up, grads.params.up, objective, epsilon));
  report.entries.push_back(
      check_gradient("norm_scale", params.norm_scale, grads.params.norm_scale, objective, epsilon));
  report.entries.push_back(
      check_gradient("norm_shift", params.norm_shift, grads.params.norm_shift, objective, epsilon));
  return report;
}

}  // namespace

GradcheckReport gradcheck(BlockKind block, std::uint64_t seed, double epsilon, GradcheckShape shape) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gradcheck: epsilon must be positive");
  return block == BlockKind::kSab ? gradcheck_sab(seed, epsilon, shape) : gradcheck_gcb(seed, epsilon, shape);
}

}  // namespace sadepth::blocks
