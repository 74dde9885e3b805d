#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sadepth/core.hpp"
#include "sadepth/gradcheck.hpp"

// Single-sample forward and backward passes of the decoder's spatial
// attention block (SAB) and the encoder's global context block (GCB).
namespace sadepth::blocks {

/// C x H x W tensor, channel-major.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int channels, int height, int width, double fill = 0.0);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const FeatureGrid& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  double& operator()(int c, int y, int x) { return data_[index(c, y, x)]; }
  double operator()(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  static FeatureGrid random(int channels, int height, int width, Rng& rng, double scale = 1.0);

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Spatial attention block
//
//   A   = ReLU(squeeze * concat(d_next, gcb_feat))   1x1 conv, 2C -> 1
//   out = fuse * concat(gcb_feat (.) A, d_next)      3x3 conv, 2C -> C, zero pad 1

struct SabParams {
  int channels = 0;
  std::vector<double> squeeze_weight;  // 2C, input channel order as in the concat
  double squeeze_bias = 0.0;
  std::vector<double> fuse_weight;     // [out C][in 2C][3][3]
  std::vector<double> fuse_bias;       // C

  static SabParams zeros(int channels);
  static SabParams random(int channels, Rng& rng);

  double& fuse(int out, int in, int ky, int kx) {
    return fuse_weight[((static_cast<std::size_t>(out) * 2 * channels + in) * 3 + ky) * 3 + kx];
  }
  double fuse(int out, int in, int ky, int kx) const {
    return fuse_weight[((static_cast<std::size_t>(out) * 2 * channels + in) * 3 + ky) * 3 + kx];
  }
};

/// State saved by sab_forward for the backward pass.
struct SabCache {
  FeatureGrid d_next;
  FeatureGrid gcb_feat;
  Grid<double> preactivation;  // squeeze output before ReLU
  Grid<double> attention;
  FeatureGrid fused_input;     // concat(gated, d_next)

  bool empty() const { return fused_input.size() == 0; }
};

struct SabOutput {
  FeatureGrid out;
  Grid<double> attention;
  SabCache cache;
};

struct SabGradients {
  FeatureGrid d_next;
  FeatureGrid gcb_feat;
  SabParams params;
};

SabOutput sab_forward(const FeatureGrid& d_next, const FeatureGrid& gcb_feat, const SabParams& params);

/// Reverse-mode gradients of sab_forward. The ReLU passes gradient only
/// where its input was strictly positive.
SabGradients sab_backward(const FeatureGrid& grad_out, const SabCache& cache, const SabParams& params);

// ---------------------------------------------------------------------------
// Global context block
//
//   a   = softmax over positions of (key . x_j)
//   ctx = sum_j a_j x_j
//   t   = up * ReLU(LayerNorm(down * ctx))       C -> C/r -> C
//   out = x + t  (broadcast to every position)

inline constexpr double kLayerNormEpsilon = 1e-5;

struct GcbParams {
  int channels = 0;
  int ratio = 1;
  std::vector<double> key;          // C
  std::vector<double> down;         // [C/r][C]
  std::vector<double> up;           // [C][C/r]
  std::vector<double> norm_scale;   // C/r
  std::vector<double> norm_shift;   // C/r

  int bottleneck() const { return channels / ratio; }

  static GcbParams zeros(int channels, int ratio);
  static GcbParams random(int channels, int ratio, Rng& rng);
};

struct GcbCache {
  FeatureGrid input;
  std::vector<double> attention;   // softmax weights, H*W
  std::vector<double> context;     // C
  std::vector<double> normalized;  // LayerNorm output before scale/shift, C/r
  double inv_std = 0.0;
  std::vector<double> preactivation;  // C/r, after scale/shift
  std::vector<double> activated;      // C/r

  bool empty() const { return context.empty(); }
};

struct GcbOutput {
  FeatureGrid out;
  GcbCache cache;
};

struct GcbGradients {
  FeatureGrid x;
  GcbParams params;
};

GcbOutput gcb_forward(const FeatureGrid& x, const GcbParams& params);
GcbGradients gcb_backward(const FeatureGrid& grad_out, const GcbCache& cache, const GcbParams& params);

// ---------------------------------------------------------------------------
// Finite-difference verification

enum class BlockKind { kSab, kGcb };

struct GradcheckShape {
  int channels = 2;
  int height = 8;
  int width = 8;
  int ratio = 2;  // GCB only
};

/// Random inputs, parameters and upstream gradient drawn from `seed`, then
/// the analytic gradient of <upstream, out> against central differences for
/// every input and parameter entry. Draws are redone until every ReLU input
/// sits at least 1e-2 away from zero, so no probe crosses a kink.
GradcheckReport gradcheck(BlockKind block, std::uint64_t seed,
                          double epsilon = kDefaultGradcheckEpsilon, GradcheckShape shape = {});

}  // namespace sadepth::blocks
