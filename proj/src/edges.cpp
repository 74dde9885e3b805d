#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "sadepth/core.hpp"

namespace sadepth {
namespace {

struct GradientField {
  Grid<double> gx;
  Grid<double> gy;
  Grid<double> magnitude;
  double max_magnitude = 0.0;
};

std::array<double, kCannyTaps> gaussian_taps() {
  std::array<double, kCannyTaps> taps{};
  constexpr int half = kCannyTaps / 2;
  double sum = 0.0;
  for (int k = -half; k <= half; ++k) {
    taps[k + half] = std::exp(-(k * k) / (2.0 * kCannySigma * kCannySigma));
    sum += taps[k + half];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// Separable 1D pass with replicated borders, along columns if `horizontal`.
Grid<double> convolve(const Grid<double>& in, const std::array<double, kCannyTaps>& taps,
                      bool horizontal) {
  constexpr int half = kCannyTaps / 2;
  Grid<double> out(in.height(), in.width());
  for (int r = 0; r < in.height(); ++r) {
    for (int c = 0; c < in.width(); ++c) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) {
        acc += taps[k + half] * (horizontal ? in(r, clamp_index(c + k, in.width()))
                                            : in(clamp_index(r + k, in.height()), c));
      }
      out(r, c) = acc;
    }
  }
  return out;
}

// Gaussian smoothing normalized over valid pixels, so holes do not bleed a
// zero level into their neighbourhood.
Grid<double> smooth_valid(const DepthMap& map) {
  const auto taps = gaussian_taps();
  Grid<double> weighted(map.height(), map.width());
  Grid<double> support(map.height(), map.width());
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (map.is_valid(r, c)) {
        weighted(r, c) = map(r, c);
        support(r, c) = 1.0;
      }
    }
  }
  weighted = convolve(convolve(weighted, taps, true), taps, false);
  support = convolve(convolve(support, taps, true), taps, false);
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      weighted(r, c) = support(r, c) > 0.0 ? weighted(r, c) / support(r, c) : 0.0;
    }
  }
  return weighted;
}

GradientField sobel(const DepthMap& map) {
  const int h = map.height();
  const int w = map.width();
  const Grid<double> s = smooth_valid(map);
  GradientField g{Grid<double>(h, w), Grid<double>(h, w), Grid<double>(h, w), 0.0};
  auto at = [&](int r, int c) { return s(clamp_index(r, h), clamp_index(c, w)); };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!map.is_valid(r, c)) continue;
      const double gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
      const double gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
      g.gx(r, c) = gx;
      g.gy(r, c) = gy;
      g.magnitude(r, c) = std::hypot(gx, gy);
      g.max_magnitude = std::max(g.max_magnitude, g.magnitude(r, c));
    }
  }
  return g;
}

bool below_kernel(const DepthMap& map) {
  return map.height() < kCannyTaps || map.width() < kCannyTaps;
}

}  // namespace

CannyThresholds default_canny_thresholds(const DepthMap& map) {
  require_valid(map, "canny_edges");
  if (below_kernel(map)) return {};
  const double g = sobel(map).max_magnitude;
  return {0.1 * g, 0.2 * g};
}

BinaryMask canny_edges(const DepthMap& map, double low, double high) {
  if (!(low >= 0.0) || !(high >= low)) {
    throw std::invalid_argument("canny_edges: requires 0 <= low <= high");
  }
  require_valid(map, "canny_edges");
  const int h = map.height();
  const int w = map.width();
  BinaryMask edges(h, w);
  if (below_kernel(map)) return edges;

  const GradientField g = sobel(map);
  // Magnitudes within this band count as ties; rounding differences between
  // mirror-symmetric pixels must not decide which of them survives.
  const double tie = 1e-9 * g.max_magnitude;
  auto mag = [&](int r, int c) { return g.magnitude.contains(r, c) ? g.magnitude(r, c) : 0.0; };

  Grid<std::uint8_t> candidate(h, w, 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double m = g.magnitude(r, c);
      if (!map.is_valid(r, c) || m <= 0.0 || m < low) continue;
      double angle = std::atan2(g.gy(r, c), g.gx(r, c)) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      // Step (dr, dc) along the quantized gradient direction.
      int dr = 0;
      int dc = 0;
      if (angle < 22.5 || angle >= 157.5) {
        dc = 1;
      } else if (angle < 67.5) {
        dr = 1;
        dc = 1;
      } else if (angle < 112.5) {
        dr = 1;
      } else {
        dr = 1;
        dc = -1;
      }
      const double behind = mag(r - dr, c - dc);
      const double ahead = mag(r + dr, c + dc);
      if (m >= behind - tie && m > ahead + tie) candidate(r, c) = 1;
    }
  }

  std::deque<std::pair<int, int>> frontier;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (candidate(r, c) && g.magnitude(r, c) >= high) {
        edges.set(r, c, true);
        frontier.emplace_back(r, c);
      }
    }
  }
  while (!frontier.empty()) {
    const auto [r, c] = frontier.front();
    frontier.pop_front();
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = r + dr;
        const int cc = c + dc;
        if (!candidate.contains(rr, cc) || !candidate(rr, cc) || edges(rr, cc)) continue;
        edges.set(rr, cc, true);
        frontier.emplace_back(rr, cc);
      }
    }
  }
  return edges;
}

BinaryMask canny_edges(const DepthMap& map) {
  const auto t = default_canny_thresholds(map);
  return canny_edges(map, t.low, t.high);
}

BinaryMask dilate(const BinaryMask& mask, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("dilate: kernel must be odd and >= 1");
  const int half = kernel / 2;
  const int h = mask.height();
  const int w = mask.width();
  // Separable: a square structuring element is the product of two segments.
  BinaryMask rows(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      bool on = false;
      for (int k = std::max(0, c - half); k <= std::min(w - 1, c + half) && !on; ++k) on = mask(r, k);
      rows.set(r, c, on);
    }
  }
  BinaryMask out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      bool on = false;
      for (int k = std::max(0, r - half); k <= std::min(h - 1, r + half) && !on; ++k) on = rows(k, c);
      out.set(r, c, on);
    }
  }
  return out;
}

namespace {

WeightMask weights_from_edges(const BinaryMask& edges) {
  const BinaryMask band = dilate(edges, kBoundaryKernel);
  WeightMask out = WeightMask::ones(band.height(), band.width());
  for (int r = 0; r < band.height(); ++r) {
    for (int c = 0; c < band.width(); ++c) {
      if (band(r, c)) out.weights(r, c) = kEdgeWeight;
    }
  }
  return out;
}

}  // namespace

WeightMask boundary_weight_mask(const DepthMap& gt, double low, double high) {
  return weights_from_edges(canny_edges(gt, low, high));
}

WeightMask boundary_weight_mask(const DepthMap& gt) { return weights_from_edges(canny_edges(gt)); }

}  // namespace sadepth
