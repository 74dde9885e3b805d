#include "sadepth/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace sadepth::metrics {

MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt) {
  if (!pred.values.same_shape(gt.values)) {
    throw std::invalid_argument("evaluate: prediction and ground truth shapes differ");
  }
  const double thr[3] = {kDeltaBase, kDeltaBase * kDeltaBase, kDeltaBase * kDeltaBase * kDeltaBase};
  double rel = 0.0;
  double sq = 0.0;
  double lg = 0.0;
  std::size_t within[3] = {0, 0, 0};
  std::size_t n = 0;
  for (int r = 0; r < gt.height(); ++r) {
    for (int c = 0; c < gt.width(); ++c) {
      if (!pred.is_valid(r, c) || !gt.is_valid(r, c)) continue;
      const double d = pred(r, c);
      const double g = gt(r, c);
      ++n;
      rel += std::abs(d - g) / g;
      sq += (d - g) * (d - g);
      lg += std::abs(std::log10(d) - std::log10(g));
      const double ratio = std::max(d / g, g / d);
      for (int i = 0; i < 3; ++i) {
        if (ratio < thr[i]) ++within[i];
      }
    }
  }
  if (n == 0) throw EmptyOverlap();
  const double count = static_cast<double>(n);
  return {rel / count,
          std::sqrt(sq / count),
          lg / count,
          static_cast<double>(within[0]) / count,
          static_cast<double>(within[1]) / count,
          static_cast<double>(within[2]) / count,
          n};
}

DepthMap clamp_max(const DepthMap& pred, double max_depth) {
  if (!(max_depth > 0.0)) throw std::invalid_argument("clamp_max: limit must be positive");
  DepthMap out = pred;
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) {
      if (out.is_valid(r, c)) out.values(r, c) = std::min(out.values(r, c), max_depth);
    }
  }
  return out;
}

void MetricsAccumulator::add(const MetricsReport& report) {
  const double n = static_cast<double>(report.pixel_count);
  rel_ += report.rel * n;
  squared_ += report.rmse * report.rmse * n;
  log10_ += report.log10 * n;
  delta_[0] += report.delta1 * n;
  delta_[1] += report.delta2 * n;
  delta_[2] += report.delta3 * n;
  pixels_ += report.pixel_count;
}

MetricsReport MetricsAccumulator::result() const {
  if (pixels_ == 0) throw EmptyOverlap();
  const double n = static_cast<double>(pixels_);
  return {rel_ / n,         std::sqrt(squared_ / n), log10_ / n, delta_[0] / n,
          delta_[1] / n,    delta_[2] / n,           pixels_};
}

}  // namespace sadepth::metrics
