#pragma once

#include <cstddef>

#include "sadepth/core.hpp"

// Standard depth-estimation metrics.
//
// Convention: within this module the *ground truth* is the reference value
// in every ratio, i.e. rel = mean |pred - gt| / gt. This is the definition
// used by published benchmark numbers.
namespace sadepth::metrics {

inline constexpr double kDeltaBase = 1.25;

struct MetricsReport {
  double rel = 0.0;
  double rmse = 0.0;
  double log10 = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t pixel_count = 0;
};

/// Metrics over jointly-valid pixels. A pixel counts toward delta_i when
/// max(pred / gt, gt / pred) < 1.25^i (strict). Throws EmptyOverlap.
MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt);

/// Copy of `pred` with every valid depth above `max_depth` set to it.
DepthMap clamp_max(const DepthMap& pred, double max_depth);

/// Pixel-count-weighted recombination of per-image reports: rel, log10 and
/// the deltas are weighted means, rmse is the root of the weighted mean of
/// squared rmse values.
class MetricsAccumulator {
 public:
  void add(const MetricsReport& report);
  std::size_t pixel_count() const { return pixels_; }
  /// Throws EmptyOverlap when nothing was added.
  MetricsReport result() const;

 private:
  double rel_ = 0.0;
  double squared_ = 0.0;
  double log10_ = 0.0;
  double delta_[3] = {0.0, 0.0, 0.0};
  std::size_t pixels_ = 0;
};

}  // namespace sadepth::metrics
