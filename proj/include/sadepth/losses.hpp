#pragma once

#include <array>
#include <span>
#include <vector>

#include "sadepth/core.hpp"
#include "sadepth/gradcheck.hpp"

// Training losses for depth regression. Every loss is a mean over the
// elements that contribute to it (pixels, (spacing, pixel) pairs, point
// pairs); multiply by the contributing count to recover a plain sum.
namespace sadepth::losses {

/// A loss value together with its gradient with respect to the prediction.
struct LossAndGradient {
  double value = 0.0;
  Grid<double> gradient;  // zero at pixels that do not contribute
};

// ---------------------------------------------------------------------------
// BerHu

inline constexpr double kBerhuThresholdFraction = 0.2;

/// Reversed Huber penalty: |x| up to c, (x^2 + c^2) / (2c) beyond.
double berhu_penalty(double residual, double c);

/// Mean BerHu penalty of (pred - gt) over jointly-valid pixels, with
/// c = 0.2 * max |pred - gt| over those same pixels. When `weights` is given
/// each pixel's penalty is multiplied by its weight before averaging.
/// Returns 0 when every residual is zero. Throws EmptyOverlap.
double berhu(const DepthMap& pred, const DepthMap& gt, const WeightMask* weights = nullptr);

/// Gradient includes the dependence of c on the largest residual, so it is
/// exact wherever no residual sits on the |x| = c junction and the largest
/// residual is unique.
LossAndGradient berhu_with_gradient(const DepthMap& pred, const DepthMap& gt,
                                    const WeightMask* weights = nullptr);

/// BerHu over a batch: c is taken over every jointly-valid pixel of every
/// pair, and the mean runs over all of them. `weights` is empty or one mask
/// per pair.
double berhu_batch(std::span<const DepthMap> preds, std::span<const DepthMap> gts,
                   std::span<const WeightMask> weights = {});

// ---------------------------------------------------------------------------
// Scale-invariant gradient loss

inline const std::vector<int> kDefaultSpacings = {1, 2, 4, 8, 16};

/// Normalized difference (b - a) / |b + a| between a pixel and its offset
/// neighbour.
double normalized_difference(double a, double b);

/// Mean over contributing (spacing, pixel) of ||g_s(gt) - g_s(pred)||^2.
/// The x component at (row, col) uses col + s, the y component row + s; a
/// component contributes when both of its pixels are valid in both maps and
/// inside the image, and a (spacing, pixel) contributes when at least one
/// component does. Every spacing must satisfy 1 <= s < max(height, width).
/// Optional weights multiply each (spacing, pixel) term.
double scale_invariant_gradient(const DepthMap& pred, const DepthMap& gt,
                                std::span<const int> spacings = kDefaultSpacings,
                                const WeightMask* weights = nullptr);

LossAndGradient scale_invariant_gradient_with_gradient(const DepthMap& pred, const DepthMap& gt,
                                                       std::span<const int> spacings = kDefaultSpacings,
                                                       const WeightMask* weights = nullptr);

// ---------------------------------------------------------------------------
// Normal loss

/// 1 - cos(angle) between two normals; always in [0, 2].
double normal_term(const Normal& n, const Normal& m);

/// Mean of 1 - cos(n_gt, n_pred) over pixels where both normal fields are
/// valid. Optional weights multiply each pixel term.
double normal_loss(const DepthMap& pred, const DepthMap& gt, const WeightMask* weights = nullptr);

LossAndGradient normal_loss_with_gradient(const DepthMap& pred, const DepthMap& gt,
                                          const WeightMask* weights = nullptr);

// ---------------------------------------------------------------------------
// Global focal relative loss

struct SamplePoint {
  int row = 0;
  int col = 0;
  double depth_gt = 0.0;
  double depth_pred = 0.0;

  friend bool operator==(const SamplePoint&, const SamplePoint&) = default;
};

inline constexpr int kDefaultGridBlocks = 16;
inline constexpr double kDefaultOrdinalTau = 0.02;
inline constexpr double kDefaultGamma = 2.0;

/// Splits the image into rows x cols near-equal blocks (the last
/// height % rows block rows and width % cols block columns get one extra
/// pixel) and draws one jointly-valid pixel uniformly from each block, in
/// row-major block order. Blocks with no valid pixel are skipped.
std::vector<SamplePoint> sample_grid_points(const DepthMap& gt, const DepthMap& pred, int rows,
                                            int cols, Rng& rng);

/// -1, 0 or +1 as d1 is smaller than, equal to or larger than d2. Equality
/// holds when |d1 - d2| / max(d1, d2) < tau.
int ordinal_relation(double d1, double d2, double tau = kDefaultOrdinalTau);

struct OrdinalPair {
  SamplePoint a;
  SamplePoint b;
  int relation = 0;
};

/// Every unordered pair (i < j) with its ground-truth relation.
std::vector<OrdinalPair> make_pairs(std::span<const SamplePoint> points,
                                    double tau = kDefaultOrdinalTau);

/// Focal modulating weight sigmoid(-r * diff) for a pair with relation r
/// and predicted difference diff = d1 - d2.
double focal_weight(int relation, double diff);

/// Loss of one pair: w^gamma * log(1 + exp(-r * diff)) if r != 0, else diff^2.
double gfrl_pair_term(int relation, double diff, double gamma);

/// Mean pair term over all unordered pairs. Throws std::invalid_argument
/// with fewer than two points.
double gfrl(std::span<const SamplePoint> points, double gamma = kDefaultGamma,
            double tau = kDefaultOrdinalTau);

struct PointLossAndGradient {
  double value = 0.0;
  std::vector<double> gradient;  // d loss / d points[k].depth_pred
};

PointLossAndGradient gfrl_with_gradient(std::span<const SamplePoint> points,
                                        double gamma = kDefaultGamma,
                                        double tau = kDefaultOrdinalTau);

/// Plain ranking loss: log(1 + exp(-r * diff)) for ordered pairs, diff^2
/// otherwise, averaged over pairs. Identical to gfrl with gamma = 0.
double relative_loss(std::span<const SamplePoint> points, double tau = kDefaultOrdinalTau);

// ---------------------------------------------------------------------------
// Staged total

enum class Stage { kI = 1, kII = 2, kIII = 3 };

Stage stage_from_int(int stage);

struct TotalLossOptions {
  Stage stage = Stage::kIII;
  std::array<double, 4> lambdas = {1.0, 1.0, 1.0, 0.5};
  double gamma = kDefaultGamma;
  double tau = kDefaultOrdinalTau;
  /// Clamped to the image size, so small images sample every pixel.
  int grid_rows = kDefaultGridBlocks;
  int grid_cols = kDefaultGridBlocks;
  /// Spacings that do not fit the image (s >= max(height, width)) are dropped.
  std::vector<int> spacings = kDefaultSpacings;
  /// Edge weights always apply to BerHu; these opt the other pixel-wise
  /// terms in.
  bool weight_gradient = false;
  bool weight_normal = false;
};

struct LossBreakdown {
  double berhu = 0.0;
  double gradient = 0.0;
  double normal = 0.0;
  double gfrl = 0.0;
  double total = 0.0;
  Stage stage = Stage::kIII;
  std::array<double, 4> lambdas{};
};

/// Stage-masked weighted sum of the four terms
///   I:   l1 * berhu
///   II:  + l2 * gradient
///   III: + l3 * normal + l4 * gfrl
/// All four components are evaluated and reported whatever the stage.
LossBreakdown total_loss(const DepthMap& pred, const DepthMap& gt, const TotalLossOptions& options,
                         const WeightMask* edge_weights, Rng& rng);

/// Finite-difference check of every loss gradient on a random 8x8 problem.
/// BerHu inputs are drawn away from the |x| = c junction.
GradcheckReport gradcheck_losses(std::uint64_t seed, double epsilon = kDefaultGradcheckEpsilon);

}  // namespace sadepth::losses
