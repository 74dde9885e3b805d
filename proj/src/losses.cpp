#include "sadepth/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sadepth::losses {
namespace {

void require_same_shape(const DepthMap& pred, const DepthMap& gt, const WeightMask* weights,
                        const char* what) {
  if (!pred.values.same_shape(gt.values)) {
    throw std::invalid_argument(std::string(what) + ": prediction and ground truth shapes differ");
  }
  if (weights != nullptr && !weights->weights.same_shape(gt.values)) {
    throw std::invalid_argument(std::string(what) + ": weight mask shape differs");
  }
}

bool jointly_valid(const DepthMap& pred, const DepthMap& gt, int r, int c) {
  return pred.is_valid(r, c) && gt.is_valid(r, c);
}

double weight_at(const WeightMask* weights, int r, int c) {
  return weights == nullptr ? 1.0 : (*weights)(r, c);
}

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

struct BerhuInput {
  const DepthMap* pred;
  const DepthMap* gt;
  const WeightMask* weights;
};

// Shared by the single-map, batch and gradient entry points. `gradients`,
// when non-null, receives one gradient grid per input.
double berhu_impl(std::span<const BerhuInput> inputs, std::vector<Grid<double>>* gradients) {
  double max_abs = 0.0;
  std::size_t argmax_input = 0;
  int argmax_r = -1;
  int argmax_c = -1;
  std::size_t count = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& in = inputs[k];
    require_same_shape(*in.pred, *in.gt, in.weights, "berhu");
    for (int r = 0; r < in.gt->height(); ++r) {
      for (int c = 0; c < in.gt->width(); ++c) {
        if (!jointly_valid(*in.pred, *in.gt, r, c)) continue;
        ++count;
        const double a = std::abs((*in.pred)(r, c) - (*in.gt)(r, c));
        if (a > max_abs) {
          max_abs = a;
          argmax_input = k;
          argmax_r = r;
          argmax_c = c;
        }
      }
    }
  }
  if (count == 0) throw EmptyOverlap();

  if (gradients != nullptr) {
    gradients->clear();
    for (const auto& in : inputs) gradients->emplace_back(in.gt->height(), in.gt->width(), 0.0);
  }
  const double c_thr = kBerhuThresholdFraction * max_abs;
  if (c_thr == 0.0) return 0.0;

  const double n = static_cast<double>(count);
  double sum = 0.0;
  double d_c = 0.0;  // d loss / d c, accumulated over quadratic-branch pixels
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& in = inputs[k];
    for (int r = 0; r < in.gt->height(); ++r) {
      for (int c = 0; c < in.gt->width(); ++c) {
        if (!jointly_valid(*in.pred, *in.gt, r, c)) continue;
        const double x = (*in.pred)(r, c) - (*in.gt)(r, c);
        const double w = weight_at(in.weights, r, c);
        sum += w * berhu_penalty(x, c_thr);
        if (gradients == nullptr) continue;
        if (std::abs(x) <= c_thr) {
          (*gradients)[k](r, c) = w * sign(x) / n;
        } else {
          (*gradients)[k](r, c) = w * x / c_thr / n;
          d_c += w * (0.5 - x * x / (2.0 * c_thr * c_thr)) / n;
        }
      }
    }
  }
  if (gradients != nullptr) {
    const auto& in = inputs[argmax_input];
    const double x = (*in.pred)(argmax_r, argmax_c) - (*in.gt)(argmax_r, argmax_c);
    (*gradients)[argmax_input](argmax_r, argmax_c) += d_c * kBerhuThresholdFraction * sign(x);
  }
  return sum / n;
}

void check_spacings(std::span<const int> spacings, const DepthMap& gt) {
  if (spacings.empty()) throw std::invalid_argument("scale_invariant_gradient: no spacings");
  const int extent = std::max(gt.height(), gt.width());
  for (int s : spacings) {
    if (s < 1 || s >= extent) {
      std::ostringstream msg;
      msg << "scale_invariant_gradient: spacing " << s << " outside [1, " << extent << ")";
      throw std::invalid_argument(msg.str());
    }
  }
}

// d/da and d/db of (b - a) / |b + a|
std::pair<double, double> normalized_difference_partials(double a, double b) {
  const double sum = a + b;
  const double abs_sum = std::abs(sum);
  const double k = (b - a) * sign(sum) / (sum * sum);
  return {-1.0 / abs_sum - k, 1.0 / abs_sum - k};
}

double sig_impl(const DepthMap& pred, const DepthMap& gt, std::span<const int> spacings,
                const WeightMask* weights, Grid<double>* gradient) {
  require_same_shape(pred, gt, weights, "scale_invariant_gradient");
  check_spacings(spacings, gt);
  const int h = gt.height();
  const int w = gt.width();
  if (gradient != nullptr) *gradient = Grid<double>(h, w, 0.0);

  // One pass accumulates terms; gradient contributions are scaled by 1/count
  // afterwards, once the count is known.
  double sum = 0.0;
  std::size_t count = 0;
  auto component = [&](int r0, int c0, int r1, int c1, double wt, bool& any) -> double {
    if (!gt.values.contains(r1, c1)) return 0.0;
    if (!jointly_valid(pred, gt, r0, c0) || !jointly_valid(pred, gt, r1, c1)) return 0.0;
    any = true;
    const double g_gt = normalized_difference(gt(r0, c0), gt(r1, c1));
    const double g_pred = normalized_difference(pred(r0, c0), pred(r1, c1));
    const double diff = g_gt - g_pred;
    if (gradient != nullptr) {
      const auto [da, db] = normalized_difference_partials(pred(r0, c0), pred(r1, c1));
      (*gradient)(r0, c0) += -2.0 * wt * diff * da;
      (*gradient)(r1, c1) += -2.0 * wt * diff * db;
    }
    return diff * diff;
  };
  for (int s : spacings) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const double wt = weight_at(weights, r, c);
        bool any = false;
        const double term = component(r, c, r, c + s, wt, any) + component(r, c, r + s, c, wt, any);
        if (!any) continue;
        ++count;
        sum += wt * term;
      }
    }
  }
  if (count == 0) throw EmptyOverlap();
  const double n = static_cast<double>(count);
  if (gradient != nullptr) {
    for (double& g : gradient->data()) g /= n;
  }
  return sum / n;
}

double normal_impl(const DepthMap& pred, const DepthMap& gt, const WeightMask* weights,
                   Grid<double>* gradient) {
  require_same_shape(pred, gt, weights, "normal_loss");
  const NormalField n_gt = compute_normals(gt);
  const NormalField n_pred = compute_normals(pred);
  const int h = gt.height();
  const int w = gt.width();
  if (gradient != nullptr) *gradient = Grid<double>(h, w, 0.0);

  double sum = 0.0;
  std::size_t count = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!n_gt.is_valid(r, c) || !n_pred.is_valid(r, c)) continue;
      ++count;
      const double wt = weight_at(weights, r, c);
      const Normal& a = n_gt(r, c);
      const Normal& b = n_pred(r, c);
      sum += wt * normal_term(a, b);
      if (gradient == nullptr) continue;

      const double aa = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
      const double bb = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
      const double ab = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
      const double inv = 1.0 / std::sqrt(aa * bb);
      // d term / d b_k, then b = (-dx, -dy, 1).
      const double d_b0 = -(a[0] * inv - ab * b[0] * inv / bb);
      const double d_b1 = -(a[1] * inv - ab * b[1] * inv / bb);
      const double d_dx = -wt * d_b0;
      const double d_dy = -wt * d_b1;
      if (w > 1) {
        const int c0 = c + 1 < w ? c : c - 1;
        (*gradient)(r, c0 + 1) += d_dx;
        (*gradient)(r, c0) -= d_dx;
      }
      if (h > 1) {
        const int r0 = r + 1 < h ? r : r - 1;
        (*gradient)(r0 + 1, c) += d_dy;
        (*gradient)(r0, c) -= d_dy;
      }
    }
  }
  if (count == 0) throw EmptyOverlap();
  const double n = static_cast<double>(count);
  if (gradient != nullptr) {
    for (double& g : gradient->data()) g /= n;
  }
  return sum / n;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_pairable(std::span<const SamplePoint> points) {
  if (points.size() < 2) throw std::invalid_argument("gfrl: needs at least two points");
}

}  // namespace

double berhu_penalty(double residual, double c) {
  const double a = std::abs(residual);
  if (a <= c) return a;
  return (residual * residual + c * c) / (2.0 * c);
}

double berhu(const DepthMap& pred, const DepthMap& gt, const WeightMask* weights) {
  const BerhuInput in{&pred, &gt, weights};
  return berhu_impl({&in, 1}, nullptr);
}

LossAndGradient berhu_with_gradient(const DepthMap& pred, const DepthMap& gt,
                                    const WeightMask* weights) {
  const BerhuInput in{&pred, &gt, weights};
  std::vector<Grid<double>> grads;
  const double value = berhu_impl({&in, 1}, &grads);
  return {value, std::move(grads.front())};
}

double berhu_batch(std::span<const DepthMap> preds, std::span<const DepthMap> gts,
                   std::span<const WeightMask> weights) {
  if (preds.size() != gts.size() || (!weights.empty() && weights.size() != gts.size())) {
    throw std::invalid_argument("berhu_batch: batch sizes differ");
  }
  std::vector<BerhuInput> inputs;
  inputs.reserve(preds.size());
  for (std::size_t k = 0; k < preds.size(); ++k) {
    inputs.push_back({&preds[k], &gts[k], weights.empty() ? nullptr : &weights[k]});
  }
  return berhu_impl(inputs, nullptr);
}

double normalized_difference(double a, double b) { return (b - a) / std::abs(b + a); }

double scale_invariant_gradient(const DepthMap& pred, const DepthMap& gt,
                                std::span<const int> spacings, const WeightMask* weights) {
  return sig_impl(pred, gt, spacings, weights, nullptr);
}

LossAndGradient scale_invariant_gradient_with_gradient(const DepthMap& pred, const DepthMap& gt,
                                                       std::span<const int> spacings,
                                                       const WeightMask* weights) {
  LossAndGradient out;
  out.value = sig_impl(pred, gt, spacings, weights, &out.gradient);
  return out;
}

double normal_term(const Normal& n, const Normal& m) {
  const double nn = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
  const double mm = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
  const double nm = n[0] * m[0] + n[1] * m[1] + n[2] * m[2];
  const double cosine = std::clamp(nm / std::sqrt(nn * mm), -1.0, 1.0);
  return 1.0 - cosine;
}

double normal_loss(const DepthMap& pred, const DepthMap& gt, const WeightMask* weights) {
  return normal_impl(pred, gt, weights, nullptr);
}

LossAndGradient normal_loss_with_gradient(const DepthMap& pred, const DepthMap& gt,
                                          const WeightMask* weights) {
  LossAndGradient out;
  out.value = normal_impl(pred, gt, weights, &out.gradient);
  return out;
}

std::vector<SamplePoint> sample_grid_points(const DepthMap& gt, const DepthMap& pred, int rows,
                                            int cols, Rng& rng) {
  require_same_shape(pred, gt, nullptr, "sample_grid_points");
  if (rows < 1 || cols < 1) throw std::invalid_argument("sample_grid_points: block counts must be >= 1");
  if (gt.height() < rows || gt.width() < cols) {
    throw std::invalid_argument("sample_grid_points: image smaller than the block grid");
  }
  // Block k of n over extent e starts at k*base + max(0, k - (n - rem)).
  auto bounds = [](int k, int n, int extent) {
    const int base = extent / n;
    const int rem = extent % n;
    const int first_long = n - rem;
    const int start = k * base + std::max(0, k - first_long);
    const int size = base + (k >= first_long ? 1 : 0);
    return std::pair{start, start + size};
  };

  std::vector<SamplePoint> points;
  std::vector<std::pair<int, int>> candidates;
  for (int br = 0; br < rows; ++br) {
    const auto [r0, r1] = bounds(br, rows, gt.height());
    for (int bc = 0; bc < cols; ++bc) {
      const auto [c0, c1] = bounds(bc, cols, gt.width());
      candidates.clear();
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
          if (jointly_valid(pred, gt, r, c)) candidates.emplace_back(r, c);
        }
      }
      if (candidates.empty()) continue;
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      const auto [r, c] = candidates[pick(rng)];
      points.push_back({r, c, gt(r, c), pred(r, c)});
    }
  }
  return points;
}

int ordinal_relation(double d1, double d2, double tau) {
  if (!is_valid_depth(d1) || !is_valid_depth(d2)) {
    throw std::invalid_argument("ordinal_relation: depths must be finite and positive");
  }
  if (std::abs(d1 - d2) / std::max(d1, d2) < tau) return 0;
  return d1 > d2 ? 1 : -1;
}

std::vector<OrdinalPair> make_pairs(std::span<const SamplePoint> points, double tau) {
  std::vector<OrdinalPair> pairs;
  pairs.reserve(points.size() * (points.size() > 0 ? points.size() - 1 : 0) / 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      pairs.push_back({points[i], points[j], ordinal_relation(points[i].depth_gt, points[j].depth_gt, tau)});
    }
  }
  return pairs;
}

double focal_weight(int relation, double diff) { return sigmoid(-relation * diff); }

double gfrl_pair_term(int relation, double diff, double gamma) {
  if (relation == 0) return diff * diff;
  const double z = -relation * diff;
  return std::pow(sigmoid(z), gamma) * softplus(z);
}

double gfrl(std::span<const SamplePoint> points, double gamma, double tau) {
  require_pairable(points);
  if (!(gamma >= 0.0)) throw std::invalid_argument("gfrl: gamma must be non-negative");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const int r = ordinal_relation(points[i].depth_gt, points[j].depth_gt, tau);
      sum += gfrl_pair_term(r, points[i].depth_pred - points[j].depth_pred, gamma);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

PointLossAndGradient gfrl_with_gradient(std::span<const SamplePoint> points, double gamma,
                                        double tau) {
  require_pairable(points);
  if (!(gamma >= 0.0)) throw std::invalid_argument("gfrl: gamma must be non-negative");
  PointLossAndGradient out;
  out.gradient.assign(points.size(), 0.0);
  const double n = static_cast<double>(points.size() * (points.size() - 1) / 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const int r = ordinal_relation(points[i].depth_gt, points[j].depth_gt, tau);
      const double diff = points[i].depth_pred - points[j].depth_pred;
      sum += gfrl_pair_term(r, diff, gamma);
      double d_diff = 0.0;
      if (r == 0) {
        d_diff = 2.0 * diff;
      } else {
        const double z = -r * diff;
        const double w = sigmoid(z);
        const double w_gamma = std::pow(w, gamma);
        const double d_z = gamma * w_gamma * (1.0 - w) * softplus(z) + w_gamma * w;
        d_diff = -r * d_z;
      }
      out.gradient[i] += d_diff / n;
      out.gradient[j] -= d_diff / n;
    }
  }
  out.value = sum / n;
  return out;
}

double relative_loss(std::span<const SamplePoint> points, double tau) {
  require_pairable(points);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const int r = ordinal_relation(points[i].depth_gt, points[j].depth_gt, tau);
      const double diff = points[i].depth_pred - points[j].depth_pred;
      sum += r == 0 ? diff * diff : softplus(-r * diff);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

Stage stage_from_int(int stage) {
  if (stage < 1 || stage > 3) throw std::invalid_argument("stage must be 1, 2 or 3");
  return static_cast<Stage>(stage);
}

LossBreakdown total_loss(const DepthMap& pred, const DepthMap& gt, const TotalLossOptions& options,
                         const WeightMask* edge_weights, Rng& rng) {
  require_valid(pred, "total_loss prediction");
  require_valid(gt, "total_loss ground truth");
  std::vector<int> spacings;
  const int extent = std::max(gt.height(), gt.width());
  std::copy_if(options.spacings.begin(), options.spacings.end(), std::back_inserter(spacings),
               [extent](int s) { return s >= 1 && s < extent; });
  if (spacings.empty()) throw std::invalid_argument("total_loss: no spacing fits the image");

  LossBreakdown out;
  out.stage = options.stage;
  out.lambdas = options.lambdas;
  out.berhu = berhu(pred, gt, edge_weights);
  out.gradient = scale_invariant_gradient(pred, gt, spacings,
                                          options.weight_gradient ? edge_weights : nullptr);
  out.normal = normal_loss(pred, gt, options.weight_normal ? edge_weights : nullptr);
  const auto points = sample_grid_points(gt, pred, std::min(options.grid_rows, gt.height()),
                                         std::min(options.grid_cols, gt.width()), rng);
  out.gfrl = gfrl(points, options.gamma, options.tau);

  const auto& l = options.lambdas;
  out.total = l[0] * out.berhu;
  if (options.stage == Stage::kII || options.stage == Stage::kIII) out.total += l[1] * out.gradient;
  if (options.stage == Stage::kIII) out.total += l[2] * out.normal + l[3] * out.gfrl;
  return out;
}

namespace {

// Prediction whose residuals all sit at least `margin` away from the BerHu
// junction and whose largest residual is unique by the same margin.
DepthMap berhu_safe_prediction(const DepthMap& gt, Rng& rng, double margin) {
  std::uniform_real_distribution<double> noise(-0.9, 0.9);
  for (;;) {
    Grid<double> values(gt.height(), gt.width());
    std::vector<double> mags;
    for (int r = 0; r < gt.height(); ++r) {
      for (int c = 0; c < gt.width(); ++c) {
        values(r, c) = gt(r, c) + noise(rng);
        mags.push_back(std::abs(values(r, c) - gt(r, c)));
      }
    }
    std::sort(mags.begin(), mags.end());
    const double c_thr = kBerhuThresholdFraction * mags.back();
    bool ok = mags.size() < 2 || mags.back() - mags[mags.size() - 2] > margin;
    for (double m : mags) ok = ok && std::abs(m - c_thr) > margin;
    if (ok) return DepthMap(std::move(values));
  }
}

}  // namespace

GradcheckReport gradcheck_losses(std::uint64_t seed, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gradcheck: epsilon must be positive");
  constexpr int kSize = 8;
  Rng rng(seed);
  std::uniform_real_distribution<double> depth(1.0, 5.0);
  std::bernoulli_distribution edge(0.3);

  Grid<double> gt_values(kSize, kSize);
  WeightMask weights = WeightMask::ones(kSize, kSize);
  for (int r = 0; r < kSize; ++r) {
    for (int c = 0; c < kSize; ++c) {
      gt_values(r, c) = depth(rng);
      if (edge(rng)) weights.weights(r, c) = kEdgeWeight;
    }
  }
  const DepthMap gt(std::move(gt_values));
  DepthMap pred = berhu_safe_prediction(gt, rng, 1e-3);
  const std::vector<int> spacings = {1, 2, 4};

  GradcheckReport report;
  report.block = "losses";
  report.seed = seed;
  report.epsilon = epsilon;
  auto values = pred.values.data();

  {
    const auto g = berhu_with_gradient(pred, gt);
    report.entries.push_back(check_gradient("berhu", values, g.gradient.data(),
                                            [&] { return berhu(pred, gt); }, epsilon));
  }
  {
    const auto g = berhu_with_gradient(pred, gt, &weights);
    report.entries.push_back(check_gradient("berhu_weighted", values, g.gradient.data(),
                                            [&] { return berhu(pred, gt, &weights); }, epsilon));
  }
  {
    const auto g = scale_invariant_gradient_with_gradient(pred, gt, spacings);
    report.entries.push_back(check_gradient(
        "gradient", values, g.gradient.data(),
        [&] { return scale_invariant_gradient(pred, gt, spacings); }, epsilon));
  }
  {
    const auto g = normal_loss_with_gradient(pred, gt);
    report.entries.push_back(check_gradient("normal", values, g.gradient.data(),
                                            [&] { return normal_loss(pred, gt); }, epsilon));
  }
  {
    auto points = sample_grid_points(gt, pred, kSize, kSize, rng);
    const auto g = gfrl_with_gradient(points);
    std::vector<double> preds;
    for (const auto& p : points) preds.push_back(p.depth_pred);
    auto objective = [&] {
      for (std::size_t k = 0; k < points.size(); ++k) points[k].depth_pred = preds[k];
      return gfrl(points);
    };
    report.entries.push_back(check_gradient("gfrl", preds, g.gradient, objective, epsilon));
  }
  return report;
}

}  // namespace sadepth::losses
