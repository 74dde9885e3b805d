#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sadepth {

/// Random source used throughout the library. Every stochastic operation
/// takes one by reference so results are reproducible from a seed.
using Rng = std::mt19937_64;

/// Raised when an operation finds no pixel (or sample) valid in all inputs.
class EmptyOverlap : public std::runtime_error {
 public:
  EmptyOverlap() : std::runtime_error("empty overlap") {}
};

/// Dense row-major 2D container.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{}) : height_(height), width_(width) {
    if (height < 0 || width < 0) throw std::invalid_argument("grid dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int row, int col) { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const { return data_[index(row, col)]; }

  bool contains(int row, int col) const {
    return row >= 0 && row < height_ && col >= 0 && col < width_;
  }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

/// Per-pixel depth in meters plus a validity flag. Invalid pixels (sensor
/// holes) are ignored by every loss and metric.
struct DepthMap {
  Grid<double> values;
  Grid<std::uint8_t> valid;

  DepthMap() = default;
  /// Validity derived from the values: finite and strictly positive.
  explicit DepthMap(Grid<double> depth);
  /// Explicit validity. Only the shapes are checked here; use validate() for
  /// the full invariant set.
  DepthMap(Grid<double> depth, Grid<std::uint8_t> validity);

  static DepthMap from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DepthMap constant(int height, int width, double value);

  int height() const { return values.height(); }
  int width() const { return values.width(); }
  double operator()(int row, int col) const { return values(row, col); }
  bool is_valid(int row, int col) const { return valid(row, col) != 0; }
  std::size_t valid_count() const;

  friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

bool is_valid_depth(double value);

struct BinaryMask {
  Grid<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int height, int width) : bits(height, width, 0) {}
  explicit BinaryMask(Grid<std::uint8_t> b) : bits(std::move(b)) {}

  int height() const { return bits.height(); }
  int width() const { return bits.width(); }
  bool operator()(int row, int col) const { return bits(row, col) != 0; }
  void set(int row, int col, bool on) { bits(row, col) = on ? 1 : 0; }
  std::size_t count() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

inline constexpr double kEdgeWeight = 5.0;
inline constexpr double kBaseWeight = 1.0;

/// Per-pixel loss multipliers; every entry is kBaseWeight or kEdgeWeight.
struct WeightMask {
  Grid<double> weights;

  int height() const { return weights.height(); }
  int width() const { return weights.width(); }
  double operator()(int row, int col) const { return weights(row, col); }

  static WeightMask ones(int height, int width) { return {Grid<double>(height, width, kBaseWeight)}; }
};

using Normal = std::array<double, 3>;

/// Un-normalized surface normals [-dx, -dy, 1]. A normal is valid only when
/// its pixel and every pixel its finite differences touch are valid.
struct NormalField {
  Grid<Normal> vectors;
  Grid<std::uint8_t> valid;

  int height() const { return vectors.height(); }
  int width() const { return vectors.width(); }
  const Normal& operator()(int row, int col) const { return vectors(row, col); }
  bool is_valid(int row, int col) const { return valid(row, col) != 0; }

  friend bool operator==(const NormalField&, const NormalField&) = default;
};

struct Violation {
  int row = -1;  // -1 when the violation is not tied to a pixel
  int col = -1;
  std::string what;
};

std::vector<Violation> validate(const DepthMap& map);

/// Throws std::invalid_argument naming the first violation.
void require_valid(const DepthMap& map, const char* what);

/// Forward differences along x (columns) and y (rows), with the last
/// column/row reusing the previous difference.
NormalField compute_normals(const DepthMap& map);

struct CannyThresholds {
  double low = 0.0;
  double high = 0.0;
};

inline constexpr double kCannySigma = 1.4;
inline constexpr int kCannyTaps = 5;

/// Scale-free defaults: 0.1 and 0.2 times the largest Sobel gradient
/// magnitude of the smoothed map.
CannyThresholds default_canny_thresholds(const DepthMap& map);

/// Canny on raw depth values: 5-tap Gaussian (sigma 1.4) normalized over
/// valid pixels, Sobel, non-maximum suppression, hysteresis with
/// 8-connectivity. Invalid pixels never become edges. Maps smaller than the
/// smoothing kernel yield an empty mask.
BinaryMask canny_edges(const DepthMap& map, double low, double high);
BinaryMask canny_edges(const DepthMap& map);

/// Square kernel x kernel dilation; the window is clipped at the border.
BinaryMask dilate(const BinaryMask& mask, int kernel);

inline constexpr int kBoundaryKernel = 5;

/// Canny edges of the ground truth dilated by a 5x5 square; kEdgeWeight on
/// the band, kBaseWeight elsewhere.
WeightMask boundary_weight_mask(const DepthMap& gt, double low, double high);
WeightMask boundary_weight_mask(const DepthMap& gt);

}  // namespace sadepth
