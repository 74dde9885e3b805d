#include "sadepth/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sadepth {

bool is_valid_depth(double value) { return std::isfinite(value) && value > 0.0; }

DepthMap::DepthMap(Grid<double> depth)
    : values(std::move(depth)), valid(values.height(), values.width(), 0) {
  auto v = values.data();
  auto m = valid.data();
  for (std::size_t i = 0; i < v.size(); ++i) m[i] = is_valid_depth(v[i]) ? 1 : 0;
}

DepthMap::DepthMap(Grid<double> depth, Grid<std::uint8_t> validity)
    : values(std::move(depth)), valid(std::move(validity)) {
  if (!values.same_shape(valid)) throw std::invalid_argument("depth and validity shapes differ");
}

DepthMap DepthMap::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int height = static_cast<int>(rows.size());
  const int width = height == 0 ? 0 : static_cast<int>(rows.begin()->size());
  Grid<double> g(height, width);
  int r = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != width) throw std::invalid_argument("ragged rows");
    int c = 0;
    for (double v : row) g(r, c++) = v;
    ++r;
  }
  return DepthMap(std::move(g));
}

DepthMap DepthMap::constant(int height, int width, double value) {
  return DepthMap(Grid<double>(height, width, value));
}

std::size_t DepthMap::valid_count() const {
  auto m = valid.data();
  return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](auto b) { return b != 0; }));
}

std::size_t BinaryMask::count() const {
  auto m = bits.data();
  return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](auto b) { return b != 0; }));
}

std::vector<Violation> validate(const DepthMap& map) {
  std::vector<Violation> out;
  if (map.width() < 1 || map.height() < 1) {
    out.push_back({-1, -1, "map must be at least 1x1"});
  }
  if (!map.values.same_shape(map.valid)) {
    out.push_back({-1, -1, "values and validity shapes differ"});
    return out;
  }
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (!map.is_valid(r, c)) continue;
      const double v = map(r, c);
      if (!std::isfinite(v)) {
        out.push_back({r, c, "valid pixel has non-finite depth"});
      } else if (v <= 0.0) {
        out.push_back({r, c, "valid pixel has non-positive depth"});
      }
    }
  }
  return out;
}

void require_valid(const DepthMap& map, const char* what) {
  auto violations = validate(map);
  if (violations.empty()) return;
  const auto& v = violations.front();
  std::ostringstream msg;
  msg << what << ": " << v.what;
  if (v.row >= 0) msg << " at (" << v.row << ", " << v.col << ")";
  throw std::invalid_argument(msg.str());
}

NormalField compute_normals(const DepthMap& map) {
  require_valid(map, "compute_normals");
  const int h = map.height();
  const int w = map.width();
  NormalField field{Grid<Normal>(h, w, Normal{0.0, 0.0, 1.0}), Grid<std::uint8_t>(h, w, 0)};

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double dx = 0.0;
      double dy = 0.0;
      bool ok = map.is_valid(r, c);
      if (w > 1) {
        // Last column reuses the difference that ends at it.
        const int c0 = c + 1 < w ? c : c - 1;
        ok = ok && map.is_valid(r, c0) && map.is_valid(r, c0 + 1);
        dx = map(r, c0 + 1) - map(r, c0);
      }
      if (h > 1) {
        const int r0 = r + 1 < h ? r : r - 1;
        ok = ok && map.is_valid(r0, c) && map.is_valid(r0 + 1, c);
        dy = map(r0 + 1, c) - map(r0, c);
      }
      if (ok) {
        field.vectors(r, c) = Normal{-dx, -dy, 1.0};
        field.valid(r, c) = 1;
      }
    }
  }
  return field;
}

}  // namespace sadepth
