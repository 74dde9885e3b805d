#include "sadepth/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sadepth {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelativeErrorFloor});
  return std::abs(analytic - numeric) / denom;
}

double GradcheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

GradcheckEntry check_gradient(std::string name, std::span<double> values,
                              std::span<const double> analytic,
                              const std::function<double()>& objective, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gradcheck: epsilon must be positive");
  if (values.size() != analytic.size()) throw std::invalid_argument("gradcheck: size mismatch");
  GradcheckEntry entry{std::move(name), 0.0, values.size()};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + epsilon;
    const double plus = objective();
    values[i] = saved - epsilon;
    const double minus = objective();
    values[i] = saved;
    const double numeric = (plus - minus) / (2.0 * epsilon);
    entry.max_rel_error = std::max(entry.max_rel_error, relative_error(analytic[i], numeric));
  }
  return entry;
}

}  // namespace sadepth
