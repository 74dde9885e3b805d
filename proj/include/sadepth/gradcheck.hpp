#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sadepth {

inline constexpr double kDefaultGradcheckEpsilon = 1e-4;
inline constexpr double kGradcheckTolerance = 1e-4;

/// Denominator floor for relative errors, so exactly-zero gradients compare
/// against round-off instead of dividing by zero.
inline constexpr double kRelativeErrorFloor = 1e-6;

/// |a - b| / max(|a|, |b|, kRelativeErrorFloor)
double relative_error(double analytic, double numeric);

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

struct GradcheckReport {
  std::string block;
  std::uint64_t seed = 0;
  double epsilon = kDefaultGradcheckEpsilon;
  double tolerance = kGradcheckTolerance;
  std::vector<GradcheckEntry> entries;

  double max_rel_error() const;
  bool passed() const { return max_rel_error() < tolerance; }
};

/// Compares `analytic` against central differences of `objective` over
/// every entry of `values`; each entry is restored after probing.
GradcheckEntry check_gradient(std::string name, std::span<double> values,
                              std::span<const double> analytic,
                              const std::function<double()>& objective, double epsilon);

}  // namespace sadepth
