#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "roughball/error.hpp"

namespace roughball::detail {

inline void validate_times(const std::vector<double>& times) {
  if (times.size() < 2) throw InvalidArgument("a grid needs at least 2 points");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k])) throw InvalidArgument("grid times must be finite");
    if (k > 0 && !(times[k] > times[k - 1])) {
      throw InvalidArgument("grid times must be strictly increasing (index " + std::to_string(k) + ")");
    }
  }
}

inline bool is_uniform(const std::vector<double>& times) {
  const std::size_t n = times.size() - 1;
  const double span = times.back() - times.front();
  const double h = span / static_cast<double>(n);
  for (std::size_t k = 0; k <= n; ++k) {
    if (std::abs(times[k] - (times.front() + static_cast<double>(k) * h)) > 1e-12 * span) return false;
  }
  return true;
}

}  // namespace roughball::detail
