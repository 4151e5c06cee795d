#pragma once

#include <cstddef>
#include <vector>

namespace roughball {

/// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for `hits` successes out of `n` trials.
Interval wilson_interval(std::size_t hits, std::size_t n, double z = kZ95);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
};

/// Ordinary least squares y = slope x + intercept; needs >= 2 distinct x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Pool-adjacent-violators fit: the non-decreasing sequence closest to y in weighted L2.
std::vector<double> isotonic_increasing(const std::vector<double>& y, const std::vector<double>& weights = {});

struct MeanStat {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  std::size_t n = 0;
};

MeanStat mean_and_se(const std::vector<double>& values);

}  // namespace roughball
