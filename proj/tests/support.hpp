#pragma once

#include <random>

#include <Eigen/Core>

#include "roughball/g2.hpp"
#include "roughball/rough_path.hpp"

namespace testing_support {

inline Eigen::VectorXd random_vector(std::mt19937_64& gen, int d, double scale = 1.0) {
  std::normal_distribution<double> n;
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = scale * n(gen);
  return v;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, int d, double scale = 1.0) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = scale * n(gen);
  return m;
}

inline roughball::G2Element random_element(std::mt19937_64& gen, int d, double scale = 1.0) {
  return roughball::G2Element(random_vector(gen, d, scale), random_matrix(gen, d, scale));
}

/// Brownian path on a uniform grid built from plain normals, independent of the library sampler.
inline roughball::CMPath brownian_path(std::mt19937_64& gen, int d, std::size_t n, double horizon = 1.0) {
  std::normal_distribution<double> normal;
  auto times = roughball::uniform_grid(horizon, n);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), d);
  const double sd = std::sqrt(horizon / static_cast<double>(n));
  for (std::size_t k = 1; k <= n; ++k)
    for (int c = 0; c < d; ++c) v(static_cast<Eigen::Index>(k), c) = v(static_cast<Eigen::Index>(k - 1), c) + sd * normal(gen);
  return roughball::CMPath(times, v);
}

inline roughball::CMPath line_path(const std::vector<double>& times, const Eigen::VectorXd& slope) {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(times.size()), slope.size());
  for (std::size_t k = 0; k < times.size(); ++k) v.row(static_cast<Eigen::Index>(k)) = times[k] * slope.transpose();
  return roughball::CMPath(times, v);
}

}  // namespace testing_support
