#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "roughball/g2.hpp"

namespace roughball {

/// Piecewise-linear path on a grid; used as a Cameron-Martin perturbation h
/// or as the raw sample of a Gaussian process before lifting.
struct CMPath {
  std::vector<double> times;
  Eigen::MatrixXd values;  // (N+1) x d, row k is the value at times[k]

  CMPath() = default;
  CMPath(std::vector<double> times, Eigen::MatrixXd values);

  int dim() const { return static_cast<int>(values.cols()); }
  std::size_t num_steps() const { return times.size() - 1; }
};

/// Uniform grid t_k = k T / N, k = 0..N.
std::vector<double> uniform_grid(double horizon, std::size_t num_steps);

/// Uniform grid with 2^depth steps.
std::vector<double> dyadic_grid(double horizon, int depth);

/**
 * Step-2 rough path sampled on a grid.
 *
 * Stores the increments over consecutive grid cells. Whole-interval increments
 * are Chen products of those steps; a prefix table X_{0,t_k} is built once so any
 * increment is X_{0,t_i}^{-1} (x) X_{0,t_j}. When the grid is uniform with 2^L
 * steps, the increments over every dyadic interval are tabulated as well.
 * Instances are immutable after construction.
 */
class GridRoughPath {
 public:
  GridRoughPath() = default;
  GridRoughPath(std::vector<double> times, const std::vector<G2Element>& steps);

  /// Steps given in the flat G2Element layout, N * d(d+1) entries.
  GridRoughPath(std::vector<double> times, int dim, std::vector<double> flat_steps);

  int dim() const noexcept { return dim_; }
  std::size_t num_steps() const noexcept { return times_.size() - 1; }
  const std::vector<double>& times() const noexcept { return times_; }
  double horizon() const { return times_.back() - times_.front(); }

  G2Element step(std::size_t k) const;
  const double* raw_step(std::size_t k) const { return steps_.data() + k * stride_; }

  /// X_{t_i, t_j} for i <= j.
  G2Element increment(std::size_t i, std::size_t j) const;

  /// Depth L when the grid is uniform with 2^L steps, otherwise -1.
  int dyadic_depth() const noexcept { return dyadic_depth_; }

  /// Increment over [m T 2^{-l}, (m+1) T 2^{-l}]; requires a dyadic grid.
  const double* raw_dyadic(int level, std::size_t m) const;

  bool uniform() const noexcept { return uniform_; }

 private:
  void build_tables();

  int dim_ = 0;
  std::size_t stride_ = 0;
  std::vector<double> times_;
  std::vector<double> steps_;
  std::vector<double> prefix_;
  std::vector<double> dyadic_;
  int dyadic_depth_ = -1;
  bool uniform_ = false;
};

enum class PairSet { all, dyadic };

std::string to_string(PairSet p);
PairSet pair_set_from_string(const std::string& s);

/// Exact step-2 signature of the piecewise-linear interpolation of `path`.
GridRoughPath lift_piecewise_linear(const CMPath& path);

/// The constant path at the group unit on the given grid.
GridRoughPath trivial_path(const std::vector<double>& times, int dim);

G2Element increment(const GridRoughPath& rp, std::size_t i, std::size_t j);

/// max over grid pairs of || Sym(c) - 1/2 b (x) b ||_inf.
double geometric_defect(const GridRoughPath& rp);

struct HolderResult {
  double value = 0.0;
  std::size_t s_index = 0;  // argmax pair; smallest (s,t) lexicographically on ties
  std::size_t t_index = 0;
};

HolderResult holder_distance_detail(const GridRoughPath& x, const GridRoughPath& y, double alpha,
                                    PairSet pairs, NormVariant variant = kDefaultNorm);

/// d_alpha(x, y) = max over grid pairs of ||X_{s,t}^{-1} (x) Y_{s,t}|| / (t-s)^alpha.
double holder_distance(const GridRoughPath& x, const GridRoughPath& y, double alpha, PairSet pairs,
                       NormVariant variant = kDefaultNorm);

/// ||X||_alpha, the distance to the trivial path.
double holder_norm(const GridRoughPath& x, double alpha, PairSet pairs, NormVariant variant = kDefaultNorm);

/// Path-level Hoelder norm: only the level-1 terms of the homogeneous norm.
double path_holder_norm(const GridRoughPath& x, double alpha, PairSet pairs, NormVariant variant = kDefaultNorm);

struct DyadicBound {
  double value = 0.0;
  double coarse_term = 0.0;  // 2 sum_l max_i ||W_{dyadic}|| / eps^alpha
  double fine_term = 0.0;    // 3 max_{j,i} sum_{l>j} max_m ...
  int truncation_level = 0;  // deepest dyadic level used
  std::string note = "grid-resolution truncation";
};

/**
 * Dyadic upper bound for the Hoelder norm from the discretisation lemma.
 *
 * `eps` must be T 2^{-k} for an integer k with 1 <= k <= depth so that every
 * eps-scaled dyadic endpoint lies on the grid; the level sums are truncated
 * at `depth`, which may not exceed the grid depth.
 */
DyadicBound dyadic_holder_bound(const GridRoughPath& x, double alpha, double eps, int depth,
                                NormVariant variant = kDefaultNorm);

/// T^h(X): per-step translation with exact line-line Young integrals.
GridRoughPath translate(const GridRoughPath& x, const CMPath& h);

/// Pointwise sum of two CM paths on the same grid.
CMPath add(const CMPath& a, const CMPath& b);
CMPath scale(const CMPath& a, double factor);

/// sup over grid pairs of ||h||_{q-var,[s,t]} / (t-s)^alpha with partitions on the grid.
double q_variation_holder(const CMPath& h, double q, double alpha);

}  // namespace roughball
