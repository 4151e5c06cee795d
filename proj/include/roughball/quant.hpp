#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "roughball/gaussian.hpp"
#include "roughball/rough_path.hpp"
#include "roughball/sbp.hpp"
#include "roughball/transport.hpp"

namespace roughball {

/// The Hoelder metric d_alpha used throughout this module.
struct Metric {
  double alpha = 0.4;
  PairSet pairs = PairSet::dyadic;
  NormVariant variant = kDefaultNorm;

  double operator()(const GridRoughPath& x, const GridRoughPath& y) const {
    return holder_distance(x, y, alpha, pairs, variant);
  }
};

/// Level-1 path of a lifted path (cumulative first-level increments).
CMPath level1_path(const GridRoughPath& x);

/// Lifts of `count` sample paths; path i uses index i of the paths stream of `seed`.
std::vector<GridRoughPath> sample_lifted_paths(const CovarianceModel& model, const std::vector<double>& times,
                                               std::size_t count, std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Metric entropy

struct BallMesh {
  std::vector<CMPath> paths;       // h_0 = 0, then quasi-random directions
  std::vector<GridRoughPath> lifts;
  double eta = 0.0;
};

/**
 * Finite mesh of the Cameron-Martin ball of radius eta: the origin plus `size - 1`
 * paths L z with z a Sobol point mapped to a Gaussian direction and normalised.
 * Every other direction sits on the boundary; the rest use van der Corput radii.
 */
BallMesh cameron_martin_mesh(const CovarianceModel& model, const std::vector<double>& times, double eta,
                             std::size_t size);

struct CoverResult {
  double eps = 0.0;
  std::size_t count = 0;               // N(eps) for the mesh
  std::vector<std::size_t> centers;    // mesh indices, in greedy order
  double certificate = 0.0;            // max over the mesh of the distance to the nearest center
  std::string note = "greedy cover of a finite mesh: an upper bound for the mesh, a lower bound proxy for K";
};

/// Farthest-point traversal of a point set: radius[k] is the covering radius of the first k+1 centers.
struct Traversal {
  std::vector<std::size_t> order;
  std::vector<double> radius;
};

Traversal farthest_point_traversal(const std::vector<GridRoughPath>& points, const Metric& metric, int threads = 1);

/// Greedy covers for every eps from one traversal; N(eps) is non-increasing in eps by construction.
std::vector<CoverResult> greedy_cover(const std::vector<GridRoughPath>& points, const Metric& metric,
                                      const std::vector<double>& eps, int threads = 1);

struct EntropyBounds {
  double eta = 0.0;
  double eps = 0.0;
  double sbp_eps = 0.0;      // B(eps) = -log P[||W|| < eps]
  double sbp_2eps = 0.0;     // B(2 eps)
  double upper = 0.0;        // bound on H(2 eps, dilation_eta K) = eta^2/2 + B(eps)
  double upper_unit_scale = 0.0;  // the same bound read as H(2 eps / eta, K)
  double lower = 0.0;        // bound on H(eps, dilation_eta K) = log Phi(eta + Phi^{-1}(e^{-B(eps)})) + B(2 eps)
  double lower_unit_scale = 0.0;  // eps / eta
};

EntropyBounds entropy_bounds(double sbp_eps, double sbp_2eps, double eta, double eps);

/// Bounds from a sampled curve, reading p(eps) and p(2 eps) off its sorted norms.
EntropyBounds entropy_bounds_from_sbp(const SBPCurve& curve, double eta, double eps);

/**
 * Inverse of the small-ball function B(eps) = -log p(eps) at level y: isotonic
 * regression of p in eps, then linear interpolation of log eps against log B.
 * Throws NumericalError when y lies outside the resolved range of the curve.
 */
double sbp_inverse(const std::vector<double>& eps, const std::vector<double>& p, double y);
double sbp_inverse(const SBPCurve& curve, double y);

// ---------------------------------------------------------------------------
// Quantization

enum class LloydInit { kmeanspp, random };
enum class CenterUpdate { medoid, mean };

struct LloydOptions {
  std::size_t n = 1;
  double r = 2.0;
  LloydInit init = LloydInit::kmeanspp;
  CenterUpdate update = CenterUpdate::medoid;
  std::uint64_t seed = 0;
  int max_iter = 100;
  double tol = 1e-6;
  std::size_t medoid_candidates = 256;  // members nearest the current center tried in a medoid step
  int threads = 1;
};

struct Codebook {
  std::vector<GridRoughPath> centers;
  double r = 2.0;
  double distortion = 0.0;        // mean of min d^r over the training samples
  std::size_t n = 0;              // requested size
  std::vector<double> history;    // distortion after each iteration
  int iterations = 0;
};

/// Lloyd iteration under d_alpha with medoid or mean-then-lift center updates.
Codebook lloyd_codebook(const std::vector<GridRoughPath>& samples, const Metric& metric, const LloydOptions& options);

struct ScalarCodebook {
  std::vector<double> centers;  // sorted
  double r = 2.0;
  double distortion = 0.0;
  std::vector<double> history;
  int iterations = 0;
};

/// The same iteration for real samples under |x - y|, the image of constant-increment
/// one-dimensional paths on [0, 1] (an isometric embedding).
ScalarCodebook lloyd_scalar(const std::vector<double>& samples, const LloydOptions& options);

struct QuantizationError {
  double e_hat = 0.0;       // (mean min d^r)^{1/r} on fresh samples
  double se = 0.0;          // delta-method standard error of e_hat
  double lower_bound = 0.0; // B^{-1}(log 2n)
  double proven_bound = 0.0;  // 2^{-1/r} B^{-1}(log 2n), what the union-bound argument yields
  bool holds = true;        // e_hat >= lower_bound - 4 se
};

QuantizationError quantization_error(const std::vector<GridRoughPath>& centers, std::size_t n,
                                     const std::vector<GridRoughPath>& fresh, double r, const Metric& metric,
                                     const SBPCurve& curve, int threads = 1);

// ---------------------------------------------------------------------------
// Empirical measures and transport

struct DiscreteMeasure {
  std::shared_ptr<const std::vector<GridRoughPath>> atoms;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  const GridRoughPath& atom(std::size_t i) const { return (*atoms)[i]; }
};

/// Throws InvalidArgument unless weights are nonnegative, sum to 1 within 1e-12 and atoms share a grid.
void validate_measure(const DiscreteMeasure& mu);

DiscreteMeasure uniform_measure(std::shared_ptr<const std::vector<GridRoughPath>> atoms);

/// Index of the nearest atom, lowest index on ties.
std::size_t nearest_atom(const GridRoughPath& x, const std::vector<GridRoughPath>& atoms, const Metric& metric,
                         double* distance = nullptr);

struct EmpiricalMeasures {
  DiscreteMeasure weighted;  // Voronoi weights estimated from fresh samples
  DiscreteMeasure uniform;
  std::vector<std::size_t> cell_counts;
  std::size_t weight_samples = 0;
};

EmpiricalMeasures empirical_measures(std::shared_ptr<const std::vector<GridRoughPath>> atoms,
                                     const std::vector<GridRoughPath>& weight_samples, const Metric& metric,
                                     int threads = 1);

/// Pairwise cost d_alpha^r between the atoms of two measures.
Eigen::MatrixXd cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double r, const Metric& metric,
                            int threads = 1);

/// Exact W_r(mu, nu) for the ground metric d_alpha; combined support at most 4096.
double wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double r, const Metric& metric,
                   int threads = 1);

/// W_r from a precomputed cost matrix d^r.
double wasserstein_from_cost(const std::vector<double>& a, const std::vector<double>& b, const Eigen::MatrixXd& cost,
                             double r, TransportResult* detail = nullptr);

struct RateOptions {
  std::vector<double> times;  // empty: dyadic grid with 2^6 steps
  double r = 2.0;
  std::vector<std::size_t> n_list = {8, 16, 32, 64, 128};
  std::size_t reps = 10;
  std::size_t weight_samples = 4000;
  std::size_t test_size = 2000;
  int threads = 1;
};

struct RateRow {
  std::size_t n = 0;
  std::size_t rep = 0;
  double w_weighted = 0.0;
  double w_uniform = 0.0;
  double w_weighted_se = 0.0;  // weight-estimation noise, delta method through the transport duals
  double w_voronoi = 0.0;      // atoms reweighted by reference-cloud Voronoi masses (the optimum)
  double prediction = 0.0;     // (log n)^{-(1/(2 rho) - alpha)}
  std::uint64_t seed = 0;
  bool dominated = true;       // w_weighted <= w_uniform + 4 se
};

struct RateTable {
  std::vector<RateRow> rows;
  double slope_weighted = 0.0;  // of log mean W against log log n
  double slope_uniform = 0.0;
  std::size_t domination_failures = 0;
};

RateTable empirical_rate_experiment(const CovarianceModel& model, const Metric& metric, const RateOptions& options,
                                    std::uint64_t seed);

}  // namespace roughball
