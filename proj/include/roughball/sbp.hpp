#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "roughball/gaussian.hpp"
#include "roughball/rough_path.hpp"

namespace roughball {

enum class SmallBallNorm { l2, linf };

/// P[|Z| < eps] for a standard Gaussian Z in R^d.
double rd_gaussian_small_ball(int d, double eps, SmallBallNorm norm);

struct ErfBounds {
  double erf_value = 0.0;         // erf(t / sqrt 2)
  double linear_bound = 0.0;      // t / 2, valid for t in [0, 1]; NaN otherwise
  double erf_scaled = 0.0;        // erf(s t / sqrt 2)
  double exponential_bound = 0.0; // exp(-exp(-(st)^2/2) / (1 - exp(-s^2/2))), valid for t >= 1; NaN otherwise
  bool violated = false;
};

ErfBounds erf_lower_bounds(double s, double t);

enum class NormKind { path_holder, rough_holder_allpairs, rough_holder_dyadic, rough_holder_lemma_bound };

std::string to_string(NormKind k);
NormKind norm_kind_from_string(const std::string& s);

/// One Hoelder-type functional of a lifted path.
struct NormSpec {
  double alpha = 0.4;
  NormKind kind = NormKind::rough_holder_dyadic;
  PairSet path_pairs = PairSet::dyadic;  // pair set for path_holder
  double lemma_eps = 0.0;                // 0 means T / 2
  NormVariant variant = kDefaultNorm;
};

double evaluate_norm(const GridRoughPath& x, const NormSpec& spec);

/// Throws unless alpha is admissible for the model: (1/3, 1/(2 rho)) for rough norms, (0, 1] for path_holder.
void check_sbp_alpha(const CovarianceModel& model, const NormSpec& spec);

/**
 * Norms of n lifted sample paths under every spec, n x specs.size(). Sample i
 * uses the per-index seed of the paths stream of `master_seed`, so every column
 * sees the same paths and the result does not depend on `threads`.
 */
Eigen::MatrixXd sample_norms(const CovarianceModel& model, const std::vector<double>& times,
                             const std::vector<NormSpec>& specs, std::size_t n, std::uint64_t master_seed,
                             int threads = 1);

struct SBPCurve {
  double alpha = 0.0;
  NormKind norm_kind = NormKind::rough_holder_dyadic;
  std::vector<double> eps;
  std::vector<double> p_hat;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  std::vector<std::size_t> hits;
  std::vector<bool> resolution_floor;  // zero hits: one-sided interval
  std::size_t n_samples = 0;
  std::string model;
  std::uint64_t seed = 0;
  std::size_t raw_monotone_violations = 0;
  std::vector<double> sorted_norms;
};

/// p_hat(eps) = #{norm < eps} / n from one set of norms, reused across eps.
SBPCurve curve_from_norms(std::vector<double> norms, const std::vector<double>& eps, const NormSpec& spec,
                          std::string model, std::uint64_t seed);

struct SBPOptions {
  std::vector<double> times;  // empty: dyadic grid with 2^10 steps on [0, T]
  int threads = 1;
  double lemma_eps = 0.0;
  PairSet path_pairs = PairSet::dyadic;
};

SBPCurve estimate_sbp_curve(const CovarianceModel& model, double alpha, NormKind kind, const std::vector<double>& eps,
                            std::size_t n_samples, std::uint64_t master_seed, const SBPOptions& options = {});

struct IndexFit {
  double index = 0.0;  // slope of log(-log p) against log(1/eps)
  double intercept = 0.0;
  double r2 = 0.0;
  double eps_min = 0.0;
  double eps_max = 0.0;
  std::size_t points = 0;
  double log_slope = 0.0;  // slope of -log p against log(1/eps)
  std::vector<double> local_slopes;  // consecutive-point slopes, ordered by increasing log(1/eps)
  /// Mean local slope over the larger-eps half minus over the smaller-eps half;
  /// positive when the index drifts down towards small eps, as a log factor does.
  double local_slope_trend = 0.0;
  bool slowly_varying_flag = false;
  bool resolution_floor = false;  // the curve reached zero hits somewhere
};

/// Fits points with eps in [eps_min, eps_max] and 0 < p < 1; needs at least 4.
IndexFit fit_variation_index(const std::vector<double>& eps, const std::vector<double>& p, double eps_min = 0.0,
                             double eps_max = std::numeric_limits<double>::infinity());
IndexFit fit_variation_index(const SBPCurve& curve, double eps_min = 0.0,
                             double eps_max = std::numeric_limits<double>::infinity());

/// 1 / (1/(2 rho) - alpha).
double predicted_sbp_index(double rho, double alpha);

/// eps values at the given probability levels of the sampled norms (empirical quantiles).
std::vector<double> quantile_eps(const std::vector<double>& sorted_norms, const std::vector<double>& levels);

}  // namespace roughball
