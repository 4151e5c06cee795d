#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "roughball/gaussian.hpp"
#include "roughball/rough_path.hpp"

namespace roughball {

enum class Verdict { holds, holds_within_noise, violated, inconclusive };

std::string to_string(Verdict v);

/// lhs >= rhs, lhs <= rhs or lhs == rhs.
enum class Claim { at_least, at_most, equal };

struct Estimate {
  double value = 0.0;
  double se = 0.0;  // 0 for exact values
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct InequalityReport {
  std::string name;
  Claim claim = Claim::at_least;
  Estimate lhs;
  Estimate rhs;
  double difference_se = 0.0;  // paired standard error of lhs - rhs
  double margin = 0.0;         // signed slack in favour of the claim, in standard errors (raw slack if exact)
  Verdict verdict = Verdict::holds;
  std::size_t n = 0;
  std::string note;
  nlohmann::json config;
};

nlohmann::json to_json(const InequalityReport& r);

/// Violation threshold in pooled standard errors.
inline constexpr double kViolationSe = 4.0;
/// Tolerance for deterministic (quadrature / closed form) comparisons.
inline constexpr double kExactTolerance = 1e-10;

/// Applies the verdict rule to lhs/rhs with the given standard error of their difference.
InequalityReport make_report(std::string name, Claim claim, Estimate lhs, Estimate rhs, double difference_se,
                             std::size_t n);

struct PathCheckOptions {
  PairSet pairs = PairSet::dyadic;
  NormVariant variant = kDefaultNorm;
  int threads = 1;
};

/// P[d(W, S2 h) < eps] <= P[||W|| < eps] on common samples, one report per eps.
std::vector<InequalityReport> check_anderson(const CovarianceModel& model, double alpha, const CMPath& h,
                                             const std::vector<double>& eps, std::size_t n, std::uint64_t seed,
                                             const PathCheckOptions& options = {});

/// P[d(W, S2 h) < eps] >= exp(-|h|_H^2 / 2) P[||W|| < eps], one report per eps; followed by the
/// corollary split P[d(W, S2 h) < eps] >= exp(-I(S2 h, a eps)) P[||W|| < (1-a) eps] for each a.
std::vector<InequalityReport> check_cameron_martin(const CovarianceModel& model, double alpha, const CMPath& h,
                                                   const std::vector<double>& eps, std::size_t n, std::uint64_t seed,
                                                   const std::vector<double>& corollary_a = {0.0, 0.25, 0.5},
                                                   const PathCheckOptions& options = {});

/**
 * Upper estimate of the rate I(S2 h, r) = inf { |g|_H^2 / 2 : d(S2 g, S2 h) <= r } over the
 * ray g = c h, c in [0, 1]; exact along that ray on a grid of 201 values of c.
 */
double rate_upper_estimate(const CovarianceModel& model, const CMPath& h, double alpha, double radius,
                           const PathCheckOptions& options = {});

/// Static analogues on R^d with sup-norm balls, computed in closed form.
InequalityReport check_anderson_gaussian(const Eigen::VectorXd& shift, double eps);
InequalityReport check_cameron_martin_gaussian(const Eigen::VectorXd& shift, double eps);

enum class SidakMethod { quadrature, mc };

struct SidakLevel1Result {
  InequalityReport product;  // P[all |X_i| < eps_i] >= prod P[|X_i| < eps_i]
  InequalityReport split;    // P[all] >= P[block 1] P[block 2]
};

/// P[max_i |X_i| / eps_i < 1] for X ~ N(0, cov), d <= 3, by nested adaptive quadrature.
double gaussian_box_probability(const Eigen::MatrixXd& cov, const Eigen::VectorXd& eps);

/**
 * Level-one Sidak check for X ~ N(0, cov). `split` is the size of the first block
 * for the two-block correlation check (default: half). Quadrature needs d <= 3 and
 * a positive definite covariance.
 */
SidakLevel1Result check_sidak_level1(const Eigen::MatrixXd& cov, const Eigen::VectorXd& eps, SidakMethod method,
                                     std::size_t n = 0, std::uint64_t seed = 0, int split = -1, int threads = 1);

/// An event |f(X, Y)| < eps where f is linear in X, linear in Y, or bilinear X^T B Y.
struct ChaosEvent {
  enum class Kind { linear_x, linear_y, bilinear };
  Kind kind = Kind::bilinear;
  Eigen::VectorXd coefficients;  // linear events
  Eigen::MatrixXd form;          // bilinear events, dim_x x dim_y
  double eps = 1.0;
};

/// P[all events] >= prod P[event] for independent X ~ N(0, cov_x), Y ~ N(0, cov_y); Monte Carlo.
InequalityReport check_sidak_level2(const Eigen::MatrixXd& cov_x, const Eigen::MatrixXd& cov_y,
                                    const std::vector<ChaosEvent>& events, std::size_t n, std::uint64_t seed,
                                    int threads = 1);

struct ThirdChaosRow {
  double eps = 0.0;
  double p_repeated = 0.0;    // P[X^2 |Y| < eps]
  double p_independent = 0.0; // P[|X Z Y| < eps]
  double difference_se = 0.0;
};

/// Exploratory: repeated versus independent factors in a third-chaos product. Nothing is asserted.
std::vector<ThirdChaosRow> explore_third_chaos(const std::vector<double>& eps, std::size_t n, std::uint64_t seed);

enum class BorellSet { half_space, box };

/// P[A + lambda K] >= Phi(lambda + Phi^{-1}(P[A])) for the standard Gaussian on R^d, K the unit ball.
/// half_space: A = {x_1 <= a} (exact); box: A = [-a, a]^d (Monte Carlo lhs, exact rhs).
InequalityReport check_borell_shift(int dim, BorellSet set, double a, double lambda, std::size_t n,
                                    std::uint64_t seed);

struct RoughBorellOptions {
  PathCheckOptions path;
  std::vector<int> modes = {1, 2, 4, 8, 16};  // Karhunen-Loeve truncations for candidate shifts
  std::vector<double> scalings = {0.25, 0.5, 0.75, 1.0};
  double mesh_slack = 0.0;
};

/**
 * Rough-path Borell check with A = {||W||_alpha < eps}. A sample counts as a hit
 * when some candidate h with |h|_H <= lambda (Karhunen-Loeve projections of the
 * sample, rescaled) brings ||T^{-h} W|| below eps. This inner approximation is a
 * lower bound of the enlargement, so a shortfall is reported as inconclusive.
 */
InequalityReport check_borell_rough(const CovarianceModel& model, const std::vector<double>& times, double alpha,
                                    double eps, double lambda, std::size_t n, std::uint64_t seed,
                                    const RoughBorellOptions& options = {});

}  // namespace roughball
