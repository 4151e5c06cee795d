#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "roughball/rough_path.hpp"

namespace roughball {

enum class CovarianceKind { brownian, fbm, custom };

/**
 * Centred Gaussian process with d i.i.d. components and stationary increments,
 * E|W_t - W_s|^2 = sigma2(|t - s|) per component, started at 0 on [0, T].
 */
class CovarianceModel {
 public:
  static CovarianceModel brownian(int dim, double horizon = 1.0);
  /// Fractional Brownian motion, H in (1/3, 1/2].
  static CovarianceModel fbm(double hurst, int dim, double horizon = 1.0);
  /// sigma2 given as a table (tau, sigma2(tau)) with tau_0 = 0, interpolated by a
  /// monotone cubic; `rho` is the covariance-variation exponent in [1, 3/2).
  static CovarianceModel custom(std::vector<double> tau, std::vector<double> sigma2, double rho, int dim,
                                double horizon = 1.0);

  CovarianceKind kind() const noexcept { return kind_; }
  double hurst() const noexcept { return hurst_; }
  int dim() const noexcept { return dim_; }
  double horizon() const noexcept { return horizon_; }
  double rho() const noexcept { return rho_; }

  double sigma2(double tau) const;
  /// d^k sigma2 / d tau^k for k in {1, 2, 3}; closed form except for custom tables.
  double sigma2_derivative(double tau, int order) const;

  /// Per-component E[W_s W_t].
  double covariance(double s, double t) const;
  /// Per-component E[(W_b - W_a)(W_d - W_c)].
  double increment_covariance(double a, double b, double c, double d) const;

  std::string describe() const;

  const std::vector<double>& table_tau() const noexcept { return tau_; }
  const std::vector<double>& table_sigma2() const noexcept { return table_; }

 private:
  CovarianceKind kind_ = CovarianceKind::brownian;
  double hurst_ = 0.5;
  int dim_ = 1;
  double horizon_ = 1.0;
  double rho_ = 1.0;
  std::vector<double> tau_;
  std::vector<double> table_;
  std::shared_ptr<const std::function<double(double)>> interp_;
  std::shared_ptr<const std::function<double(double)>> interp_prime_;
};

enum class SamplerBackend { automatic, independent, cholesky, circulant };

std::string to_string(SamplerBackend b);

struct PathSample {
  std::vector<double> times;
  Eigen::MatrixXd values;  // (N+1) x d, values.row(0) == 0
  std::uint64_t master_seed = 0;
  std::uint64_t index = 0;

  CMPath as_path() const { return CMPath(times, values); }
};

/**
 * Exact sampler for a CovarianceModel on a fixed grid.
 *
 * automatic picks independent increments for Brownian motion, a Cholesky factor
 * of the increment covariance for N <= 4096 and circulant embedding beyond that.
 * A circulant embedding with negative eigenvalues falls back to Cholesky and
 * records why in fallback_note(). Factorisations are built once and shared
 * read-only; sample() is safe to call concurrently.
 */
class PathSampler {
 public:
  static constexpr std::size_t kCholeskyLimit = 4096;

  PathSampler(const CovarianceModel& model, std::vector<double> times,
              SamplerBackend backend = SamplerBackend::automatic);
  ~PathSampler();
  PathSampler(PathSampler&&) noexcept;
  PathSampler& operator=(PathSampler&&) noexcept;

  PathSample sample(std::uint64_t master_seed, std::uint64_t index) const;

  /// Writes the (N+1) x d values for sample `index` into `values` (resized as needed).
  void sample_into(std::uint64_t master_seed, std::uint64_t index, Eigen::MatrixXd& values) const;

  SamplerBackend backend() const noexcept { return backend_; }
  const std::string& fallback_note() const noexcept { return fallback_note_; }
  const std::vector<double>& times() const noexcept { return times_; }
  const CovarianceModel& model() const noexcept { return model_; }

 private:
  struct Circulant;

  CovarianceModel model_;
  std::vector<double> times_;
  SamplerBackend backend_;
  std::string fallback_note_;
  Eigen::VectorXd step_sd_;       // independent backend
  Eigen::MatrixXd cholesky_;      // lower factor of the increment covariance
  std::unique_ptr<Circulant> circulant_;
};

/// n samples with per-index seeds; identical for any thread count.
std::vector<PathSample> simulate_paths(const CovarianceModel& model, const std::vector<double>& times, std::size_t n,
                                       std::uint64_t master_seed, int threads = 1,
                                       SamplerBackend backend = SamplerBackend::automatic);

struct RhoVariationReport {
  double interval_start = 0.0;
  double interval_end = 0.0;
  std::vector<double> by_level;  // partition value per refinement level
  double estimate = 0.0;         // max over levels
  double fitted_m = 0.0;         // smallest M with estimate <= M |t-s|^{1/rho} on all sampled subintervals
  int sampled_intervals = 0;
};

/// rho-variation of the increment covariance over nested uniform dyadic partitions of [s,t]^2.
RhoVariationReport rho_variation_audit(const CovarianceModel& model, double s, double t, int mesh_levels);

struct SigmaConditionsReport {
  double window = 0.0;
  double c1 = 0.0;                 // min sigma2(tau) / tau^{1/rho}
  double c2 = 0.0;                 // max sigma2(tau) / tau^{1/rho}
  double doubling_constant = 0.0;  // sup sigma2(2 tau) / sigma2(tau)
  bool doubling_pass = false;      // doubling_constant < 4
  double envelope_ratio = 0.0;     // c2 2^{1/rho} / c1
  bool envelope_pass = false;      // envelope_ratio < 4
  double c3 = 0.0;                 // sup |sigma2'''(tau)| tau^{3 - 1/rho}
  std::string curvature;           // convex, concave, linear or mixed
  std::string curvature_note;
  bool all_pass = false;
};

SigmaConditionsReport sigma_conditions_audit(const CovarianceModel& model, double window);

/// W_(p,m) = 2^{p/2} (W_{a,b} - W_{b,c}) with a = (m-1)T/2^p, b = (2m-1)T/2^{p+1}, c = mT/2^p.
Eigen::VectorXd schauder_coefficient(const PathSample& path, int p, int m);

/// E|W_(p,m)|^2 = 2^p (4 sigma2(T 2^{-p-1}) - sigma2(T 2^{-p})).
double wavelet_variance(const CovarianceModel& model, int p);

struct WaveletCorrelation {
  double correlation = 0.0;   // exact normalised E[W_(p,m1) W_(p,m2)]
  double decay_target = 0.0;  // (|m1 - m2| - 1)^{1/rho - 3}; NaN for adjacent or equal indices
};

WaveletCorrelation wavelet_cross_correlation(const CovarianceModel& model, int p, int m1, int m2);

struct WaveletVarianceEstimate {
  int level = 0;
  double exact = 0.0;   // wavelet_variance(model, level)
  double mc = 0.0;      // mean of W_(p,m)^2 over samples, positions m and components
  double se = 0.0;      // from per-sample averages, so correlation within a path is accounted for
  double z = 0.0;       // (mc - exact) / se
};

/// Monte Carlo wavelet variances for levels 0..max_level on a dyadic grid; paths are streamed.
std::vector<WaveletVarianceEstimate> estimate_wavelet_variances(const CovarianceModel& model,
                                                                const std::vector<double>& times, int max_level,
                                                                std::size_t n, std::uint64_t master_seed,
                                                                int threads = 1);

/**
 * Finite-dimensional Cameron-Martin geometry on a grid: the covariance Gram
 * matrix at the nonzero grid points and its Cholesky factor.
 */
class CameronMartinGeometry {
 public:
  CameronMartinGeometry(const CovarianceModel& model, std::vector<double> times);

  /// sqrt(sum_components h^T Sigma^{-1} h). h must start at 0.
  double norm(const CMPath& h) const;

  /// The path L z whose norm is |z| (z has N rows, d columns).
  CMPath from_coefficients(const Eigen::MatrixXd& z) const;

  const std::vector<double>& times() const noexcept { return times_; }
  int dim() const noexcept { return dim_; }

 private:
  std::vector<double> times_;
  int dim_;
  Eigen::MatrixXd factor_;
};

struct CameronMartinResult {
  double norm = 0.0;
  double rate = 0.0;  // 1/2 norm^2
};

CameronMartinResult cameron_martin_norm(const CovarianceModel& model, const CMPath& h);

}  // namespace roughball
