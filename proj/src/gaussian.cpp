#include "roughball/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <sstream>

#include <Eigen/Cholesky>
#include <boost/math/special_functions/fpclassify.hpp>  // pchip.hpp uses boost::math::isnan unqualified
#include <boost/math/interpolators/pchip.hpp>
#include <fftw3.h>

#include "grid_checks.hpp"
#include "roughball/error.hpp"
#include "roughball/parallel.hpp"
#include "roughball/rng.hpp"
#include "roughball/stats.hpp"

namespace roughball {

namespace {

void check_dim_horizon(int dim, double horizon) {
  if (dim < 1) throw InvalidArgument("process dimension must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("horizon T must be positive");
}

double overlap(double a, double b, double c, double d) {
  return std::max(0.0, std::min(b, d) - std::max(a, c));
}

// fftw planning is not thread-safe; execution on new arrays is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

CovarianceModel CovarianceModel::brownian(int dim, double horizon) {
  check_dim_horizon(dim, horizon);
  CovarianceModel m;
  m.kind_ = CovarianceKind::brownian;
  m.dim_ = dim;
  m.horizon_ = horizon;
  m.hurst_ = 0.5;
  m.rho_ = 1.0;
  return m;
}

CovarianceModel CovarianceModel::fbm(double hurst, int dim, double horizon) {
  check_dim_horizon(dim, horizon);
  if (!(hurst > 1.0 / 3.0 && hurst <= 0.5)) {
    throw InvalidArgument("fbm Hurst index must lie in (1/3, 1/2], got " + std::to_string(hurst));
  }
  CovarianceModel m;
  m.kind_ = CovarianceKind::fbm;
  m.dim_ = dim;
  m.horizon_ = horizon;
  m.hurst_ = hurst;
  m.rho_ = 1.0 / (2.0 * hurst);
  return m;
}

CovarianceModel CovarianceModel::custom(std::vector<double> tau, std::vector<double> sigma2, double rho, int dim,
                                        double horizon) {
  check_dim_horizon(dim, horizon);
  if (tau.size() != sigma2.size()) throw InvalidArgument("sigma2 table: tau and sigma2 lengths differ");
  if (tau.size() < 4) throw InvalidArgument("sigma2 table needs at least 4 points");
  if (tau.front() != 0.0 || sigma2.front() != 0.0) throw InvalidArgument("sigma2 table must start at (0, 0)");
  for (std::size_t k = 1; k < tau.size(); ++k) {
    if (!std::isfinite(tau[k]) || !std::isfinite(sigma2[k])) throw InvalidArgument("sigma2 table must be finite");
    if (!(tau[k] > tau[k - 1])) throw InvalidArgument("sigma2 table: tau must be strictly increasing");
    if (!(sigma2[k] > 0.0)) throw InvalidArgument("sigma2 table: sigma2(tau) must be positive for tau > 0");
  }
  if (tau.back() < horizon * (1.0 - 1e-12)) throw InvalidArgument("sigma2 table must cover [0, T]");
  if (!(rho >= 1.0 && rho < 1.5)) throw InvalidArgument("rho must lie in [1, 3/2)");
  CovarianceModel m;
  m.kind_ = CovarianceKind::custom;
  m.dim_ = dim;
  m.horizon_ = horizon;
  m.rho_ = rho;
  m.hurst_ = 0.5 / rho;
  m.tau_ = tau;
  m.table_ = sigma2;
  auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(tau),
                                                                                       std::move(sigma2));
  m.interp_ = std::make_shared<const std::function<double(double)>>([spline](double x) { return (*spline)(x); });
  m.interp_prime_ =
      std::make_shared<const std::function<double(double)>>([spline](double x) { return spline->prime(x); });
  return m;
}

double CovarianceModel::sigma2(double tau) const {
  tau = std::abs(tau);
  switch (kind_) {
    case CovarianceKind::brownian:
      return tau;
    case CovarianceKind::fbm:
      return hurst_ == 0.5 ? tau : std::pow(tau, 2.0 * hurst_);
    case CovarianceKind::custom:
      if (tau > tau_.back()) throw InvalidArgument("sigma2 table does not cover tau = " + std::to_string(tau));
      return tau == 0.0 ? 0.0 : (*interp_)(tau);
  }
  return 0.0;
}

double CovarianceModel::sigma2_derivative(double tau, int order) const {
  if (order < 1 || order > 3) throw InvalidArgument("sigma2 derivative order must be 1, 2 or 3");
  if (!(tau > 0.0)) throw InvalidArgument("sigma2 derivatives are taken at tau > 0");
  if (kind_ == CovarianceKind::brownian) return order == 1 ? 1.0 : 0.0;
  if (kind_ == CovarianceKind::fbm) {
    const double a = 2.0 * hurst_;
    double coeff = 1.0;
    for (int k = 0; k < order; ++k) coeff *= a - k;
    return coeff * std::pow(tau, a - order);
  }
  const double h = 1e-4 * tau;
  const auto& p = *interp_prime_;
  const double hi = std::min(tau + h, tau_.back());
  const double lo = std::max(tau - h, 0.5 * tau);
  if (order == 1) return p(tau);
  if (order == 2) return (p(hi) - p(lo)) / (hi - lo);
  const double mid = 0.5 * (hi + lo);
  const double step = 0.5 * (hi - lo);
  return (p(mid + step) - 2.0 * p(mid) + p(mid - step)) / (step * step);
}

double CovarianceModel::covariance(double s, double t) const {
  const double tol = 1e-12 * horizon_;
  if (s < -tol || t < -tol || s > horizon_ + tol || t > horizon_ + tol) {
    throw InvalidArgument("covariance: times must lie in [0, T]");
  }
  if (kind_ == CovarianceKind::brownian || (kind_ == CovarianceKind::fbm && hurst_ == 0.5)) {
    return std::max(0.0, std::min(s, t));
  }
  return 0.5 * (sigma2(s) + sigma2(t) - sigma2(t - s));
}

double CovarianceModel::increment_covariance(double a, double b, double c, double d) const {
  if (kind_ == CovarianceKind::brownian || (kind_ == CovarianceKind::fbm && hurst_ == 0.5)) {
    return overlap(a, b, c, d);
  }
  // Polarisation of stationary increments.
  return 0.5 * (sigma2(d - a) + sigma2(c - b) - sigma2(c - a) - sigma2(d - b));
}

std::string CovarianceModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case CovarianceKind::brownian:
      os << "brownian";
      break;
    case CovarianceKind::fbm:
      os << "fbm(H=" << hurst_ << ")";
      break;
    case CovarianceKind::custom:
      os << "custom_sigma2(" << tau_.size() << " points, rho=" << rho_ << ")";
      break;
  }
  os << ", d=" << dim_ << ", T=" << horizon_;
  return os.str();
}

std::string to_string(SamplerBackend b) {
  switch (b) {
    case SamplerBackend::automatic:
      return "automatic";
    case SamplerBackend::independent:
      return "independent";
    case SamplerBackend::cholesky:
      return "cholesky";
    case SamplerBackend::circulant:
      return "circulant";
  }
  return "unknown";
}

struct PathSampler::Circulant {
  std::size_t size = 0;  // 2N
  std::vector<double> scale;  // sqrt(lambda_k / size)
  fftw_plan plan = nullptr;

  ~Circulant() {
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

PathSampler::PathSampler(const CovarianceModel& model, std::vector<double> times, SamplerBackend backend)
    : model_(model), times_(std::move(times)), backend_(backend) {
  detail::validate_times(times_);
  if (times_.front() != 0.0) throw InvalidArgument("sampling grid must start at t = 0");
  if (times_.back() > model_.horizon() * (1.0 + 1e-12)) throw InvalidArgument("sampling grid exceeds the horizon T");
  const std::size_t n = times_.size() - 1;
  const bool uniform = detail::is_uniform(times_);

  if (backend_ == SamplerBackend::automatic) {
    if (model_.kind() == CovarianceKind::brownian) {
      backend_ = SamplerBackend::independent;
    } else if (n <= kCholeskyLimit || !uniform) {
      backend_ = SamplerBackend::cholesky;
    } else {
      backend_ = SamplerBackend::circulant;
    }
  }
  if (backend_ == SamplerBackend::independent && model_.kind() != CovarianceKind::brownian) {
    throw InvalidArgument("independent increments only apply to brownian models");
  }
  if (backend_ == SamplerBackend::circulant && !uniform) {
    throw InvalidArgument("circulant embedding needs a uniform grid");
  }

  if (backend_ == SamplerBackend::independent) {
    step_sd_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) step_sd_[static_cast<Eigen::Index>(k)] = std::sqrt(times_[k + 1] - times_[k]);
    return;
  }

  if (backend_ == SamplerBackend::circulant) {
    const double dt = times_[1] - times_[0];
    const std::size_t m = 2 * n;
    std::vector<std::complex<double>> row(m);
    auto gamma = [&](std::size_t k) {
      return model_.increment_covariance(0.0, dt, static_cast<double>(k) * dt, static_cast<double>(k + 1) * dt);
    };
    for (std::size_t k = 0; k <= n; ++k) row[k] = gamma(k);
    for (std::size_t k = n + 1; k < m; ++k) row[k] = row[m - k];
    auto circ = std::make_unique<Circulant>();
    circ->size = m;
    std::vector<std::complex<double>> eig(m);
    {
      std::lock_guard lock(fftw_planner_mutex());
      circ->plan = fftw_plan_dft_1d(static_cast<int>(m), reinterpret_cast<fftw_complex*>(row.data()),
                                    reinterpret_cast<fftw_complex*>(eig.data()), FFTW_FORWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (!circ->plan) throw NumericalError("fftw could not plan a transform of size " + std::to_string(m));
    fftw_execute_dft(circ->plan, reinterpret_cast<fftw_complex*>(row.data()),
                     reinterpret_cast<fftw_complex*>(eig.data()));
    double top = 0.0;
    double bottom = std::numeric_limits<double>::infinity();
    for (const auto& e : eig) {
      top = std::max(top, e.real());
      bottom = std::min(bottom, e.real());
    }
    if (bottom < -1e-10 * top) {
      std::ostringstream os;
      os << "circulant embedding not positive semidefinite (min eigenvalue " << bottom << "); fell back to cholesky";
      fallback_note_ = os.str();
      backend_ = SamplerBackend::cholesky;
    } else {
      circ->scale.resize(m);
      for (std::size_t k = 0; k < m; ++k) {
        circ->scale[k] = std::sqrt(std::max(eig[k].real(), 0.0) / static_cast<double>(m));
      }
      circulant_ = std::move(circ);
      return;
    }
  }

  Eigen::MatrixXd cov(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = model_.increment_covariance(times_[i], times_[i + 1], times_[j], times_[j + 1]);
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("increment covariance is not positive definite on this grid; use a coarser grid");
  }
  cholesky_ = llt.matrixL();
}

PathSampler::~PathSampler() = default;
PathSampler::PathSampler(PathSampler&&) noexcept = default;
PathSampler& PathSampler::operator=(PathSampler&&) noexcept = default;

void PathSampler::sample_into(std::uint64_t master_seed, std::uint64_t index, Eigen::MatrixXd& values) const {
  const auto n = static_cast<Eigen::Index>(times_.size() - 1);
  const int d = model_.dim();
  values.resize(n + 1, d);
  values.row(0).setZero();
  Rng rng(mix_seed(master_seed, index));
  Eigen::VectorXd z(n);
  Eigen::VectorXd inc(n);
  std::vector<std::complex<double>> in;
  std::vector<std::complex<double>> out;
  if (circulant_) {
    in.resize(circulant_->size);
    out.resize(circulant_->size);
  }
  for (int c = 0; c < d; ++c) {
    switch (backend_) {
      case SamplerBackend::independent:
        for (Eigen::Index k = 0; k < n; ++k) inc[k] = step_sd_[k] * rng.normal();
        break;
      case SamplerBackend::cholesky:
        for (Eigen::Index k = 0; k < n; ++k) z[k] = rng.normal();
        inc.noalias() = cholesky_.triangularView<Eigen::Lower>() * z;
        break;
      case SamplerBackend::circulant:
        for (std::size_t k = 0; k < circulant_->size; ++k) {
          const double re = rng.normal();
          const double im = rng.normal();
          in[k] = circulant_->scale[k] * std::complex<double>(re, im);
        }
        fftw_execute_dft(circulant_->plan, reinterpret_cast<fftw_complex*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
        for (Eigen::Index k = 0; k < n; ++k) inc[k] = out[static_cast<std::size_t>(k)].real();
        break;
      case SamplerBackend::automatic:
        break;
    }
    double acc = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      acc += inc[k];
      values(k + 1, c) = acc;
    }
  }
}

PathSample PathSampler::sample(std::uint64_t master_seed, std::uint64_t index) const {
  PathSample s;
  s.times = times_;
  s.master_seed = master_seed;
  s.index = index;
  sample_into(master_seed, index, s.values);
  return s;
}

std::vector<PathSample> simulate_paths(const CovarianceModel& model, const std::vector<double>& times, std::size_t n,
                                       std::uint64_t master_seed, int threads, SamplerBackend backend) {
  const PathSampler sampler(model, times, backend);
  std::vector<PathSample> out(n);
  parallel_for(n, threads, [&](std::size_t i) { out[i] = sampler.sample(master_seed, i); });
  return out;
}

namespace {

double partition_rho_variation(const CovarianceModel& model, double s, double t, int level) {
  const std::size_t pieces = std::size_t{1} << level;
  const double h = (t - s) / static_cast<double>(pieces);
  const double rho = model.rho();
  double acc = 0.0;
  for (std::size_t i = 0; i < pieces; ++i) {
    const double a = s + static_cast<double>(i) * h;
    for (std::size_t j = 0; j < pieces; ++j) {
      const double c = s + static_cast<double>(j) * h;
      const double r = model.increment_covariance(a, a + h, c, c + h);
      acc += std::pow(std::abs(r), rho);
    }
  }
  return std::pow(acc, 1.0 / rho);
}

}  // namespace

RhoVariationReport rho_variation_audit(const CovarianceModel& model, double s, double t, int mesh_levels) {
  if (!(t > s) || s < 0.0 || t > model.horizon() * (1.0 + 1e-12)) {
    throw InvalidArgument("rho-variation audit needs 0 <= s < t <= T");
  }
  if (mesh_levels < 0 || mesh_levels > 12) throw InvalidArgument("mesh_levels must lie in [0, 12]");
  RhoVariationReport rep;
  rep.interval_start = s;
  rep.interval_end = t;
  for (int l = 0; l <= mesh_levels; ++l) {
    rep.by_level.push_back(partition_rho_variation(model, s, t, l));
    rep.estimate = std::max(rep.estimate, rep.by_level.back());
  }
  const double inv_rho = 1.0 / model.rho();
  const int sub_depth = std::min(3, mesh_levels);
  for (int j = 0; j <= sub_depth; ++j) {
    const std::size_t count = std::size_t{1} << j;
    const double len = (t - s) / static_cast<double>(count);
    const int levels = mesh_levels - j;
    for (std::size_t i = 0; i < count; ++i) {
      const double a = s + static_cast<double>(i) * len;
      double est = 0.0;
      for (int l = 0; l <= levels; ++l) est = std::max(est, partition_rho_variation(model, a, a + len, l));
      rep.fitted_m = std::max(rep.fitted_m, est / std::pow(len, inv_rho));
      ++rep.sampled_intervals;
    }
  }
  return rep;
}

SigmaConditionsReport sigma_conditions_audit(const CovarianceModel& model, double window) {
  if (!(window > 0.0) || window > model.horizon() * (1.0 + 1e-12)) {
    throw InvalidArgument("sigma2 audit window must lie in (0, T]");
  }
  SigmaConditionsReport rep;
  rep.window = window;
  const double inv_rho = 1.0 / model.rho();
  constexpr int kPoints = 400;
  const double lo = window * 1e-4;
  auto tau_at = [&](int k) { return lo * std::pow(window / lo, static_cast<double>(k) / (kPoints - 1)); };

  rep.c1 = std::numeric_limits<double>::infinity();
  int convex = 0;
  int concave = 0;
  int flat = 0;
  for (int k = 0; k < kPoints; ++k) {
    const double tau = tau_at(k);
    const double s2 = model.sigma2(tau);
    const double ratio = s2 / std::pow(tau, inv_rho);
    rep.c1 = std::min(rep.c1, ratio);
    rep.c2 = std::max(rep.c2, ratio);
    if (2.0 * tau <= window * (1.0 + 1e-12)) {
      rep.doubling_constant = std::max(rep.doubling_constant, model.sigma2(2.0 * tau) / s2);
    }
    rep.c3 = std::max(rep.c3, std::abs(model.sigma2_derivative(tau, 3)) * std::pow(tau, 3.0 - inv_rho));
    const double second = model.sigma2_derivative(tau, 2);
    const double scale = std::abs(model.sigma2_derivative(tau, 1)) / tau;
    if (std::abs(second) <= 1e-9 * scale) {
      ++flat;
    } else if (second > 0.0) {
      ++convex;
    } else {
      ++concave;
    }
  }
  if (rep.doubling_constant == 0.0) rep.doubling_constant = model.sigma2(window) / model.sigma2(0.5 * window);
  rep.doubling_pass = rep.doubling_constant < 4.0;
  rep.envelope_ratio = rep.c2 * std::pow(2.0, inv_rho) / rep.c1;
  rep.envelope_pass = rep.envelope_ratio < 4.0;
  if (flat == kPoints) {
    rep.curvature = "linear";
  } else if (concave == 0) {
    rep.curvature = "convex";
  } else if (convex == 0) {
    rep.curvature = "concave";
  } else {
    rep.curvature = "mixed";
  }
  if (rep.curvature == "concave" || rep.curvature == "mixed") {
    rep.curvature_note = "sigma2 is not convex on the window; the two-sided small-ball theorem's convexity hypothesis "
                         "does not apply, the lower-bound conditions are reported separately";
  }
  rep.all_pass = rep.doubling_pass && rep.envelope_pass && std::isfinite(rep.c3);
  return rep;
}

namespace {

Eigen::Index grid_index(const std::vector<double>& times, double t) {
  const double span = times.back() - times.front();
  auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12 * span);
  if (it == times.end() || std::abs(*it - t) > 1e-12 * span) {
    std::ostringstream os;
    os << "grid does not resolve the dyadic point t = " << t;
    throw InvalidArgument(os.str());
  }
  return static_cast<Eigen::Index>(it - times.begin());
}

struct SchauderPoints {
  double a, b, c;
};

SchauderPoints schauder_points(double horizon, int p, int m) {
  if (p < 0 || p > 40) throw InvalidArgument("wavelet level p out of range");
  const double cells = std::ldexp(1.0, p);
  if (m < 1 || static_cast<double>(m) > cells) throw InvalidArgument("wavelet index m must lie in 1..2^p");
  const double w = horizon / cells;
  return {(m - 1) * w, (m - 0.5) * w, m * w};
}

}  // namespace

Eigen::VectorXd schauder_coefficient(const PathSample& path, int p, int m) {
  if (path.times.size() < 2 || path.values.rows() != static_cast<Eigen::Index>(path.times.size())) {
    throw InvalidArgument("schauder_coefficient: malformed path sample");
  }
  const double horizon = path.times.back() - path.times.front();
  const auto pts = schauder_points(horizon, p, m);
  const double t0 = path.times.front();
  const Eigen::Index ia = grid_index(path.times, t0 + pts.a);
  const Eigen::Index ib = grid_index(path.times, t0 + pts.b);
  const Eigen::Index ic = grid_index(path.times, t0 + pts.c);
  const Eigen::VectorXd left = (path.values.row(ib) - path.values.row(ia)).transpose();
  const Eigen::VectorXd right = (path.values.row(ic) - path.values.row(ib)).transpose();
  return std::sqrt(std::ldexp(1.0, p)) * (left - right);
}

double wavelet_variance(const CovarianceModel& model, int p) {
  if (p < 0 || p > 40) throw InvalidArgument("wavelet level p out of range");
  const double t = model.horizon();
  return std::ldexp(1.0, p) * (4.0 * model.sigma2(std::ldexp(t, -p - 1)) - model.sigma2(std::ldexp(t, -p)));
}

WaveletCorrelation wavelet_cross_correlation(const CovarianceModel& model, int p, int m1, int m2) {
  const auto x = schauder_points(model.horizon(), p, m1);
  const auto y = schauder_points(model.horizon(), p, m2);
  auto cov = [&](const SchauderPoints& u, const SchauderPoints& v) {
    return model.increment_covariance(u.a, u.b, v.a, v.b) - model.increment_covariance(u.a, u.b, v.b, v.c) -
           model.increment_covariance(u.b, u.c, v.a, v.b) + model.increment_covariance(u.b, u.c, v.b, v.c);
  };
  WaveletCorrelation out;
  out.correlation = cov(x, y) / std::sqrt(cov(x, x) * cov(y, y));
  const int gap = std::abs(m1 - m2);
  out.decay_target = gap >= 2 ? std::pow(static_cast<double>(gap - 1), 1.0 / model.rho() - 3.0)
                              : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::vector<WaveletVarianceEstimate> estimate_wavelet_variances(const CovarianceModel& model,
                                                                const std::vector<double>& times, int max_level,
                                                                std::size_t n, std::uint64_t master_seed,
                                                                int threads) {
  if (max_level < 0 || n < 2) throw InvalidArgument("wavelet estimate needs max_level >= 0 and n >= 2");
  if (std::ldexp(1.0, max_level + 1) > static_cast<double>(times.size() - 1)) {
    throw InvalidArgument("grid too coarse for the requested wavelet levels");
  }
  const PathSampler sampler(model, times);
  const auto levels = static_cast<std::size_t>(max_level + 1);
  std::vector<double> per_sample(n * levels);
  parallel_for(n, threads, [&](std::size_t i) {
    PathSample s;
    s.times = times;
    sampler.sample_into(master_seed, i, s.values);
    for (int p = 0; p <= max_level; ++p) {
      double sum = 0.0;
      for (int m = 1; m <= (1 << p); ++m) sum += schauder_coefficient(s, p, m).squaredNorm();
      per_sample[i * levels + static_cast<std::size_t>(p)] = sum / (std::ldexp(1.0, p) * model.dim());
    }
  });
  std::vector<WaveletVarianceEstimate> out(levels);
  std::vector<double> column(n);
  for (std::size_t p = 0; p < levels; ++p) {
    for (std::size_t i = 0; i < n; ++i) column[i] = per_sample[i * levels + p];
    const auto stat = mean_and_se(column);
    auto& e = out[p];
    e.level = static_cast<int>(p);
    e.exact = wavelet_variance(model, e.level);
    e.mc = stat.mean;
    e.se = stat.se;
    e.z = (e.mc - e.exact) / e.se;
  }
  return out;
}

CameronMartinGeometry::CameronMartinGeometry(const CovarianceModel& model, std::vector<double> times)
    : times_(std::move(times)), dim_(model.dim()) {
  detail::validate_times(times_);
  if (times_.front() != 0.0) throw InvalidArgument("Cameron-Martin grid must start at t = 0");
  const auto n = static_cast<Eigen::Index>(times_.size() - 1);
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = model.covariance(times_[static_cast<std::size_t>(i + 1)], times_[static_cast<std::size_t>(j + 1)]);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const std::string advice = "; the covariance Gram matrix is numerically singular, coarsen the grid (e.g. halve N = " +
                             std::to_string(n) + ")";
  if (llt.info() != Eigen::Success) throw NumericalError("Cameron-Martin norm" + advice);
  factor_ = llt.matrixL();
  const Eigen::VectorXd diag = factor_.diagonal();
  if (diag.minCoeff() <= 1e-7 * diag.maxCoeff()) throw NumericalError("Cameron-Martin norm" + advice);
}

double CameronMartinGeometry::norm(const CMPath& h) const {
  if (h.times.size() != times_.size()) throw InvalidArgument("Cameron-Martin norm: h is not on the model grid");
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (std::abs(h.times[k] - times_[k]) > 1e-12 * times_.back()) {
      throw InvalidArgument("Cameron-Martin norm: h is not on the model grid");
    }
  }
  if (h.dim() != dim_) throw InvalidArgument("Cameron-Martin norm: dimension mismatch");
  if (h.values.row(0).cwiseAbs().maxCoeff() > 1e-14) throw InvalidArgument("Cameron-Martin paths must start at 0");
  const auto n = static_cast<Eigen::Index>(times_.size() - 1);
  double sq = 0.0;
  for (int c = 0; c < dim_; ++c) {
    Eigen::VectorXd y = h.values.col(c).tail(n);
    factor_.triangularView<Eigen::Lower>().solveInPlace(y);
    sq += y.squaredNorm();
  }
  return std::sqrt(sq);
}

CMPath CameronMartinGeometry::from_coefficients(const Eigen::MatrixXd& z) const {
  const auto n = static_cast<Eigen::Index>(times_.size() - 1);
  if (z.rows() != n || z.cols() != dim_) throw InvalidArgument("Cameron-Martin coefficients must be N x d");
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n + 1, dim_);
  values.bottomRows(n) = factor_.triangularView<Eigen::Lower>() * z;
  return CMPath(times_, std::move(values));
}

CameronMartinResult cameron_martin_norm(const CovarianceModel& model, const CMPath& h) {
  const CameronMartinGeometry geom(model, h.times);
  CameronMartinResult r;
  r.norm = geom.norm(h);
  r.rate = 0.5 * r.norm * r.norm;
  return r;
}

}  // namespace roughball
