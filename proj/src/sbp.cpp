#include "roughball/sbp.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "roughball/error.hpp"
#include "roughball/parallel.hpp"
#include "roughball/rng.hpp"
#include "roughball/stats.hpp"

namespace roughball {

double rd_gaussian_small_ball(int d, double eps, SmallBallNorm norm) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (norm == SmallBallNorm::l2) return boost::math::gamma_p(0.5 * d, 0.5 * eps * eps);
  return std::pow(boost::math::erf(eps / std::sqrt(2.0)), d);
}

ErfBounds erf_lower_bounds(double s, double t) {
  if (!(s > 0.0) || !(t >= 0.0)) throw InvalidArgument("erf bounds need s > 0 and t >= 0");
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  ErfBounds b;
  b.erf_value = boost::math::erf(t / std::sqrt(2.0));
  b.erf_scaled = boost::math::erf(s * t / std::sqrt(2.0));
  b.linear_bound = t <= 1.0 ? 0.5 * t : nan;
  b.exponential_bound =
      t >= 1.0 ? std::exp(-std::exp(-0.5 * (s * t) * (s * t)) / -std::expm1(-0.5 * s * s)) : nan;
  if (t <= 1.0 && b.erf_value < b.linear_bound) b.violated = true;
  if (t >= 1.0 && b.erf_scaled < b.exponential_bound) b.violated = true;
  return b;
}

std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::path_holder:
      return "path_holder";
    case NormKind::rough_holder_allpairs:
      return "rough_holder_allpairs";
    case NormKind::rough_holder_dyadic:
      return "rough_holder_dyadic";
    case NormKind::rough_holder_lemma_bound:
      return "rough_holder_lemma_bound";
  }
  return "unknown";
}

NormKind norm_kind_from_string(const std::string& s) {
  for (auto k : {NormKind::path_holder, NormKind::rough_holder_allpairs, NormKind::rough_holder_dyadic,
                 NormKind::rough_holder_lemma_bound}) {
    if (to_string(k) == s) return k;
  }
  throw InvalidArgument("unknown norm kind '" + s +
                        "' (expected path_holder, rough_holder_allpairs, rough_holder_dyadic or "
                        "rough_holder_lemma_bound)");
}

double evaluate_norm(const GridRoughPath& x, const NormSpec& spec) {
  switch (spec.kind) {
    case NormKind::path_holder:
      return path_holder_norm(x, spec.alpha, spec.path_pairs, spec.variant);
    case NormKind::rough_holder_allpairs:
      return holder_norm(x, spec.alpha, PairSet::all, spec.variant);
    case NormKind::rough_holder_dyadic:
      return holder_norm(x, spec.alpha, PairSet::dyadic, spec.variant);
    case NormKind::rough_holder_lemma_bound: {
      const double eps = spec.lemma_eps > 0.0 ? spec.lemma_eps : 0.5 * x.horizon();
      return dyadic_holder_bound(x, spec.alpha, eps, x.dyadic_depth(), spec.variant).value;
    }
  }
  return 0.0;
}

void check_sbp_alpha(const CovarianceModel& model, const NormSpec& spec) {
  if (spec.kind == NormKind::path_holder) {
    if (!(spec.alpha > 0.0 && spec.alpha <= 1.0)) throw InvalidArgument("path Hoelder exponent must lie in (0, 1]");
    return;
  }
  const double top = 1.0 / (2.0 * model.rho());
  if (!(spec.alpha > 1.0 / 3.0 && spec.alpha < top)) {
    throw InvalidArgument("rough Hoelder exponent must lie in (1/3, " + std::to_string(top) + ") for this model");
  }
}

Eigen::MatrixXd sample_norms(const CovarianceModel& model, const std::vector<double>& times,
                             const std::vector<NormSpec>& specs, std::size_t n, std::uint64_t master_seed,
                             int threads) {
  if (specs.empty()) throw InvalidArgument("sample_norms needs at least one norm");
  const PathSampler sampler(model, times);
  const std::uint64_t seed = stream_seed(master_seed, Stream::paths);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(specs.size()));
  parallel_for(n, threads, [&](std::size_t i) {
    Eigen::MatrixXd values;
    sampler.sample_into(seed, i, values);
    const auto lifted = lift_piecewise_linear(CMPath(sampler.times(), std::move(values)));
    for (std::size_t k = 0; k < specs.size(); ++k) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = evaluate_norm(lifted, specs[k]);
    }
  });
  return out;
}

SBPCurve curve_from_norms(std::vector<double> norms, const std::vector<double>& eps, const NormSpec& spec,
                          std::string model, std::uint64_t seed) {
  if (norms.empty()) throw InvalidArgument("SBP curve needs at least one sample");
  for (double e : eps) {
    if (!(e > 0.0)) throw InvalidArgument("eps values must be positive");
  }
  std::sort(norms.begin(), norms.end());
  SBPCurve c;
  c.alpha = spec.alpha;
  c.norm_kind = spec.kind;
  c.eps = eps;
  c.n_samples = norms.size();
  c.model = std::move(model);
  c.seed = seed;
  for (double e : eps) {
    const auto hits = static_cast<std::size_t>(std::lower_bound(norms.begin(), norms.end(), e) - norms.begin());
    const auto ci = wilson_interval(hits, norms.size());
    c.hits.push_back(hits);
    c.p_hat.push_back(static_cast<double>(hits) / static_cast<double>(norms.size()));
    c.ci_low.push_back(ci.low);
    c.ci_high.push_back(ci.high);
    c.resolution_floor.push_back(hits == 0);
  }
  for (std::size_t i = 0; i < eps.size(); ++i)
    for (std::size_t j = 0; j < eps.size(); ++j)
      if (eps[i] < eps[j] && c.p_hat[i] > c.p_hat[j]) ++c.raw_monotone_violations;
  c.sorted_norms = std::move(norms);
  return c;
}

SBPCurve estimate_sbp_curve(const CovarianceModel& model, double alpha, NormKind kind, const std::vector<double>& eps,
                            std::size_t n_samples, std::uint64_t master_seed, const SBPOptions& options) {
  if (n_samples == 0) throw InvalidArgument("n_samples must be >= 1");
  NormSpec spec;
  spec.alpha = alpha;
  spec.kind = kind;
  spec.lemma_eps = options.lemma_eps;
  spec.path_pairs = options.path_pairs;
  check_sbp_alpha(model, spec);
  const auto times = options.times.empty() ? dyadic_grid(model.horizon(), 10) : options.times;
  const Eigen::MatrixXd norms = sample_norms(model, times, {spec}, n_samples, master_seed, options.threads);
  std::vector<double> col(norms.data(), norms.data() + norms.rows());
  return curve_from_norms(std::move(col), eps, spec, model.describe(), master_seed);
}

IndexFit fit_variation_index(const std::vector<double>& eps, const std::vector<double>& p, double eps_min,
                             double eps_max) {
  if (eps.size() != p.size()) throw InvalidArgument("index fit: eps and p lengths differ");
  if (!(eps_max >= eps_min)) throw InvalidArgument("index fit: empty window");
  std::vector<std::pair<double, double>> pts;  // (log 1/eps, p)
  IndexFit fit;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (p[i] <= 0.0) fit.resolution_floor = true;
    if (eps[i] >= eps_min && eps[i] <= eps_max && p[i] > 0.0 && p[i] < 1.0) pts.emplace_back(-std::log(eps[i]), p[i]);
  }
  if (pts.size() < 4) {
    throw NumericalError("index fit needs at least 4 points with 0 < p < 1 in the window, found " +
                         std::to_string(pts.size()));
  }
  std::sort(pts.begin(), pts.end());
  std::vector<double> x, y, z;
  for (const auto& [lx, pv] : pts) {
    x.push_back(lx);
    y.push_back(std::log(-std::log(pv)));
    z.push_back(-std::log(pv));
  }
  const auto main = linear_fit(x, y);
  fit.index = main.slope;
  fit.intercept = main.intercept;
  fit.r2 = main.r2;
  fit.points = pts.size();
  fit.eps_min = std::exp(-x.back());
  fit.eps_max = std::exp(-x.front());
  fit.log_slope = linear_fit(x, z).slope;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > x[i - 1]) fit.local_slopes.push_back((y[i] - y[i - 1]) / (x[i] - x[i - 1]));
  }
  const std::size_t half = fit.local_slopes.size() / 2;
  if (half >= 1) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < half; ++i) lo += fit.local_slopes[i];
    for (std::size_t i = fit.local_slopes.size() - half; i < fit.local_slopes.size(); ++i) hi += fit.local_slopes[i];
    fit.local_slope_trend = (lo - hi) / static_cast<double>(half);
  }
  fit.slowly_varying_flag = std::abs(fit.local_slope_trend) > 1e-3 * std::max(1.0, std::abs(fit.index));
  if (fit.index < 0.0) {
    throw NumericalError("fitted variation index is negative; the window lies outside the small-ball regime");
  }
  return fit;
}

IndexFit fit_variation_index(const SBPCurve& curve, double eps_min, double eps_max) {
  auto fit = fit_variation_index(curve.eps, curve.p_hat, eps_min, eps_max);
  for (bool f : curve.resolution_floor) fit.resolution_floor = fit.resolution_floor || f;
  return fit;
}

double predicted_sbp_index(double rho, double alpha) {
  if (!(rho >= 1.0)) throw InvalidArgument("rho must be >= 1");
  const double beta = 1.0 / (2.0 * rho) - alpha;
  if (!(beta > 0.0)) throw InvalidArgument("predicted index undefined: alpha must be < 1/(2 rho)");
  return 1.0 / beta;
}

std::vector<double> quantile_eps(const std::vector<double>& sorted_norms, const std::vector<double>& levels) {
  if (sorted_norms.empty()) throw InvalidArgument("quantile_eps needs samples");
  const std::size_t n = sorted_norms.size();
  std::vector<double> out;
  for (double q : levels) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("quantile levels must lie in (0, 1)");
    const auto k = std::min(n - 1, static_cast<std::size_t>(std::llround(q * static_cast<double>(n))));
    out.push_back(sorted_norms[k]);
  }
  return out;
}

}  // namespace roughball
