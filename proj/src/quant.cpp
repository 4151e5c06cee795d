#include "roughball/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/random/sobol.hpp>

#include "roughball/error.hpp"
#include "roughball/parallel.hpp"
#include "roughball/rng.hpp"
#include "roughball/stats.hpp"

namespace roughball {

namespace {

double power(double d, double r) {
  if (r == 1.0) return d;
  if (r == 2.0) return d * d;
  return std::pow(d, r);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

double van_der_corput(std::size_t k) {
  double v = 0.0, f = 0.5;
  for (; k > 0; k >>= 1, f *= 0.5)
    if (k & 1) v += f;
  return v;
}

}  // namespace

CMPath level1_path(const GridRoughPath& x) {
  const int d = x.dim();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.num_steps() + 1), d);
  for (std::size_t k = 0; k < x.num_steps(); ++k) {
    const double* s = x.raw_step(k);
    for (int c = 0; c < d; ++c) v(static_cast<Eigen::Index>(k + 1), c) = v(static_cast<Eigen::Index>(k), c) + s[c];
  }
  return CMPath(x.times(), std::move(v));
}

std::vector<GridRoughPath> sample_lifted_paths(const CovarianceModel& model, const std::vector<double>& times,
                                               std::size_t count, std::uint64_t seed, int threads) {
  const PathSampler sampler(model, times);
  const std::uint64_t s = stream_seed(seed, Stream::paths);
  std::vector<GridRoughPath> out(count);
  parallel_for(count, threads, [&](std::size_t i) {
    Eigen::MatrixXd values;
    sampler.sample_into(s, i, values);
    out[i] = lift_piecewise_linear(CMPath(sampler.times(), std::move(values)));
  });
  return out;
}

BallMesh cameron_martin_mesh(const CovarianceModel& model, const std::vector<double>& times, double eta,
                             std::size_t size) {
  if (size == 0) throw InvalidArgument("empty mesh");
  if (!(eta >= 0.0)) throw InvalidArgument("ball radius eta must be >= 0");
  const CameronMartinGeometry geo(model, times);
  const auto steps = static_cast<Eigen::Index>(times.size() - 1);
  const int d = model.dim();
  const auto dims = static_cast<std::size_t>(steps) * static_cast<std::size_t>(d);
  if (dims > 3667) throw InvalidArgument("mesh needs at most 3667 coordinates (N * d)");
  BallMesh mesh;
  mesh.eta = eta;
  boost::random::sobol qrng(dims);
  std::vector<double> u(dims);
  auto next_point = [&] {
    for (auto& v : u) {
      const double x = (static_cast<double>(qrng()) + 0.5) * 0x1p-64;
      v = std::clamp(x, 1e-16, 1.0 - 1e-16);
    }
  };
  next_point();  // the first Sobol point is the centre of the cube
  mesh.paths.push_back(CMPath(times, Eigen::MatrixXd::Zero(steps + 1, d)));
  for (std::size_t j = 1; j < size; ++j) {
    next_point();
    Eigen::MatrixXd z(steps, d);
    for (Eigen::Index k = 0; k < steps; ++k)
      for (int c = 0; c < d; ++c) z(k, c) = normal_quantile(u[static_cast<std::size_t>(k * d + c)]);
    const double zn = z.norm();
    const double radius = j % 2 == 1 ? eta : eta * van_der_corput(j / 2);
    z *= zn > 0.0 ? radius / zn : 0.0;
    mesh.paths.push_back(geo.from_coefficients(z));
  }
  for (const auto& p : mesh.paths) mesh.lifts.push_back(lift_piecewise_linear(p));
  return mesh;
}

Traversal farthest_point_traversal(const std::vector<GridRoughPath>& points, const Metric& metric, int threads) {
  if (points.empty()) throw InvalidArgument("empty mesh");
  const std::size_t m = points.size();
  Traversal t;
  std::vector<double> mind(m, std::numeric_limits<double>::infinity());
  std::vector<double> fresh(m);
  std::size_t next = 0;
  while (true) {
    t.order.push_back(next);
    parallel_for(m, threads, [&](std::size_t i) { fresh[i] = metric(points[next], points[i]); });
    for (std::size_t i = 0; i < m; ++i) mind[i] = std::min(mind[i], fresh[i]);
    mind[next] = 0.0;
    const auto it = std::max_element(mind.begin(), mind.end());
    t.radius.push_back(*it);
    if (*it <= 0.0 || t.order.size() == m) break;
    next = static_cast<std::size_t>(it - mind.begin());
  }
  return t;
}

std::vector<CoverResult> greedy_cover(const std::vector<GridRoughPath>& points, const Metric& metric,
                                      const std::vector<double>& eps, int threads) {
  for (double e : eps)
    if (!(e >= 0.0)) throw InvalidArgument("cover radius must be >= 0");
  const auto t = farthest_point_traversal(points, metric, threads);
  std::vector<CoverResult> out;
  for (double e : eps) {
    CoverResult c;
    c.eps = e;
    std::size_t k = 0;
    while (t.radius[k] > e && k + 1 < t.radius.size()) ++k;
    c.count = k + 1;
    c.centers.assign(t.order.begin(), t.order.begin() + static_cast<std::ptrdiff_t>(k + 1));
    c.certificate = t.radius[k];
    out.push_back(std::move(c));
  }
  return out;
}

EntropyBounds entropy_bounds(double sbp_eps, double sbp_2eps, double eta, double eps) {
  if (!(eta >= 0.0) || !(eps > 0.0)) throw InvalidArgument("entropy bounds need eta >= 0 and eps > 0");
  if (!std::isfinite(sbp_eps) || !std::isfinite(sbp_2eps) || sbp_eps < 0.0 || sbp_2eps < 0.0) {
    throw NumericalError("small-ball function unavailable at eps or 2 eps (resolution floor)");
  }
  EntropyBounds b;
  b.eta = eta;
  b.eps = eps;
  b.sbp_eps = sbp_eps;
  b.sbp_2eps = sbp_2eps;
  b.upper = 0.5 * eta * eta + sbp_eps;
  const double p = std::exp(-sbp_eps);
  const double inner = p >= 1.0 ? 1.0 : normal_cdf(eta + normal_quantile(p));
  b.lower = std::log(inner) + sbp_2eps;
  constexpr double inf = std::numeric_limits<double>::infinity();
  b.upper_unit_scale = eta > 0.0 ? 2.0 * eps / eta : inf;
  b.lower_unit_scale = eta > 0.0 ? eps / eta : inf;
  return b;
}

EntropyBounds entropy_bounds_from_sbp(const SBPCurve& curve, double eta, double eps) {
  const auto& s = curve.sorted_norms;
  if (s.empty()) throw InvalidArgument("SBP curve carries no sorted norms");
  auto prob = [&](double e) {
    return static_cast<double>(std::lower_bound(s.begin(), s.end(), e) - s.begin()) / static_cast<double>(s.size());
  };
  const double p1 = prob(eps), p2 = prob(2.0 * eps);
  if (p1 <= 0.0) throw NumericalError("p(eps) is at the resolution floor; increase the sample count or eps");
  return entropy_bounds(-std::log(p1), -std::log(p2), eta, eps);
}

double sbp_inverse(const std::vector<double>& eps, const std::vector<double>& p, double y) {
  if (eps.size() != p.size()) throw InvalidArgument("sbp_inverse: eps and p lengths differ");
  if (!(y > 0.0)) throw InvalidArgument("sbp_inverse: level must be positive");
  std::vector<std::size_t> idx(eps.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return eps[a] < eps[b]; });
  std::vector<double> e, q;
  for (auto i : idx) {
    e.push_back(eps[i]);
    q.push_back(p[i]);
  }
  q = isotonic_increasing(q);
  std::vector<double> le, lb;  // log eps, log B; B decreasing in eps
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (q[i] > 0.0 && q[i] < 1.0 && e[i] > 0.0) {
      le.push_back(std::log(e[i]));
      lb.push_back(std::log(-std::log(q[i])));
    }
  }
  if (le.size() < 2) throw NumericalError("sbp_inverse needs at least two resolved points");
  const double ly = std::log(y);
  if (ly > lb.front()) throw NumericalError("sbp_inverse: level lies below the resolution floor of the curve");
  if (ly < lb.back()) throw NumericalError("sbp_inverse: level lies beyond the largest resolved eps");
  for (std::size_t i = 0; i + 1 < le.size(); ++i) {
    if (ly <= lb[i] && ly >= lb[i + 1]) {
      if (lb[i] == lb[i + 1]) return std::exp(le[i]);
      const double w = (lb[i] - ly) / (lb[i] - lb[i + 1]);
      return std::exp(le[i] + w * (le[i + 1] - le[i]));
    }
  }
  return std::exp(le.back());
}

double sbp_inverse(const SBPCurve& curve, double y) { return sbp_inverse(curve.eps, curve.p_hat, y); }

// ---------------------------------------------------------------------------

namespace {

/// Lloyd iteration over an abstract sample space with indexable centers.
template <class Space>
struct LloydRun {
  Space& space;
  const LloydOptions& opt;
  std::vector<std::size_t> assign;
  std::vector<double> dmin;

  double assign_all() {
    const std::size_t n = space.size();
    assign.resize(n);
    dmin.resize(n);
    parallel_for(n, opt.threads, [&](std::size_t i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < space.centers(); ++c) {
        const double d = space.distance(i, c);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      assign[i] = arg;
      dmin[i] = best;
    });
    double total = 0.0;
    for (double d : dmin) total += power(d, opt.r);
    return total / static_cast<double>(n);
  }

  void initialise(std::size_t k) {
    const std::size_t n = space.size();
    Rng rng(stream_seed(opt.seed, Stream::init));
    std::vector<std::size_t> chosen;
    if (opt.init == LloydInit::random) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - i));
        std::swap(perm[i], perm[std::min(j, n - 1)]);
        chosen.push_back(perm[i]);
      }
    } else {
      chosen.push_back(std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n))));
      std::vector<double> best(n, std::numeric_limits<double>::infinity());
      std::vector<char> taken(n, 0);
      taken[chosen[0]] = 1;
      while (chosen.size() < k) {
        const std::size_t last = chosen.back();
        parallel_for(n, opt.threads, [&](std::size_t i) { best[i] = std::min(best[i], space.sample_distance(i, last)); });
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += taken[i] ? 0.0 : power(best[i], opt.r);
        std::size_t pick = n;
        if (total > 0.0) {
          double target = rng.uniform() * total;
          for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            target -= power(best[i], opt.r);
            pick = i;
            if (target < 0.0) break;
          }
        } else {
          for (std::size_t i = 0; i < n && pick == n; ++i)
            if (!taken[i]) pick = i;
        }
        taken[pick] = 1;
        chosen.push_back(pick);
      }
    }
    space.set_size(k);
    for (std::size_t c = 0; c < k; ++c) space.set_to_sample(c, chosen[c]);
  }

  std::vector<std::vector<std::size_t>> members() const {
    std::vector<std::vector<std::size_t>> m(space.centers());
    for (std::size_t i = 0; i < assign.size(); ++i) m[assign[i]].push_back(i);
    return m;
  }

  /// Re-seeds empty clusters at the farthest sample; returns true if anything changed.
  bool fix_empty() {
    bool changed = false;
    for (std::size_t c = 0; c < space.centers(); ++c) {
      if (std::find(assign.begin(), assign.end(), c) != assign.end()) continue;
      const auto far = static_cast<std::size_t>(std::max_element(dmin.begin(), dmin.end()) - dmin.begin());
      if (!(dmin[far] > 0.0)) break;  // every sample sits on a center; duplicates stay empty
      space.set_to_sample(c, far);
      assign[far] = c;
      dmin[far] = 0.0;
      changed = true;
    }
    return changed;
  }

  /// Candidates: every member for small clusters, otherwise the members nearest the
  /// current center plus an evenly strided sweep whose offset moves with `round`.
  void medoid_step(std::size_t round) {
    const auto groups = members();
    const std::size_t limit = opt.medoid_candidates;
    for (std::size_t c = 0; c < groups.size(); ++c) {
      const auto& g = groups[c];
      if (g.empty()) continue;
      std::vector<std::size_t> cand = g;
      if (g.size() > limit) {
        const std::size_t near = (limit + 1) / 2;
        std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(near), cand.end(),
                         [&](std::size_t a, std::size_t b) { return dmin[a] < dmin[b] || (dmin[a] == dmin[b] && a < b); });
        cand.resize(near);
        const std::size_t stride = g.size() / (limit - near + 1);
        for (std::size_t j = round % stride; j < g.size() && cand.size() < limit; j += stride) cand.push_back(g[j]);
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      }
      double current = 0.0;
      for (std::size_t i : groups[c]) current += power(dmin[i], opt.r);
      std::vector<double> cost(cand.size(), 0.0);
      parallel_for(cand.size(), opt.threads, [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t i : groups[c]) s += power(space.sample_distance(i, cand[k]), opt.r);
        cost[k] = s;
      });
      const auto best = static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin());
      if (cost[best] < current) space.set_to_sample(c, cand[best]);
    }
  }

  void mean_step() {
    const auto groups = members();
    for (std::size_t c = 0; c < groups.size(); ++c)
      if (!groups[c].empty()) space.set_to_mean(c, groups[c]);
  }

  void run(std::vector<double>& history, int& iterations, double& distortion) {
    const std::size_t k = std::min(opt.n, space.size());
    initialise(k);
    double prev = assign_all();
    while (fix_empty()) prev = assign_all();
    history.push_back(prev);
    iterations = 0;
    while (iterations < opt.max_iter && prev > 0.0) {
      if (opt.update == CenterUpdate::medoid)
        medoid_step(static_cast<std::size_t>(iterations));
      else
        mean_step();
      double cur = assign_all();
      while (fix_empty()) cur = assign_all();
      ++iterations;
      history.push_back(cur);
      const bool done = prev - cur <= opt.tol * prev;
      prev = cur;
      if (done) break;
    }
    if (opt.update == CenterUpdate::mean) {
      medoid_step(static_cast<std::size_t>(iterations));
      prev = assign_all();
      while (fix_empty()) prev = assign_all();
      history.push_back(prev);
    }
    distortion = prev;
  }
};

struct PathSpace {
  const std::vector<GridRoughPath>& samples;
  const Metric& metric;
  std::vector<GridRoughPath> center;

  std::size_t size() const { return samples.size(); }
  std::size_t centers() const { return center.size(); }
  void set_size(std::size_t k) { center.resize(k); }
  double distance(std::size_t i, std::size_t c) const { return metric(samples[i], center[c]); }
  double sample_distance(std::size_t i, std::size_t j) const { return metric(samples[i], samples[j]); }
  void set_to_sample(std::size_t c, std::size_t i) { center[c] = samples[i]; }
  void set_to_mean(std::size_t c, const std::vector<std::size_t>& idx) {
    CMPath mean = level1_path(samples[idx[0]]);
    mean.values.setZero();
    for (std::size_t i : idx) mean.values += level1_path(samples[i]).values;
    mean.values /= static_cast<double>(idx.size());
    center[c] = lift_piecewise_linear(mean);
  }
};

struct ScalarSpace {
  const std::vector<double>& samples;
  std::vector<double> center;

  std::size_t size() const { return samples.size(); }
  std::size_t centers() const { return center.size(); }
  void set_size(std::size_t k) { center.resize(k); }
  double distance(std::size_t i, std::size_t c) const { return std::abs(samples[i] - center[c]); }
  double sample_distance(std::size_t i, std::size_t j) const { return std::abs(samples[i] - samples[j]); }
  void set_to_sample(std::size_t c, std::size_t i) { center[c] = samples[i]; }
  void set_to_mean(std::size_t c, const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (std::size_t i : idx) s += samples[i];
    center[c] = s / static_cast<double>(idx.size());
  }
};

void check_lloyd(std::size_t size, const LloydOptions& o) {
  if (size == 0) throw InvalidArgument("Lloyd needs at least one sample");
  if (o.n < 1) throw InvalidArgument("codebook size n must be >= 1");
  if (!(o.r >= 1.0)) throw InvalidArgument("quantization order r must be >= 1");
  if (o.medoid_candidates < 1) throw InvalidArgument("medoid_candidates must be >= 1");
}

}  // namespace

Codebook lloyd_codebook(const std::vector<GridRoughPath>& samples, const Metric& metric, const LloydOptions& options) {
  check_lloyd(samples.size(), options);
  PathSpace space{samples, metric, {}};
  LloydRun<PathSpace> run{space, options, {}, {}};
  Codebook cb;
  cb.r = options.r;
  cb.n = options.n;
  run.run(cb.history, cb.iterations, cb.distortion);
  cb.centers = std::move(space.center);
  return cb;
}

ScalarCodebook lloyd_scalar(const std::vector<double>& samples, const LloydOptions& options) {
  check_lloyd(samples.size(), options);
  ScalarSpace space{samples, {}};
  LloydRun<ScalarSpace> run{space, options, {}, {}};
  ScalarCodebook cb;
  cb.r = options.r;
  run.run(cb.history, cb.iterations, cb.distortion);
  cb.centers = space.center;
  std::sort(cb.centers.begin(), cb.centers.end());
  return cb;
}

QuantizationError quantization_error(const std::vector<GridRoughPath>& centers, std::size_t n,
                                     const std::vector<GridRoughPath>& fresh, double r, const Metric& metric,
                                     const SBPCurve& curve, int threads) {
  if (centers.empty() || fresh.empty()) throw InvalidArgument("quantization error needs centers and fresh samples");
  if (!(r >= 1.0)) throw InvalidArgument("quantization order r must be >= 1");
  std::vector<double> v(fresh.size());
  parallel_for(fresh.size(), threads, [&](std::size_t i) {
    double d = 0.0;
    nearest_atom(fresh[i], centers, metric, &d);
    v[i] = power(d, r);
  });
  const auto ms = mean_and_se(v);
  QuantizationError q;
  q.e_hat = std::pow(ms.mean, 1.0 / r);
  q.se = ms.mean > 0.0 ? ms.se / (r * std::pow(ms.mean, 1.0 - 1.0 / r)) : 0.0;
  q.lower_bound = sbp_inverse(curve, std::log(2.0 * static_cast<double>(n)));
  q.proven_bound = std::pow(2.0, -1.0 / r) * q.lower_bound;
  q.holds = q.e_hat >= q.lower_bound - 4.0 * q.se;
  return q;
}

// ---------------------------------------------------------------------------

void validate_measure(const DiscreteMeasure& mu) {
  if (!mu.atoms || mu.atoms->size() != mu.weights.size() || mu.weights.empty()) {
    throw InvalidArgument("measure needs one weight per atom and at least one atom");
  }
  double s = 0.0;
  for (double w : mu.weights) {
    if (!(w >= 0.0)) throw InvalidArgument("measure weights must be nonnegative");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-12) throw InvalidArgument("measure weights must sum to 1");
  const auto& t0 = mu.atom(0).times();
  for (std::size_t i = 1; i < mu.size(); ++i)
    if (mu.atom(i).times() != t0 || mu.atom(i).dim() != mu.atom(0).dim())
      throw InvalidArgument("measure atoms must share one grid and dimension");
}

DiscreteMeasure uniform_measure(std::shared_ptr<const std::vector<GridRoughPath>> atoms) {
  if (!atoms || atoms->empty()) throw InvalidArgument("measure needs at least one atom");
  const std::size_t n = atoms->size();
  return {std::move(atoms), std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

std::size_t nearest_atom(const GridRoughPath& x, const std::vector<GridRoughPath>& atoms, const Metric& metric,
                         double* distance) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double d = metric(x, atoms[i]);
    if (d < best) {
      best = d;
      arg = i;
    }
  }
  if (distance) *distance = best;
  return arg;
}

EmpiricalMeasures empirical_measures(std::shared_ptr<const std::vector<GridRoughPath>> atoms,
                                     const std::vector<GridRoughPath>& weight_samples, const Metric& metric,
                                     int threads) {
  if (!atoms || atoms->empty()) throw InvalidArgument("empirical measures need n >= 1 atoms");
  if (weight_samples.empty()) throw InvalidArgument("weight estimation needs samples");
  std::vector<std::size_t> cell(weight_samples.size());
  parallel_for(weight_samples.size(), threads,
               [&](std::size_t i) { cell[i] = nearest_atom(weight_samples[i], *atoms, metric); });
  EmpiricalMeasures em;
  em.weight_samples = weight_samples.size();
  em.cell_counts.assign(atoms->size(), 0);
  for (auto c : cell) ++em.cell_counts[c];
  std::vector<double> w(atoms->size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = static_cast<double>(em.cell_counts[i]) / static_cast<double>(weight_samples.size());
  em.weighted = {atoms, std::move(w)};
  em.uniform = uniform_measure(atoms);
  return em;
}

Eigen::MatrixXd cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double r, const Metric& metric,
                            int threads) {
  const auto m = static_cast<Eigen::Index>(mu.size()), n = static_cast<Eigen::Index>(nu.size());
  Eigen::MatrixXd c(m, n);
  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t i) {
    for (Eigen::Index j = 0; j < n; ++j)
      c(static_cast<Eigen::Index>(i), j) = power(metric(mu.atom(i), nu.atom(static_cast<std::size_t>(j))), r);
  });
  return c;
}

double wasserstein_from_cost(const std::vector<double>& a, const std::vector<double>& b, const Eigen::MatrixXd& cost,
                             double r, TransportResult* detail) {
  if (!(r >= 1.0)) throw InvalidArgument("Wasserstein order r must be >= 1");
  const Eigen::Map<const Eigen::VectorXd> av(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::Map<const Eigen::VectorXd> bv(b.data(), static_cast<Eigen::Index>(b.size()));
  for (const auto* v : {&av, &bv})
    if (std::abs(v->sum() - 1.0) > 1e-12) throw InvalidArgument("measure weights must sum to 1");
  auto res = solve_transport(av, bv, cost);
  const double w = std::pow(std::max(res.cost, 0.0), 1.0 / r);
  if (detail) *detail = std::move(res);
  return w;
}

double wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double r, const Metric& metric,
                   int threads) {
  validate_measure(mu);
  validate_measure(nu);
  if (mu.size() + nu.size() > 4096) throw InvalidArgument("combined support exceeds 4096 atoms");
  return wasserstein_from_cost(mu.weights, nu.weights, cost_matrix(mu, nu, r, metric, threads), r);
}

RateTable empirical_rate_experiment(const CovarianceModel& model, const Metric& metric, const RateOptions& options,
                                    std::uint64_t seed) {
  if (options.n_list.empty() || options.reps == 0 || options.weight_samples == 0 || options.test_size == 0) {
    throw InvalidArgument("rate experiment needs n values, reps, weight samples and a reference cloud");
  }
  for (std::size_t k = 0; k < options.n_list.size(); ++k) {
    if (options.n_list[k] < 2) throw InvalidArgument("rate experiment needs n >= 2");
    if (k > 0 && options.n_list[k] <= options.n_list[k - 1]) throw InvalidArgument("n_list must be increasing");
    if (options.n_list[k] + options.test_size > 4096) throw InvalidArgument("combined support exceeds 4096 atoms");
  }
  const auto times = options.times.empty() ? dyadic_grid(model.horizon(), 6) : options.times;
  const double r = options.r;
  const auto reference =
      sample_lifted_paths(model, times, options.test_size, stream_seed(seed, Stream::reference), options.threads);
  const std::vector<double> ref_w(options.test_size, 1.0 / static_cast<double>(options.test_size));
  const double beta = 1.0 / (2.0 * model.rho()) - metric.alpha;

  RateTable table;
  for (std::size_t n : options.n_list) {
    for (std::size_t rep = 0; rep < options.reps; ++rep) {
      const std::uint64_t cell = (static_cast<std::uint64_t>(n) << 20) + rep;
      auto atoms = std::make_shared<const std::vector<GridRoughPath>>(
          sample_lifted_paths(model, times, n, stream_seed(seed, Stream::atoms, cell), options.threads));
      const auto wsamples = sample_lifted_paths(model, times, options.weight_samples,
                                                stream_seed(seed, Stream::weights, cell), options.threads);
      const auto em = empirical_measures(atoms, wsamples, metric, options.threads);

      Eigen::MatrixXd cost(static_cast<Eigen::Index>(options.test_size), static_cast<Eigen::Index>(n));
      parallel_for(options.test_size, options.threads, [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j)
          cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = power(metric(reference[i], (*atoms)[j]), r);
      });

      RateRow row;
      row.n = n;
      row.rep = rep;
      row.seed = cell;
      TransportResult detail;
      row.w_weighted = wasserstein_from_cost(ref_w, em.weighted.weights, cost, r, &detail);
      row.w_uniform = wasserstein_from_cost(ref_w, em.uniform.weights, cost, r);

      // Multinomial noise of the estimated weights pushed through the dual potentials.
      const auto& v = detail.demand_potential;
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        m1 += em.weighted.weights[j] * v[static_cast<Eigen::Index>(j)];
        m2 += em.weighted.weights[j] * v[static_cast<Eigen::Index>(j)] * v[static_cast<Eigen::Index>(j)];
      }
      const double se_pow = std::sqrt(std::max(m2 - m1 * m1, 0.0) / static_cast<double>(options.weight_samples));
      row.w_weighted_se = row.w_weighted > 0.0 ? se_pow / (r * std::pow(row.w_weighted, r - 1.0)) : 0.0;

      std::vector<double> vor(n, 0.0);
      for (Eigen::Index i = 0; i < cost.rows(); ++i) {
        Eigen::Index j;
        cost.row(i).minCoeff(&j);
        vor[static_cast<std::size_t>(j)] += 1.0 / static_cast<double>(options.test_size);
      }
      double vs = std::accumulate(vor.begin(), vor.end(), 0.0);
      for (auto& w : vor) w /= vs;
      row.w_voronoi = wasserstein_from_cost(ref_w, vor, cost, r);
      row.prediction = beta > 0.0 ? std::pow(std::log(static_cast<double>(n)), -beta)
                                  : std::numeric_limits<double>::quiet_NaN();
      row.dominated = row.w_weighted <= row.w_uniform + 4.0 * row.w_weighted_se;
      if (!row.dominated) ++table.domination_failures;
      table.rows.push_back(row);
    }
  }
  std::vector<double> x, yw, yu;
  for (std::size_t n : options.n_list) {
    double sw = 0.0, su = 0.0;
    for (const auto& row : table.rows)
      if (row.n == n) {
        sw += row.w_weighted;
        su += row.w_uniform;
      }
    x.push_back(std::log(std::log(static_cast<double>(n))));
    yw.push_back(std::log(sw / static_cast<double>(options.reps)));
    yu.push_back(std::log(su / static_cast<double>(options.reps)));
  }
  if (x.size() >= 2) {
    table.slope_weighted = linear_fit(x, yw).slope;
    table.slope_uniform = linear_fit(x, yu).slope;
  }
  return table;
}

}  // namespace roughball
