#include <cmath>
#include <random>

#include "doctest.h"
#include "roughball/error.hpp"
#include "roughball/quant.hpp"

using namespace roughball;

namespace {

double phi_density(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// Simpson integral of f over [a, b].
template <class F>
double simpson(F f, double a, double b, int m = 20000) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

// One-dimensional paths x t on [0, 1], lifted.
GridRoughPath line(double slope, int steps = 4) {
  const auto times = uniform_grid(1.0, static_cast<std::size_t>(steps));
  Eigen::MatrixXd v(steps + 1, 1);
  for (int k = 0; k <= steps; ++k) v(k, 0) = slope * times[static_cast<std::size_t>(k)];
  return lift_piecewise_linear(CMPath(times, v));
}

}  // namespace

TEST_CASE("level-1 path recovers the lifted path") {
  const auto model = CovarianceModel::brownian(2);
  const auto paths = sample_lifted_paths(model, dyadic_grid(1.0, 4), 3, 1);
  for (const auto& p : paths) {
    const auto again = lift_piecewise_linear(level1_path(p));
    CHECK(holder_distance(p, again, 0.4, PairSet::all) <= 1e-12);
  }
}

TEST_CASE("Cameron-Martin mesh and greedy cover") {
  const auto model = CovarianceModel::brownian(1);
  const auto times = dyadic_grid(1.0, 5);
  const Metric metric{0.38, PairSet::all};

  const auto trivial = cameron_martin_mesh(model, times, 0.0, 20);
  const auto c0 = greedy_cover(trivial.lifts, metric, {0.0, 0.1});
  CHECK(c0[0].count == 1);
  CHECK(c0[1].count == 1);

  const auto mesh = cameron_martin_mesh(model, times, 1.0, 128);
  const CameronMartinGeometry geo(model, times);
  std::size_t boundary = 0;
  for (const auto& h : mesh.paths) {
    const double nh = geo.norm(h);
    CHECK(nh <= 1.0 + 1e-9);
    boundary += std::abs(nh - 1.0) <= 1e-9 ? 1 : 0;
  }
  CHECK(boundary == 64);

  std::vector<double> eps;
  for (double e = 0.05; e <= 2.0; e *= 1.3) eps.push_back(e);
  const auto covers = greedy_cover(mesh.lifts, metric, eps);
  for (std::size_t k = 0; k < covers.size(); ++k) {
    CHECK(covers[k].certificate <= covers[k].eps);
    double worst = 0.0;
    for (const auto& p : mesh.lifts) {
      double best = 1e300;
      for (auto c : covers[k].centers) best = std::min(best, metric(p, mesh.lifts[c]));
      worst = std::max(worst, best);
    }
    CHECK(worst == doctest::Approx(covers[k].certificate));
    if (k > 0) CHECK(covers[k].count <= covers[k - 1].count);
  }
  CHECK(covers.front().count > covers.back().count);
  CHECK_THROWS_AS(greedy_cover({}, metric, {0.1}), InvalidArgument);
}

TEST_CASE("entropy bounds arithmetic") {
  const double eps = 0.3;
  const double b1 = std::pow(eps, -2.0), b2 = std::pow(2.0 * eps, -2.0);
  const auto at = entropy_bounds(b1, b2, std::sqrt(2.0 * b1), eps);
  CHECK(at.upper == doctest::Approx(2.0 * b1).epsilon(1e-14));
  const auto zero = entropy_bounds(b1, b2, 0.0, eps);
  CHECK(zero.lower == doctest::Approx(b2 - b1).epsilon(1e-10));
  CHECK(zero.lower <= 0.0);
  const auto one = entropy_bounds(b1, b2, 2.0, eps);
  CHECK(one.lower_unit_scale == doctest::Approx(0.15));
  CHECK(one.upper_unit_scale == doctest::Approx(0.3));
  CHECK_THROWS_AS(entropy_bounds(INFINITY, b2, 1.0, eps), NumericalError);
}

TEST_CASE("small-ball inverse") {
  std::vector<double> eps, p;
  for (double e = 0.05; e < 3.0; e *= 1.1) {
    eps.push_back(e);
    p.push_back(std::exp(-1.0 / e));
  }
  for (int n : {1, 4, 16, 64}) {
    CHECK(std::abs(sbp_inverse(eps, p, std::log(2.0 * n)) - 1.0 / std::log(2.0 * n)) <= 1e-12);
  }
  CHECK_THROWS_AS(sbp_inverse(eps, p, 100.0), NumericalError);
  auto noisy = p;
  std::swap(noisy[10], noisy[11]);
  CHECK(sbp_inverse(eps, noisy, 2.0) > 0.0);
}

TEST_CASE("Lloyd on the static Gaussian") {
  // Oracle: the symmetric two-point fixed point c = E[X | X > 0] and its distortion.
  const double c_star = simpson([](double x) { return x * phi_density(x); }, 0.0, 12.0) / 0.5;
  const double d_star = 2.0 * simpson([&](double x) { return (x - c_star) * (x - c_star) * phi_density(x); }, 0.0, 12.0);
  CHECK(c_star == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-10));
  CHECK(d_star == doctest::Approx(1.0 - 2.0 / M_PI).epsilon(1e-10));

  std::mt19937_64 gen(5);
  std::normal_distribution<double> g;
  std::vector<double> x(200000);
  for (auto& v : x) v = g(gen);
  LloydOptions o;
  o.n = 2;
  o.update = CenterUpdate::mean;
  o.seed = 3;
  const auto cb = lloyd_scalar(x, o);
  REQUIRE(cb.centers.size() == 2);
  CHECK(std::abs(cb.centers[0] + c_star) <= 1e-2);
  CHECK(std::abs(cb.centers[1] - c_star) <= 1e-2);
  CHECK(std::abs(cb.distortion - d_star) <= 1e-2);

  LloydOptions one;
  one.n = 1;
  const auto cb1 = lloyd_scalar(x, one);
  CHECK(std::abs(cb1.centers[0]) <= 0.02);
  CHECK(std::abs(cb1.distortion - 1.0) <= 0.02);

  LloydOptions all;
  all.n = 50;
  const std::vector<double> few(x.begin(), x.begin() + 50);
  CHECK(lloyd_scalar(few, all).distortion == 0.0);

  LloydOptions dup;
  dup.n = 3;
  const auto cbd = lloyd_scalar({0.0, 0.0, 0.0, 0.0, 10.0}, dup);
  CHECK(cbd.distortion == 0.0);
}

TEST_CASE("Lloyd on paths: embedding, monotone distortion") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> g;
  std::vector<double> x(300);
  std::vector<GridRoughPath> lines;
  for (auto& v : x) {
    v = g(gen);
    lines.push_back(line(v));
  }
  const Metric metric{0.4, PairSet::all};
  CHECK(metric(lines[0], lines[1]) == doctest::Approx(std::abs(x[0] - x[1])).epsilon(1e-13));
  LloydOptions o;
  o.n = 3;
  o.seed = 2;
  const auto path_cb = lloyd_codebook(lines, metric, o);
  const auto scalar_cb = lloyd_scalar(x, o);
  CHECK(path_cb.distortion == doctest::Approx(scalar_cb.distortion).epsilon(1e-9));

  const auto model = CovarianceModel::brownian(2);
  const auto paths = sample_lifted_paths(model, dyadic_grid(1.0, 5), 200, 4);
  const Metric m2{0.4, PairSet::dyadic};
  o.n = 6;
  const auto cb = lloyd_codebook(paths, m2, o);
  for (std::size_t k = 1; k < cb.history.size(); ++k) CHECK(cb.history[k] <= cb.history[k - 1] + 1e-12);
  CHECK(cb.centers.size() == 6);
  o.update = CenterUpdate::mean;
  const auto fast = lloyd_codebook(paths, m2, o);
  CHECK(fast.distortion > 0.0);
  o.update = CenterUpdate::medoid;
  o.n = 200;
  CHECK(lloyd_codebook(paths, m2, o).distortion == 0.0);
}

TEST_CASE("quantization error with the trivial center") {
  const auto model = CovarianceModel::brownian(2);
  const auto times = dyadic_grid(1.0, 5);
  const auto fresh = sample_lifted_paths(model, times, 500, 8);
  const Metric metric{0.4, PairSet::dyadic};
  std::vector<double> norms;
  double m2 = 0.0;
  for (const auto& p : fresh) {
    norms.push_back(holder_norm(p, 0.4, PairSet::dyadic));
    m2 += norms.back() * norms.back();
  }
  NormSpec spec;
  std::vector<double> eps;
  for (double e = 0.3; e < 6.0; e *= 1.05) eps.push_back(e);
  const auto curve = curve_from_norms(norms, eps, spec, "brownian", 8);
  const auto q = quantization_error({trivial_path(times, 2)}, 1, fresh, 2.0, metric, curve);
  CHECK(q.e_hat == doctest::Approx(std::sqrt(m2 / 500.0)).epsilon(1e-12));
  CHECK(q.proven_bound < q.lower_bound);
  CHECK(q.holds);
}

TEST_CASE("empirical measures and Wasserstein") {
  const auto model = CovarianceModel::brownian(2);
  const auto times = dyadic_grid(1.0, 4);
  const Metric metric{0.4, PairSet::dyadic};
  const auto w = sample_lifted_paths(model, times, 4000, 12);

  auto single = std::make_shared<const std::vector<GridRoughPath>>(std::vector<GridRoughPath>{w[0]});
  const auto em1 = empirical_measures(single, w, metric);
  CHECK(em1.weighted.weights == std::vector<double>{1.0});
  CHECK(em1.uniform.weights == std::vector<double>{1.0});

  // W^2 is the central reflection of W^1 in level 1.
  const auto reflected = lift_piecewise_linear(scale(level1_path(w[1]), -1.0));
  auto pair = std::make_shared<const std::vector<GridRoughPath>>(std::vector<GridRoughPath>{w[1], reflected});
  const auto em2 = empirical_measures(pair, w, metric);
  const double se = std::sqrt(0.25 / 4000.0);
  CHECK(std::abs(em2.weighted.weights[0] - 0.5) <= 4.0 * se);
  CHECK(em2.weighted.weights[0] + em2.weighted.weights[1] == doctest::Approx(1.0).epsilon(1e-15));

  const DiscreteMeasure dx = uniform_measure(single);
  const DiscreteMeasure dy =
      uniform_measure(std::make_shared<const std::vector<GridRoughPath>>(std::vector<GridRoughPath>{w[2]}));
  CHECK(wasserstein(dx, dy, 2.0, metric) == doctest::Approx(metric(w[0], w[2])).epsilon(1e-12));
  CHECK(wasserstein(em2.weighted, em2.weighted, 1.0, metric) <= 1e-12);

  // Reference-cloud Voronoi masses are the optimal reweighting of fixed atoms.
  auto cloud = std::make_shared<const std::vector<GridRoughPath>>(w.begin() + 100, w.begin() + 300);
  auto atoms = std::make_shared<const std::vector<GridRoughPath>>(w.begin() + 10, w.begin() + 18);
  const auto ref = uniform_measure(cloud);
  const auto own = empirical_measures(atoms, *cloud, metric);
  double mean_min = 0.0;
  for (const auto& p : *cloud) {
    double d = 0.0;
    nearest_atom(p, *atoms, metric, &d);
    mean_min += d * d / 200.0;
  }
  const double w_vor = wasserstein(ref, own.weighted, 2.0, metric);
  CHECK(w_vor == doctest::Approx(std::sqrt(mean_min)).epsilon(1e-10));
  CHECK(w_vor <= wasserstein(ref, own.uniform, 2.0, metric) + 1e-12);
  const auto other = empirical_measures(atoms, std::vector<GridRoughPath>(w.begin() + 400, w.begin() + 500), metric);
  CHECK(w_vor <= wasserstein(ref, other.weighted, 2.0, metric) + 1e-12);

  // Atoms equal to the cloud: zero distance.
  CHECK(wasserstein(ref, uniform_measure(cloud), 2.0, metric) <= 1e-12);

  DiscreteMeasure bad = dx;
  bad.weights = {0.9};
  CHECK_THROWS_AS(wasserstein(bad, dy, 1.0, metric), InvalidArgument);
}

TEST_CASE("empirical rate experiment smoke run") {
  RateOptions o;
  o.n_list = {2, 4, 8};
  o.reps = 2;
  o.weight_samples = 300;
  o.test_size = 150;
  o.times = dyadic_grid(1.0, 4);
  const Metric metric{0.4, PairSet::dyadic};
  const auto t = empirical_rate_experiment(CovarianceModel::brownian(2), metric, o, 1);
  CHECK(t.rows.size() == 6);
  for (const auto& row : t.rows) {
    CHECK(row.w_voronoi <= row.w_uniform + 1e-12);
    CHECK(row.w_weighted >= row.w_voronoi - 1e-12);
  }
  o.threads = 3;
  const auto t3 = empirical_rate_experiment(CovarianceModel::brownian(2), metric, o, 1);
  for (std::size_t k = 0; k < t.rows.size(); ++k) CHECK(t3.rows[k].w_weighted == t.rows[k].w_weighted);
  o.n_list = {4, 2};
  CHECK_THROWS_AS(empirical_rate_experiment(CovarianceModel::brownian(2), metric, o, 1), InvalidArgument);
}
