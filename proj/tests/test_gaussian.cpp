#include <cmath>
#include <random>

#include "doctest.h"
#include "roughball/error.hpp"
#include "roughball/gaussian.hpp"
#include "support.hpp"

using namespace roughball;

TEST_CASE("covariance closed forms") {
  const auto bm = CovarianceModel::brownian(1);
  CHECK(bm.covariance(0.3, 0.7) == 0.3);
  const auto half = CovarianceModel::fbm(0.5, 1);
  for (double s : {0.0, 0.1, 0.37, 0.9})
    for (double t : {0.05, 0.5, 1.0}) CHECK(std::abs(half.covariance(s, t) - bm.covariance(s, t)) <= 1e-14);
  const auto f = CovarianceModel::fbm(0.4, 2);
  CHECK(f.covariance(1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f.rho() == doctest::Approx(1.25));
  CHECK_THROWS_AS(bm.covariance(0.5, 1.5), InvalidArgument);
  CHECK_THROWS_AS(CovarianceModel::fbm(0.3, 1), InvalidArgument);
  CHECK_THROWS_AS(CovarianceModel::fbm(0.6, 1), InvalidArgument);
}

TEST_CASE("custom sigma2 table interpolates and validates") {
  std::vector<double> tau, s2;
  for (int k = 0; k <= 20; ++k) {
    tau.push_back(k / 20.0);
    s2.push_back(std::pow(k / 20.0, 0.9));
  }
  const auto m = CovarianceModel::custom(tau, s2, 1.0 / 0.9, 1);
  CHECK(m.sigma2(0.5) == doctest::Approx(std::pow(0.5, 0.9)).epsilon(1e-12));
  CHECK(m.sigma2(0.52) == doctest::Approx(std::pow(0.52, 0.9)).epsilon(1e-3));
  CHECK_THROWS_AS(CovarianceModel::custom({0, 0.5, 1}, {0, 0.5, 1}, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(CovarianceModel::custom({0, 0.2, 0.5, 1}, {0.1, 0.2, 0.5, 1}, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(CovarianceModel::custom({0, 0.2, 0.5, 1}, {0, 0.2, 0.5, 1}, 1.6, 1), InvalidArgument);
  CHECK_THROWS_AS(CovarianceModel::custom({0, 0.2, 0.5, 0.8}, {0, 0.2, 0.5, 0.8}, 1.0, 1), InvalidArgument);
}

TEST_CASE("brownian increments have variance dt") {
  const auto model = CovarianceModel::brownian(1);
  const PathSampler sampler(model, uniform_grid(1.0, 2));
  constexpr int n = 100000;
  double sum = 0, sumsq = 0, quart = 0;
  Eigen::MatrixXd v;
  for (int i = 0; i < n; ++i) {
    sampler.sample_into(17, i, v);
    const double dx = v(1, 0);
    sum += dx;
    sumsq += dx * dx;
    quart += dx * dx * dx * dx;
  }
  const double var = sumsq / n - (sum / n) * (sum / n);
  const double se = std::sqrt((quart / n - (sumsq / n) * (sumsq / n)) / n);
  CHECK(std::abs(var - 0.5) <= 4 * se);
}

namespace {

struct CovarianceCheck {
  double max_error = 0.0;
  double max_z = 0.0;  // worst |error| / standard error over all entries
};

CovarianceCheck check_covariance(const CovarianceModel& model, const std::vector<double>& times,
                                 SamplerBackend backend, int n) {
  const PathSampler sampler(model, times, backend);
  const auto m = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd acc_sq = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd v;
  for (int i = 0; i < n; ++i) {
    sampler.sample_into(3, static_cast<std::uint64_t>(i), v);
    const Eigen::MatrixXd outer = v.col(0) * v.col(0).transpose();
    acc += outer;
    acc_sq += outer.cwiseProduct(outer);
  }
  acc /= n;
  acc_sq /= n;
  CovarianceCheck out;
  for (Eigen::Index i = 1; i < m; ++i)
    for (Eigen::Index j = 1; j < m; ++j) {
      const double err = std::abs(acc(i, j) - model.covariance(times[i], times[j]));
      const double se = std::sqrt((acc_sq(i, j) - acc(i, j) * acc(i, j)) / n);
      out.max_error = std::max(out.max_error, err);
      out.max_z = std::max(out.max_z, err / se);
    }
  return out;
}

}  // namespace

TEST_CASE("fbm sample covariance matches the analytic Gram matrix") {
  const auto model = CovarianceModel::fbm(0.4, 1);
  const auto times = uniform_grid(1.0, 15);
  for (auto backend : {SamplerBackend::cholesky, SamplerBackend::circulant}) {
    const auto c = check_covariance(model, times, backend, 100000);
    MESSAGE(to_string(backend) << ": max |sample - analytic| = " << c.max_error << ", max z = " << c.max_z);
    CHECK(c.max_z <= 4.5);
    CHECK(c.max_error <= 2e-2);
  }
}

TEST_CASE("sampler backends and determinism") {
  const auto times = uniform_grid(1.0, 64);
  const PathSampler bm(CovarianceModel::brownian(2), times, SamplerBackend::cholesky);
  const PathSampler half(CovarianceModel::fbm(0.5, 2), times, SamplerBackend::cholesky);
  const PathSampler indep(CovarianceModel::brownian(2), times);
  CHECK(indep.backend() == SamplerBackend::independent);
  CHECK(bm.sample(5, 9).values == half.sample(5, 9).values);
  CHECK(bm.sample(5, 9).values == indep.sample(5, 9).values);

  const auto model = CovarianceModel::fbm(0.4, 2);
  const auto a = simulate_paths(model, times, 16, 123, 1);
  const auto b = simulate_paths(model, times, 16, 123, 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].values == b[i].values);
    CHECK(a[i].values.row(0).isZero(0.0));
    CHECK(a[i].index == i);
  }
  CHECK(!(a[0].values == a[1].values));

  const PathSampler big(model, uniform_grid(1.0, 8192));
  CHECK(big.backend() == SamplerBackend::circulant);
  CHECK(big.fallback_note().empty());
  CHECK(PathSampler(model, uniform_grid(1.0, 4096)).backend() == SamplerBackend::cholesky);
  CHECK_THROWS_AS(PathSampler(model, {0.0, 0.1, 0.5}, SamplerBackend::circulant), InvalidArgument);
  CHECK_THROWS_AS(PathSampler(model, {0.1, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(PathSampler(model, times, SamplerBackend::independent), InvalidArgument);
}

TEST_CASE("rho-variation audit") {
  const auto bm = CovarianceModel::brownian(1);
  const auto full = rho_variation_audit(bm, 0.0, 1.0, 6);
  CHECK(full.estimate == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(full.fitted_m == doctest::Approx(1.0).epsilon(1e-12));
  const auto part = rho_variation_audit(bm, 0.2, 0.45, 5);
  CHECK(part.estimate == doctest::Approx(0.25).epsilon(1e-13));

  const auto f = rho_variation_audit(CovarianceModel::fbm(0.4, 1), 0.0, 1.0, 6);
  MESSAGE("fbm(0.4) rho-variation by level: " << f.by_level.back() << ", fitted M " << f.fitted_m);
  CHECK(std::isfinite(f.fitted_m));
  CHECK(f.fitted_m >= 1.0);
  for (std::size_t l = 1; l < f.by_level.size(); ++l) CHECK(f.by_level[l] >= f.by_level[l - 1] - 1e-12);
}

TEST_CASE("sigma2 conditions audit") {
  const auto f = sigma_conditions_audit(CovarianceModel::fbm(0.4, 1), 1.0);
  CHECK(f.doubling_constant == doctest::Approx(std::pow(2.0, 0.8)).epsilon(1e-12));
  CHECK(f.doubling_pass);
  CHECK(f.c3 == doctest::Approx(0.192).epsilon(1e-12));
  CHECK(f.c1 == doctest::Approx(1.0));
  CHECK(f.c2 == doctest::Approx(1.0));
  CHECK(f.envelope_pass);
  CHECK(f.curvature == "concave");
  CHECK(!f.curvature_note.empty());

  const auto b = sigma_conditions_audit(CovarianceModel::brownian(1), 0.5);
  CHECK(b.c3 == 0.0);
  CHECK(b.all_pass);
  CHECK(b.curvature == "linear");

  for (double h : {0.34, 0.4, 0.45, 0.5}) CHECK(sigma_conditions_audit(CovarianceModel::fbm(h, 1), 1.0).doubling_pass);
}

TEST_CASE("Schauder coefficients of deterministic paths") {
  PathSample line;
  line.times = uniform_grid(1.0, 8);
  line.values.resize(9, 1);
  PathSample square = line;
  for (int k = 0; k <= 8; ++k) {
    line.values(k, 0) = line.times[k];
    square.values(k, 0) = line.times[k] * line.times[k];
  }
  for (int p = 0; p <= 2; ++p)
    for (int m = 1; m <= (1 << p); ++m) CHECK(std::abs(schauder_coefficient(line, p, m)(0)) <= 1e-15);
  CHECK(schauder_coefficient(square, 0, 1)(0) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(schauder_coefficient(square, 3, 1), InvalidArgument);
  CHECK_THROWS_AS(schauder_coefficient(square, 1, 3), InvalidArgument);
}

TEST_CASE("wavelet variance and correlation") {
  for (int p = 0; p <= 8; ++p) {
    CHECK(wavelet_variance(CovarianceModel::brownian(1), p) == doctest::Approx(1.0).epsilon(1e-13));
    const double h = 0.4;
    CHECK(wavelet_variance(CovarianceModel::fbm(h, 1), p) ==
          doctest::Approx(std::pow(2.0, p * (1 - 2 * h)) * (std::pow(2.0, 2 - 2 * h) - 1)).epsilon(1e-12));
  }
  const auto bm = wavelet_cross_correlation(CovarianceModel::brownian(1), 4, 2, 7);
  CHECK(std::abs(bm.correlation) <= 1e-15);
  const auto f = wavelet_cross_correlation(CovarianceModel::fbm(0.4, 1), 6, 10, 20);
  CHECK(f.decay_target == doctest::Approx(std::pow(9.0, 0.8 - 3.0)));
  CHECK(std::abs(f.correlation) <= f.decay_target);
  CHECK(std::isnan(wavelet_cross_correlation(CovarianceModel::fbm(0.4, 1), 3, 2, 3).decay_target));
}

TEST_CASE("Cameron-Martin norm on grids") {
  const auto times = uniform_grid(1.0, 32);
  const auto bm = CovarianceModel::brownian(1);
  const auto line = testing_support::line_path(times, Eigen::VectorXd::Constant(1, 1.0));
  const auto r = cameron_martin_norm(bm, line);
  CHECK(r.norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.rate == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cameron_martin_norm(bm, scale(line, 2.0)).norm == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(cameron_martin_norm(bm, CMPath(times, Eigen::MatrixXd::Zero(33, 1))).norm == 0.0);

  // Piecewise-linear H^1 norm oracle on a non-uniform grid.
  std::mt19937_64 gen(2);
  std::vector<double> t{0.0, 0.1, 0.15, 0.4, 0.8, 1.0};
  Eigen::MatrixXd v(6, 2);
  v.row(0).setZero();
  std::normal_distribution<double> n;
  for (int k = 1; k < 6; ++k) v.row(k) << n(gen), n(gen);
  double energy = 0;
  for (int k = 0; k < 5; ++k) energy += (v.row(k + 1) - v.row(k)).squaredNorm() / (t[k + 1] - t[k]);
  CHECK(cameron_martin_norm(CovarianceModel::brownian(2), CMPath(t, v)).norm ==
        doctest::Approx(std::sqrt(energy)).epsilon(1e-12));

  const CameronMartinGeometry geom(CovarianceModel::fbm(0.4, 2), times);
  Eigen::MatrixXd z(32, 2);
  for (int k = 0; k < 32; ++k) z.row(k) << n(gen), n(gen);
  CHECK(geom.norm(geom.from_coefficients(z)) == doctest::Approx(z.norm()).epsilon(1e-10));

  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(33, 1);
  CHECK_THROWS_AS(cameron_martin_norm(bm, CMPath(times, bad)), InvalidArgument);
  CHECK_THROWS_AS(CameronMartinGeometry(bm, {0.0, 0.5, 0.5 + 1e-15, 1.0}), NumericalError);
}

TEST_CASE("wavelet variance Monte Carlo") {
  const auto times = dyadic_grid(1.0, 8);
  for (const auto& model : {CovarianceModel::brownian(2), CovarianceModel::fbm(0.4, 2)}) {
    const auto one = estimate_wavelet_variances(model, times, 6, 4000, 21, 1);
    const auto many = estimate_wavelet_variances(model, times, 6, 4000, 21, 5);
    REQUIRE(one.size() == 7);
    for (std::size_t p = 0; p < one.size(); ++p) {
      CHECK(one[p].mc == many[p].mc);
      CHECK(std::abs(one[p].z) <= 4.0);
      CHECK(one[p].exact == wavelet_variance(model, static_cast<int>(p)));
    }
  }
  CHECK_THROWS_AS(estimate_wavelet_variances(CovarianceModel::brownian(1), dyadic_grid(1.0, 4), 4, 10, 0),
                  InvalidArgument);
}
