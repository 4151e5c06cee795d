#include <cmath>

#include "doctest.h"
#include "roughball/error.hpp"
#include "roughball/inequalities.hpp"

using namespace roughball;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Composite Simpson rule for the bivariate normal density over [-a, a] x [-b, b].
double bivariate_box_simpson(double rho, double a, double b, int m = 600) {
  const double hx = 2.0 * a / m, hy = 2.0 * b / m;
  const double c = 1.0 / (2.0 * M_PI * std::sqrt(1.0 - rho * rho));
  auto w = [&](int k) { return k == 0 || k == m ? 1.0 : (k % 2 ? 4.0 : 2.0); };
  double s = 0.0;
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j) {
      const double x = -a + i * hx, y = -b + j * hy;
      s += w(i) * w(j) * c * std::exp(-(x * x - 2 * rho * x * y + y * y) / (2.0 * (1.0 - rho * rho)));
    }
  return s * hx * hy / 9.0;
}

}  // namespace

TEST_CASE("verdict rule") {
  CHECK(make_report("x", Claim::at_least, {0.5}, {0.4}, 0.01, 10).verdict == Verdict::holds);
  CHECK(make_report("x", Claim::at_least, {0.5}, {0.52}, 0.01, 10).verdict == Verdict::holds_within_noise);
  CHECK(make_report("x", Claim::at_least, {0.5}, {0.541}, 0.01, 10).verdict == Verdict::violated);
  CHECK(make_report("x", Claim::at_most, {0.541}, {0.5}, 0.01, 10).verdict == Verdict::violated);
  CHECK(make_report("x", Claim::at_least, {0.5}, {0.5 + 1e-11}, 0.0, 0).verdict == Verdict::holds_within_noise);
  CHECK(make_report("x", Claim::at_least, {0.5}, {0.5 + 1e-9}, 0.0, 0).verdict == Verdict::violated);
  CHECK(make_report("x", Claim::equal, {0.5}, {0.5 + 1e-11}, 0.0, 0).verdict == Verdict::holds);
  const auto j = to_json(make_report("x", Claim::at_most, {0.1}, {0.2}, 0.0, 0));
  CHECK(j["verdict"] == "holds");
  CHECK(j["claim"] == "<=");
}

TEST_CASE("static Anderson and Cameron-Martin analogues") {
  const Eigen::VectorXd one = Eigen::VectorXd::Constant(1, 1.0);
  const auto a = check_anderson_gaussian(one, 1.0);
  CHECK(a.lhs.value == doctest::Approx(phi(2.0) - phi(0.0)).epsilon(1e-14));
  CHECK(a.lhs.value == doctest::Approx(0.47725).epsilon(1e-4));
  CHECK(a.rhs.value == doctest::Approx(0.68269).epsilon(1e-4));
  CHECK(a.verdict == Verdict::holds);
  const auto c = check_cameron_martin_gaussian(one, 1.0);
  CHECK(c.rhs.value == doctest::Approx(std::exp(-0.5) * (phi(1.0) - phi(-1.0))).epsilon(1e-14));
  CHECK(c.rhs.value == doctest::Approx(0.41408).epsilon(1e-4));
  CHECK(c.verdict == Verdict::holds);
  const auto zero = check_cameron_martin_gaussian(Eigen::VectorXd::Zero(3), 0.7);
  CHECK(zero.lhs.value == doctest::Approx(zero.rhs.value).epsilon(1e-15));
}

TEST_CASE("Sidak level one by quadrature") {
  Eigen::Matrix2d cov;
  cov << 1.0, 0.5, 0.5, 1.0;
  const Eigen::Vector2d eps(1.0, 1.0);
  const double oracle = bivariate_box_simpson(0.5, 1.0, 1.0);
  CHECK(std::abs(gaussian_box_probability(cov, eps) - oracle) <= 1e-9);
  const auto r = check_sidak_level1(cov, eps, SidakMethod::quadrature);
  CHECK(r.product.rhs.value == doctest::Approx(0.46607).epsilon(1e-4));
  CHECK(r.product.lhs.value > r.product.rhs.value);
  CHECK(r.product.verdict == Verdict::holds);
  CHECK(r.split.verdict == Verdict::holds);

  const Eigen::Vector2d eps2(0.4, 1.7);
  CHECK(std::abs(gaussian_box_probability(cov, eps2) - bivariate_box_simpson(0.5, 0.4, 1.7)) <= 1e-9);

  Eigen::Matrix3d diag = Eigen::Vector3d(1.0, 2.0, 0.5).asDiagonal();
  const auto ind = check_sidak_level1(diag, Eigen::Vector3d(0.3, 1.0, 2.0), SidakMethod::quadrature);
  CHECK(std::abs(ind.product.lhs.value - ind.product.rhs.value) <= 1e-8);
  CHECK(ind.product.margin >= -1e-10);

  Eigen::Matrix3d c3;
  c3 << 1.0, 0.6, -0.3, 0.6, 1.5, 0.2, -0.3, 0.2, 0.8;
  const auto r3 = check_sidak_level1(c3, Eigen::Vector3d(0.5, 1.0, 0.7), SidakMethod::quadrature);
  CHECK(r3.product.margin >= -1e-10);
  CHECK(r3.split.margin >= -1e-10);

  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(check_sidak_level1(bad, eps, SidakMethod::mc, 100, 1), InvalidArgument);
  CHECK_THROWS_AS(check_sidak_level1(Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Ones(4), SidakMethod::quadrature),
                  InvalidArgument);
}

TEST_CASE("Sidak level one by Monte Carlo") {
  Eigen::Matrix2d cov;
  cov << 1.0, 0.5, 0.5, 1.0;
  const Eigen::Vector2d eps(1.0, 1.0);
  const auto r = check_sidak_level1(cov, eps, SidakMethod::mc, 200000, 3, -1, 2);
  const double exact = gaussian_box_probability(cov, eps);
  CHECK(std::abs(r.product.lhs.value - exact) <= 4.0 * r.product.lhs.se);
  CHECK(r.product.verdict == Verdict::holds);
  CHECK(r.split.verdict == Verdict::holds);
  const auto again = check_sidak_level1(cov, eps, SidakMethod::mc, 200000, 3, -1, 1);
  CHECK(again.product.lhs.value == r.product.lhs.value);

  const auto ind = check_sidak_level1(Eigen::Matrix2d::Identity(), eps, SidakMethod::mc, 200000, 4);
  CHECK(std::abs(ind.split.lhs.value - ind.split.rhs.value) <= 4.0 * ind.split.difference_se);
}

TEST_CASE("Sidak level two on second chaos") {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  ChaosEvent bil;
  bil.kind = ChaosEvent::Kind::bilinear;
  bil.form = one;
  ChaosEvent lin;
  lin.kind = ChaosEvent::Kind::linear_x;
  lin.coefficients = Eigen::VectorXd::Ones(1);
  const auto r = check_sidak_level2(one, one, {bil, lin}, 1000000, 11, 1);
  CHECK(r.verdict != Verdict::violated);
  CHECK(r.lhs.value > r.rhs.value);
  CHECK_THROWS_AS(check_sidak_level2(one, one, {}, 10, 1), InvalidArgument);
}

TEST_CASE("third chaos exploration runs") {
  const auto rows = explore_third_chaos({0.1, 1.0, 10.0}, 20000, 5);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK(row.p_repeated >= 0.0);
    CHECK(row.p_independent <= 1.0);
  }
  CHECK(rows[0].p_repeated <= rows[2].p_repeated);
}

TEST_CASE("Borell shift") {
  const auto h = check_borell_shift(1, BorellSet::half_space, 0.0, 1.0, 0, 0);
  CHECK(h.lhs.value == doctest::Approx(phi(1.0)).epsilon(1e-14));
  CHECK(std::abs(h.lhs.value - h.rhs.value) <= 1e-12);
  CHECK(h.verdict == Verdict::holds);
  const auto z = check_borell_shift(4, BorellSet::half_space, 0.3, 0.0, 0, 0);
  CHECK(z.lhs.value == doctest::Approx(phi(0.3)).epsilon(1e-14));
  CHECK(std::abs(z.lhs.value - z.rhs.value) <= 1e-12);

  const auto box = check_borell_shift(2, BorellSet::box, 1.0, 0.5, 200000, 9);
  CHECK(box.verdict != Verdict::violated);
  const double pa = std::pow(std::erf(1.0 / std::sqrt(2.0)), 2);
  double lo = -10.0, hi = 10.0;
  for (int k = 0; k < 200; ++k) (phi(0.5 * (lo + hi)) < pa ? lo : hi) = 0.5 * (lo + hi);
  CHECK(box.rhs.value == doctest::Approx(phi(0.5 + lo)).epsilon(1e-12));
  const auto box0 = check_borell_shift(2, BorellSet::box, 1.0, 0.0, 200000, 9);
  CHECK(std::abs(box0.lhs.value - std::pow(std::erf(1.0 / std::sqrt(2.0)), 2)) <= 4.0 * box0.lhs.se);
  CHECK(box0.rhs.value == doctest::Approx(std::pow(std::erf(1.0 / std::sqrt(2.0)), 2)).epsilon(1e-12));
  CHECK_THROWS_AS(check_borell_shift(2, BorellSet::box, 1.0, -0.1, 10, 1), InvalidArgument);
}

TEST_CASE("rough-path Anderson and Cameron-Martin on brownian lifts") {
  const auto model = CovarianceModel::brownian(2);
  const auto times = dyadic_grid(1.0, 6);
  Eigen::MatrixXd hv = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()), 2);
  for (std::size_t k = 0; k < times.size(); ++k) hv(static_cast<Eigen::Index>(k), 0) = times[k];
  const CMPath h(times, hv);
  const CMPath zero(times, Eigen::MatrixXd::Zero(hv.rows(), 2));

  PathCheckOptions opts;
  opts.threads = 2;
  // h = 0: both events are the same event.
  const auto pilot = check_anderson(model, 0.4, zero, {1.0}, 2000, 21, opts);
  CHECK(pilot[0].lhs.value == pilot[0].rhs.value);
  CHECK(pilot[0].difference_se == 0.0);

  const std::vector<double> eps{1.2, 1.6, 2.2};
  const auto and_r = check_anderson(model, 0.4, h, eps, 4000, 22, opts);
  for (const auto& r : and_r) CHECK(r.verdict != Verdict::violated);
  const auto cm_r = check_cameron_martin(model, 0.4, h, eps, 4000, 22, {0.0, 0.25, 0.5}, opts);
  REQUIRE(cm_r.size() == 12);
  for (const auto& r : cm_r) CHECK(r.verdict != Verdict::violated);
  CHECK(cm_r[0].config["cm_norm"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  // a = 0 gives the rate of the full shift, so the corollary row matches the lemma row.
  CHECK(cm_r[3].rhs.value == doctest::Approx(cm_r[0].rhs.value));

  CHECK(rate_upper_estimate(model, h, 0.4, 0.0, opts) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rate_upper_estimate(model, h, 0.4, 1e6, opts) == 0.0);
  const double mid = rate_upper_estimate(model, h, 0.4, 0.3, opts);
  CHECK(mid > 0.0);
  CHECK(mid < 0.5);

  const auto first = check_anderson(model, 0.4, h, {1.6}, 300, 22, opts);
  opts.threads = 1;
  const auto second = check_anderson(model, 0.4, h, {1.6}, 300, 22, opts);
  CHECK(first[0].lhs.value == second[0].lhs.value);
}

TEST_CASE("rough-path Borell") {
  const auto model = CovarianceModel::brownian(2);
  const auto times = dyadic_grid(1.0, 5);
  const auto r = check_borell_rough(model, times, 0.4, 1.6, 0.5, 1500, 31);
  CHECK(r.verdict != Verdict::violated);
  CHECK(r.lhs.value >= r.config["p_a"].get<double>());
  CHECK(r.note.find("one-sided with mesh slack") != std::string::npos);
  const auto none = check_borell_rough(model, times, 0.4, 1.6, 0.0, 500, 31);
  CHECK(none.lhs.value == doctest::Approx(none.config["p_a"].get<double>()));
}
