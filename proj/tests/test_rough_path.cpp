#include <cmath>
#include <random>

#include "doctest.h"
#include "roughball/error.hpp"
#include "roughball/rough_path.hpp"
#include "support.hpp"

using namespace roughball;
using testing_support::brownian_path;
using testing_support::line_path;

namespace {

G2Element fold_steps(const GridRoughPath& rp, std::size_t i, std::size_t j) {
  G2Element acc = g2_unit(rp.dim());
  for (std::size_t k = i; k < j; ++k) acc = g2_multiply(acc, rp.step(k));
  return acc;
}

// Brute-force Hoelder distance straight from the definition.
double brute_distance(const GridRoughPath& x, const GridRoughPath& y, double alpha) {
  double best = 0.0;
  const auto& t = x.times();
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j) {
      const auto diff = g2_multiply(g2_inverse(fold_steps(x, i, j)), fold_steps(y, i, j));
      best = std::max(best, homogeneous_norm(diff) / std::pow(t[j] - t[i], alpha));
    }
  return best;
}

// int_{t_i}^{t_j} (z_r - z_{t_i}) (x) dh_r for piecewise-linear z and h.
Eigen::MatrixXd cross_integral(const CMPath& z, const CMPath& h, std::size_t i, std::size_t j) {
  const int d = z.dim();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = i; k < j; ++k) {
    const Eigen::VectorXd base = (z.values.row(static_cast<Eigen::Index>(k)) - z.values.row(static_cast<Eigen::Index>(i))).transpose();
    const Eigen::VectorXd dz = (z.values.row(static_cast<Eigen::Index>(k + 1)) - z.values.row(static_cast<Eigen::Index>(k))).transpose();
    const Eigen::VectorXd dh = (h.values.row(static_cast<Eigen::Index>(k + 1)) - h.values.row(static_cast<Eigen::Index>(k))).transpose();
    acc += base * dh.transpose() + 0.5 * dz * dh.transpose();
  }
  return acc;
}

}  // namespace

TEST_CASE("lift of a single line segment") {
  const Eigen::Vector3d v(1.0, -2.0, 0.5);
  const auto rp = lift_piecewise_linear(line_path({0.0, 1.0}, v));
  const auto inc = rp.increment(0, 1);
  CHECK((inc.level1() - v).norm() <= 1e-15);
  CHECK((inc.level2() - 0.5 * v * v.transpose()).norm() <= 1e-15);
}

TEST_CASE("lift of an L-shaped path has Levy area one half") {
  Eigen::MatrixXd v(3, 2);
  v << 0, 0, 1, 0, 1, 1;
  const auto rp = lift_piecewise_linear(CMPath({0.0, 0.5, 1.0}, v));
  const auto inc = rp.increment(0, 2);
  Eigen::Matrix2d expected;
  expected << 0.5, 1.0, 0.0, 0.5;
  CHECK((inc.level1() - Eigen::Vector2d(1, 1)).norm() <= 1e-15);
  CHECK((inc.level2() - expected).norm() <= 1e-15);
}

TEST_CASE("refining the grid keeps whole-interval increments") {
  std::mt19937_64 gen(4);
  const auto coarse = brownian_path(gen, 3, 16);
  std::vector<double> fine_times = uniform_grid(1.0, 64);
  Eigen::MatrixXd fine(65, 3);
  for (int k = 0; k <= 64; ++k) {
    const int cell = std::min(k / 4, 15);
    const double w = (k - 4.0 * cell) / 4.0;
    fine.row(k) = (1 - w) * coarse.values.row(cell) + w * coarse.values.row(cell + 1);
  }
  const auto a = lift_piecewise_linear(coarse);
  const auto b = lift_piecewise_linear(CMPath(fine_times, fine));
  CHECK(max_abs_difference(a.increment(0, 16), b.increment(0, 64)) <= 1e-13);
  CHECK(max_abs_difference(a.increment(3, 11), b.increment(12, 44)) <= 1e-13);
}

TEST_CASE("increments follow Chen's relation and the fold of steps") {
  std::mt19937_64 gen(7);
  const auto rp = lift_piecewise_linear(brownian_path(gen, 2, 128));
  CHECK(rp.increment(5, 5) == g2_unit(2));
  CHECK(max_abs_difference(rp.increment(0, 128), fold_steps(rp, 0, 128)) <= 1e-13);
  std::uniform_int_distribution<std::size_t> pick(0, 128);
  for (int rep = 0; rep < 200; ++rep) {
    std::size_t i = pick(gen), j = pick(gen);
    if (i > j) std::swap(i, j);
    CHECK(max_abs_difference(rp.increment(0, j), g2_multiply(rp.increment(0, i), rp.increment(i, j))) <= 1e-13);
  }
  CHECK_THROWS_AS(rp.increment(3, 2), InvalidArgument);
  CHECK_THROWS_AS(rp.increment(0, 129), InvalidArgument);
}

TEST_CASE("dyadic table agrees with prefix increments") {
  std::mt19937_64 gen(17);
  const auto rp = lift_piecewise_linear(brownian_path(gen, 2, 64));
  REQUIRE(rp.dyadic_depth() == 6);
  for (int level = 0; level <= 6; ++level) {
    const std::size_t width = std::size_t{64} >> level;
    for (std::size_t m = 0; m < (std::size_t{1} << level); ++m) {
      const auto inc = rp.increment(m * width, (m + 1) * width);
      const double* raw = rp.raw_dyadic(level, m);
      for (std::size_t k = 0; k < inc.raw().size(); ++k) CHECK(std::abs(raw[k] - inc.raw()[k]) <= 1e-13);
    }
  }
}

TEST_CASE("geometric defect of lifts, translations and corrupted paths") {
  std::mt19937_64 gen(9);
  const auto x = brownian_path(gen, 2, 64);
  const auto h = brownian_path(gen, 2, 64);
  const auto rp = lift_piecewise_linear(x);
  CHECK(geometric_defect(rp) <= 1e-12);
  CHECK(geometric_defect(translate(rp, h)) <= 1e-12);

  std::vector<G2Element> steps;
  for (std::size_t k = 0; k < rp.num_steps(); ++k) steps.push_back(rp.step(k));
  steps[10].level2()(0, 0) += 0.1;
  CHECK(geometric_defect(GridRoughPath(rp.times(), steps)) >= 0.1 - 1e-12);
}

TEST_CASE("Hoelder distance basics") {
  std::mt19937_64 gen(13);
  const auto rp = lift_piecewise_linear(brownian_path(gen, 2, 32));
  CHECK(holder_distance(rp, rp, 0.4, PairSet::all) == 0.0);

  const auto line = lift_piecewise_linear(line_path(uniform_grid(1.0, 16), Eigen::Vector2d(1, 0)));
  const auto detail = holder_distance_detail(trivial_path(line.times(), 2), line, 0.4, PairSet::all);
  CHECK(detail.value == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(detail.s_index == 0);
  CHECK(detail.t_index == 16);

  std::vector<G2Element> dilated;
  for (std::size_t k = 0; k < rp.num_steps(); ++k) dilated.push_back(g2_dilate(rp.step(k), 2.0));
  const GridRoughPath scaled(rp.times(), dilated);
  CHECK(holder_norm(scaled, 0.4, PairSet::all) ==
        doctest::Approx(2.0 * holder_norm(rp, 0.4, PairSet::all)).epsilon(1e-12));
}

TEST_CASE("Hoelder distance matches brute force and dyadic pairs bound it below") {
  std::mt19937_64 gen(31);
  for (int rep = 0; rep < 5; ++rep) {
    const auto x = lift_piecewise_linear(brownian_path(gen, 2, 32));
    const auto y = lift_piecewise_linear(brownian_path(gen, 2, 32));
    const double all = holder_distance(x, y, 0.4, PairSet::all);
    CHECK(all == doctest::Approx(brute_distance(x, y, 0.4)).epsilon(1e-12));
    CHECK(holder_distance(x, y, 0.4, PairSet::dyadic) <= all + 1e-12);
    CHECK(holder_distance(y, x, 0.4, PairSet::all) == doctest::Approx(all).epsilon(1e-10));
  }
}

TEST_CASE("triangle inequality constant of the Hoelder distance") {
  std::mt19937_64 gen(41);
  double worst = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const auto x = lift_piecewise_linear(brownian_path(gen, 2, 32));
    const auto y = lift_piecewise_linear(brownian_path(gen, 2, 32));
    const auto z = lift_piecewise_linear(brownian_path(gen, 2, 32));
    const double lhs = holder_distance(x, z, 0.4, PairSet::all);
    const double rhs = holder_distance(x, y, 0.4, PairSet::all) + holder_distance(y, z, 0.4, PairSet::all);
    worst = std::max(worst, lhs / rhs);
  }
  MESSAGE("worst d(x,z) / (d(x,y) + d(y,z)) = " << worst);
  CHECK(worst < 2.0);
}

TEST_CASE("dyadic discretisation bound dominates the grid norm") {
  const auto times = dyadic_grid(1.0, 6);
  const auto line = lift_piecewise_linear(line_path(times, Eigen::Vector2d(1, 0)));
  const auto b = dyadic_holder_bound(line, 0.4, 0.5, 6);
  CHECK(b.value >= 1.0);
  CHECK(b.note == "grid-resolution truncation");
  CHECK(dyadic_holder_bound(trivial_path(times, 2), 0.4, 0.25, 6).value == 0.0);
  CHECK_THROWS_AS(dyadic_holder_bound(line, 0.4, 0.3, 6), InvalidArgument);
  CHECK_THROWS_AS(dyadic_holder_bound(line, 0.4, 1.0, 6), InvalidArgument);
  CHECK_THROWS_AS(dyadic_holder_bound(lift_piecewise_linear(line_path(uniform_grid(1.0, 12), Eigen::Vector2d(1, 0))),
                                      0.4, 0.5, 2),
                  InvalidArgument);

  std::mt19937_64 gen(51);
  double lo = 1e300, hi = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto rp = lift_piecewise_linear(brownian_path(gen, 2, 1024));
    const double exact = holder_norm(rp, 0.4, PairSet::all);
    const double bound = dyadic_holder_bound(rp, 0.4, 0.5, 10).value;
    lo = std::min(lo, bound / exact);
    hi = std::max(hi, bound / exact);
  }
  MESSAGE("bound / exact in [" << lo << ", " << hi << "]");
  CHECK(lo >= 1.0);
  CHECK(hi <= 50.0);
}

TEST_CASE("translation by lines and of the trivial path") {
  const auto times = uniform_grid(1.0, 8);
  const Eigen::Vector2d v(1.0, 2.0), w(-0.5, 3.0);
  const auto h = line_path(times, w);
  const auto moved = translate(trivial_path(times, 2), h);
  const auto direct = lift_piecewise_linear(h);
  for (std::size_t k = 0; k < 8; ++k) CHECK(max_abs_difference(moved.step(k), direct.step(k)) <= 1e-15);

  const auto sum = translate(lift_piecewise_linear(line_path(times, v)), h);
  const auto target = lift_piecewise_linear(line_path(times, v + w));
  CHECK(max_abs_difference(sum.increment(0, 8), target.increment(0, 8)) <= 1e-14);

  std::mt19937_64 gen(61);
  const auto x = lift_piecewise_linear(brownian_path(gen, 2, 32));
  const auto g = brownian_path(gen, 2, 32);
  const auto f = brownian_path(gen, 2, 32);
  const auto zero = CMPath(x.times(), Eigen::MatrixXd::Zero(33, 2));
  CHECK(max_abs_difference(translate(x, zero).increment(0, 32), x.increment(0, 32)) == 0.0);
  CHECK(max_abs_difference(translate(translate(x, g), f).increment(0, 32), translate(x, add(g, f)).increment(0, 32)) <=
        1e-13);
}

TEST_CASE("translation preserves distances in one dimension") {
  std::mt19937_64 gen(71);
  for (int rep = 0; rep < 10; ++rep) {
    const auto x = lift_piecewise_linear(brownian_path(gen, 1, 64));
    const auto y = lift_piecewise_linear(brownian_path(gen, 1, 64));
    const auto h = brownian_path(gen, 1, 64);
    CHECK(std::abs(holder_distance(translate(x, h), translate(y, h), 0.4, PairSet::all) -
                   holder_distance(x, y, 0.4, PairSet::all)) <= 1e-11);
  }
}

TEST_CASE("translated difference picks up the antisymmetric cross integral in higher dimensions") {
  std::mt19937_64 gen(81);
  const auto xp = brownian_path(gen, 2, 32);
  const auto yp = brownian_path(gen, 2, 32);
  const auto h = brownian_path(gen, 2, 32);
  const auto x = lift_piecewise_linear(xp);
  const auto y = lift_piecewise_linear(yp);
  const auto tx = translate(x, h);
  const auto ty = translate(y, h);
  const CMPath z(xp.times, yp.values - xp.values);
  for (auto [i, j] : {std::pair<std::size_t, std::size_t>{0, 32}, {3, 17}, {10, 11}}) {
    const auto before = g2_log(g2_multiply(g2_inverse(x.increment(i, j)), y.increment(i, j)));
    const auto after = g2_log(g2_multiply(g2_inverse(tx.increment(i, j)), ty.increment(i, j)));
    const Eigen::MatrixXd cross = cross_integral(z, h, i, j);
    CHECK((after.level1() - before.level1()).norm() <= 1e-12);
    CHECK(((after.level2() - before.level2()) - (cross - cross.transpose())).norm() <= 1e-12);
  }
}

TEST_CASE("q-variation Hoelder norm") {
  const auto times = uniform_grid(1.0, 16);
  CHECK(q_variation_holder(CMPath(times, Eigen::MatrixXd::Zero(17, 2)), 2.0, 0.4) == 0.0);
  const auto h = line_path(times, Eigen::Vector2d(3, 4));
  CHECK(q_variation_holder(h, 2.0, 0.4) == doctest::Approx(5.0).epsilon(1e-13));
  std::mt19937_64 gen(91);
  const auto b = brownian_path(gen, 2, 16);
  CHECK(q_variation_holder(scale(b, 2.0), 2.5, 0.4) == doctest::Approx(2.0 * q_variation_holder(b, 2.5, 0.4)).epsilon(1e-12));
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(CMPath({0.0, 0.5, 0.5}, Eigen::MatrixXd::Zero(3, 1)), InvalidArgument);
  CHECK_THROWS_AS(CMPath({0.0}, Eigen::MatrixXd::Zero(1, 1)), InvalidArgument);
  CHECK_THROWS_AS(holder_distance(trivial_path(uniform_grid(1, 4), 1), trivial_path(uniform_grid(1, 8), 1), 0.4,
                                  PairSet::all),
                  InvalidArgument);
  CHECK(pair_set_from_string("dyadic") == PairSet::dyadic);
  CHECK_THROWS_AS(pair_set_from_string("some"), InvalidArgument);
}
