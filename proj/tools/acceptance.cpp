// roughball_acceptance: checks acceptance criteria 1-11 and prints one PASS/FAIL line each.
//
//   roughball_acceptance [--configs DIR] [--work DIR] [--only 1,5,...]
//
// Exit status 0 when every selected criterion passes, 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "roughball/config.hpp"
#include "roughball/g2.hpp"
#include "roughball/gaussian.hpp"
#include "roughball/io.hpp"
#include "roughball/quant.hpp"
#include "roughball/rough_path.hpp"
#include "roughball/runner.hpp"
#include "roughball/sbp.hpp"
#include "roughball/stats.hpp"
#include "roughball/transport.hpp"

#ifndef ROUGHBALL_SOURCE_DIR
#define ROUGHBALL_SOURCE_DIR "."
#endif

using namespace roughball;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> notes;
};

std::string num(double x, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

void require(Outcome& o, bool ok, const std::string& what) {
  if (!ok) o.pass = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += what + (ok ? "" : " [miss]");
}

Eigen::VectorXd normals(std::mt19937_64& gen, int d) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = g(gen);
  return v;
}

G2Element random_element(std::mt19937_64& gen, int d) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i) a.col(i) = normals(gen, d);
  return G2Element(normals(gen, d), a);
}

double scaled_error(const G2Element& x, const G2Element& ref) {
  double scale = 1.0;
  for (double v : ref.raw()) scale = std::max(scale, std::abs(v));
  return max_abs_difference(x, ref) / scale;
}

CMPath brownian_path(std::mt19937_64& gen, int d, std::size_t n) {
  std::normal_distribution<double> g;
  const auto times = uniform_grid(1.0, n);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), d);
  const double sd = std::sqrt(1.0 / static_cast<double>(n));
  for (std::size_t k = 1; k <= n; ++k)
    for (int c = 0; c < d; ++c)
      v(static_cast<Eigen::Index>(k), c) = v(static_cast<Eigen::Index>(k - 1), c) + sd * g(gen);
  return CMPath(times, v);
}

template <class F>
double simpson(F f, double a, double b, int intervals = 20000) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Minimum cost over all basic plans (spanning trees of the bipartite graph with nonnegative tree flows).
double brute_force_bases(const std::vector<double>& a, const std::vector<double>& b, const Eigen::MatrixXd& c) {
  const int m = static_cast<int>(a.size()), n = static_cast<int>(b.size());
  const int arcs = m * n, need = m + n - 1;
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << arcs); ++mask) {
    if (std::popcount(mask) != need) continue;
    std::vector<int> comp(static_cast<std::size_t>(m + n));
    std::iota(comp.begin(), comp.end(), 0);
    auto find = [&](int x) {
      while (comp[static_cast<std::size_t>(x)] != x) x = comp[static_cast<std::size_t>(x)];
      return x;
    };
    bool tree = true;
    for (int e = 0; e < arcs && tree; ++e) {
      if (!(mask >> e & 1u)) continue;
      const int u = find(e / n), v = find(m + e % n);
      if (u == v) tree = false;
      comp[static_cast<std::size_t>(u)] = v;
    }
    if (!tree) continue;
    std::vector<double> rest(static_cast<std::size_t>(m + n));
    for (int i = 0; i < m; ++i) rest[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) rest[static_cast<std::size_t>(m + j)] = b[static_cast<std::size_t>(j)];
    unsigned left = mask;
    double cost = 0.0;
    bool feasible = true;
    while (left && feasible) {
      bool progress = false;
      for (int node = 0; node < m + n && !progress; ++node) {
        int deg = 0, arc = -1;
        for (int e = 0; e < arcs; ++e)
          if ((left >> e & 1u) && (e / n == node || m + e % n == node)) {
            ++deg;
            arc = e;
          }
        if (deg != 1) continue;
        const double f = rest[static_cast<std::size_t>(node)];
        if (f < -1e-12) feasible = false;
        const int other = node < m ? m + arc % n : arc / n;
        rest[static_cast<std::size_t>(other)] -= f;
        rest[static_cast<std::size_t>(node)] = 0.0;
        cost += f * c(arc / n, arc % n);
        left &= ~(1u << arc);
        progress = true;
      }
      if (!progress) feasible = false;
    }
    if (feasible) best = std::min(best, cost);
  }
  return best;
}

double brute_force_permutations(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows());
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += c(i, p[static_cast<std::size_t>(i)]);
    best = std::min(best, s / n);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

std::vector<double> random_weights(std::mt19937_64& gen, std::size_t k, bool rounded) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_int_distribution<int> q(0, 4);
  std::vector<double> w(k);
  for (std::size_t i = 0; i < k; ++i) w[i] = rounded ? q(gen) + (i == 0 ? 1 : 0) : u(gen);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= s;
  return w;
}

/// Rows of a runner CSV (comment line skipped), keyed by header name. No quoted fields expected.
std::vector<std::map<std::string, std::string>> read_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split(line);
      continue;
    }
    const auto cells = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  double worst = 0.0;
  for (int d : {1, 2, 5}) {
    for (double eps : {0.1, 1.0, 3.0}) {
      const double x = 0.5 * eps * eps;
      double l2 = 0.0;
      if (d == 1) l2 = std::erf(std::sqrt(x));
      if (d == 2) l2 = -std::expm1(-x);
      if (d == 5) l2 = std::erf(std::sqrt(x)) - 2.0 * std::sqrt(x / M_PI) * std::exp(-x) * (1.0 + 2.0 * x / 3.0);
      const double linf = std::pow(std::erf(eps / std::sqrt(2.0)), d);
      worst = std::max(worst, std::abs(rd_gaussian_small_ball(d, eps, SmallBallNorm::l2) - l2));
      worst = std::max(worst, std::abs(rd_gaussian_small_ball(d, eps, SmallBallNorm::linf) - linf));
    }
  }
  require(o, worst <= 1e-10, "max |p - reference| " + num(worst, 3) + " <= 1e-10");

  double worst_rel = 0.0;
  std::string slopes;
  for (int d : {1, 2, 5}) {
    for (auto norm : {SmallBallNorm::l2, SmallBallNorm::linf}) {
      std::vector<double> x, y;
      for (int k = 0; k <= 20; ++k) {
        const double eps = std::pow(10.0, -4.0 + 0.1 * k);
        x.push_back(std::log(1.0 / eps));
        y.push_back(-std::log(rd_gaussian_small_ball(d, eps, norm)));
      }
      const double slope = linear_fit(x, y).slope;
      worst_rel = std::max(worst_rel, std::abs(slope / d - 1.0));
      if (norm == SmallBallNorm::l2) slopes += (slopes.empty() ? "" : ", ") + num(slope, 5);
    }
  }
  require(o, worst_rel <= 0.02, "slopes (l2) " + slopes + ", max relative deviation from d " + num(worst_rel, 3));
  return o;
}

Outcome criterion2() {
  Outcome o;
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  double assoc = 0.0, inv = 0.0, explog = 0.0, dil = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    const int d = 1 + rep % 5;
    const auto x = random_element(gen, d), y = random_element(gen, d), z = random_element(gen, d);
    const auto left = g2_multiply(g2_multiply(x, y), z);
    assoc = std::max(assoc, scaled_error(left, g2_multiply(x, g2_multiply(y, z))));
    inv = std::max(inv, max_abs_difference(g2_multiply(x, g2_inverse(x)), g2_unit(d)));
    inv = std::max(inv, max_abs_difference(g2_multiply(g2_inverse(x), x), g2_unit(d)));
    explog = std::max(explog, scaled_error(g2_exp(g2_log(x)), x));
    const auto l = g2_log(x);
    const auto back = g2_log(g2_exp(l));
    for (std::size_t k = 0; k < l.raw().size(); ++k) explog = std::max(explog, std::abs(back.raw()[k] - l.raw()[k]));
    const double s = u(gen), t = u(gen);
    dil = std::max(dil, scaled_error(g2_dilate(g2_dilate(x, t), s), g2_dilate(x, s * t)));
    const auto ld = g2_log(g2_dilate(x, t));
    for (int i = 0; i < d; ++i) {
      dil = std::max(dil, std::abs(ld.level1()(i) - t * l.level1()(i)));
      for (int j = 0; j < d; ++j) dil = std::max(dil, std::abs(ld.level2()(i, j) - t * t * l.level2()(i, j)));
    }
  }
  const double worst = std::max({assoc, inv, explog, dil});
  require(o, worst <= 1e-13,
          "associativity " + num(assoc, 2) + ", inverse " + num(inv, 2) + ", exp/log " + num(explog, 2) +
              ", dilation " + num(dil, 2) + " over 1e4 cases, d = 1..5");
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto model = CovarianceModel::brownian(2);
  const auto times = dyadic_grid(1.0, 10);
  const auto paths = sample_lifted_paths(model, times, 100, 31);
  std::mt19937_64 gen(33);
  std::uniform_int_distribution<std::size_t> pick(0, 1024);
  double chen = 0.0, defect = 0.0;
  for (const auto& x : paths) {
    defect = std::max(defect, geometric_defect(x));
    for (int rep = 0; rep < 20; ++rep) {
      std::array<std::size_t, 3> ijk = {pick(gen), pick(gen), pick(gen)};
      std::sort(ijk.begin(), ijk.end());
      const auto [i, k, j] = ijk;
      const auto whole = x.increment(i, j);
      chen = std::max(chen, max_abs_difference(whole, g2_multiply(x.increment(i, k), x.increment(k, j))));
      auto fold = g2_unit(2);
      for (std::size_t s = i; s < j; ++s) fold = g2_multiply(fold, x.step(s));
      chen = std::max(chen, max_abs_difference(whole, fold));
    }
  }
  require(o, chen <= 1e-12, "Chen " + num(chen, 2) + " <= 1e-12");
  require(o, defect <= 1e-12, "geometric defect " + num(defect, 2) + " <= 1e-12");

  auto translation_gap = [&](int d) {
    double worst = 0.0;
    std::mt19937_64 g(37 + d);
    for (int rep = 0; rep < 50; ++rep) {
      const auto x = lift_piecewise_linear(brownian_path(g, d, 64));
      const auto y = lift_piecewise_linear(brownian_path(g, d, 64));
      const auto h = brownian_path(g, d, 64);
      const double before = holder_distance(x, y, 0.4, PairSet::all);
      const double after = holder_distance(translate(x, h), translate(y, h), 0.4, PairSet::all);
      worst = std::max(worst, std::abs(after - before));
    }
    return worst;
  };
  const double gap2 = translation_gap(2);
  const double gap1 = translation_gap(1);
  require(o, gap2 <= 1e-11, "translation |d(TX,TY) - d(X,Y)| " + num(gap2, 3) + " <= 1e-11 (d = 2)");
  o.notes.push_back("translation gap in d = 1: " + num(gap1, 3));
  if (gap2 > 1e-11) {
    o.notes.push_back(
        "T^h acts on both lifts by adding the cross integrals of h with each path, so the level-2 part of "
        "X_{s,t}^{-1} Y_{s,t} changes by the antisymmetric part of int (Y - X) (x) dh. This vanishes only "
        "when d = 1; for d >= 2 the translated distance differs at order |Y - X| |h| and no "
        "implementation of translation can make it invariant.");
  }
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto model = CovarianceModel::brownian(2);
  const auto paths = sample_lifted_paths(model, dyadic_grid(1.0, 9), 100, 41);
  std::size_t violations = 0;
  double lo = 1e300, hi = 0.0;
  for (const auto& x : paths) {
    const double exact = holder_norm(x, 0.4, PairSet::all);
    const double bound = dyadic_holder_bound(x, 0.4, 0.5, 9).value;
    if (bound < exact) ++violations;
    lo = std::min(lo, bound / exact);
    hi = std::max(hi, bound / exact);
  }
  require(o, violations == 0,
          std::to_string(violations) + " violations in 100 paths (bound / norm in [" + num(lo) + ", " + num(hi) +
              "])");
  return o;
}

Outcome criterion5(int threads) {
  Outcome o;
  const auto times = dyadic_grid(1.0, 8);
  const double hurst = 0.4;
  for (const auto& model : {CovarianceModel::brownian(1), CovarianceModel::fbm(hurst, 1)}) {
    const bool bm = model.kind() == CovarianceKind::brownian;
    const auto est = estimate_wavelet_variances(model, times, 6, 100000, bm ? 51 : 52, threads);
    double worst = 0.0, exact_gap = 0.0;
    for (const auto& e : est) {
      const double target = bm ? 1.0 : std::pow(2.0, e.level * (1 - 2 * hurst)) * (std::pow(2.0, 2 - 2 * hurst) - 1);
      worst = std::max(worst, std::abs(e.mc - target) / e.se);
      exact_gap = std::max(exact_gap, std::abs(e.exact - target));
    }
    require(o, worst <= 4.0 && exact_gap <= 1e-12,
            std::string(bm ? "brownian" : "fbm H=0.4") + " max |z| " + num(worst, 3) + " over p = 0..6");
  }
  return o;
}

Outcome criterion6(const std::map<std::string, RunResult>& runs) {
  Outcome o;
  std::size_t reports = 0, violated = 0, quad = 0, half = 0, box = 0;
  double quad_margin = 1e300, half_gap = 0.0;
  std::vector<std::string> failures;
  for (const auto& [name, run] : runs) {
    if (!run.files.count("reports.json")) continue;
    const auto doc = json::parse(run.files.at("reports.json"));
    for (const auto& r : doc["reports"]) {
      ++reports;
      const double lhs = r["lhs"]["value"], rhs = r["rhs"]["value"];
      if (r["verdict"] == "violated") {
        ++violated;
        failures.push_back(name + ": " + r["name"].get<std::string>() + " lhs " + num(lhs) + " rhs " + num(rhs) +
                           ", margin " + num(r["margin"].get<double>(), 3) + " SE");
      }
      if (r["config"].is_object() && r["config"].value("method", "") == "quadrature") {
        ++quad;
        quad_margin = std::min(quad_margin, lhs - rhs);
      }
      if (r["name"] == "borell_half_space") {
        ++half;
        half_gap = std::max(half_gap, std::abs(lhs - rhs));
      }
      if (r["name"] == "borell_box") {
        ++box;
        if (lhs - rhs < -4.0 * r["difference_se"].get<double>()) o.pass = false;
      }
    }
  }
  require(o, quad > 0 && quad_margin >= -1e-10,
          std::to_string(quad) + " quadrature reports, min margin " + num(quad_margin, 3));
  require(o, half > 0 && half_gap <= 1e-10, "half-space |lhs - rhs| " + num(half_gap, 2));
  require(o, box > 0, std::to_string(box) + " box reports within 4 SE");
  require(o, violated == 0, std::to_string(violated) + " violated of " + std::to_string(reports) + " verdicts");
  for (const auto& f : failures) o.notes.push_back(f);
  if (violated > 0) {
    o.notes.push_back(
        "the violated rows are rough-path Cameron-Martin checks for d = 2 brownian lifts, event "
        "d(W, S2 h) < eps. The lower bound e^{-|h|^2/2} P[||W|| < eps] follows from the Gaussian shift "
        "formula once that event equals {W - h in the centred ball}, i.e. once d(S2 h, T^h X) = ||X||. "
        "That is the translation identity of criterion 3, which fails for d >= 2. The same checks hold "
        "by hundreds of SE for d = 1 and under the sup norm.");
  }
  return o;
}

Outcome criterion7(int threads) {
  Outcome o;
  std::vector<double> eps, p;
  for (int k = 0; k <= 20; ++k) {
    eps.push_back(0.3 * std::pow(2.0, 0.15 * k));
    p.push_back(std::exp(-std::pow(eps.back(), -3.0)));
  }
  const double synthetic = fit_variation_index(eps, p).index;
  require(o, std::abs(synthetic - 3.0) <= 1e-6, "synthetic index " + num(synthetic, 10));

  const auto model = CovarianceModel::brownian(2);
  const auto times = dyadic_grid(1.0, 10);
  const std::size_t n = 200000;
  const std::uint64_t seed = 71;
  const std::vector<double> alphas = {0.34, 0.38, 0.42};
  std::vector<NormSpec> specs;
  for (double a : alphas) {
    NormSpec rough;
    rough.alpha = a;
    NormSpec path = rough;
    path.kind = NormKind::path_holder;
    specs.push_back(rough);
    specs.push_back(path);
  }
  const auto norms = sample_norms(model, times, specs, n, seed, threads);
  std::vector<double> levels;
  for (double q = 50.0 / n; q <= 0.5; q *= 1.5) levels.push_back(q);

  std::vector<double> indices;
  std::size_t dominance_failures = 0, points = 0;
  std::string side;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    std::vector<double> rough(norms.rows()), path(norms.rows());
    for (Eigen::Index i = 0; i < norms.rows(); ++i) {
      rough[static_cast<std::size_t>(i)] = norms(i, static_cast<Eigen::Index>(2 * a));
      path[static_cast<std::size_t>(i)] = norms(i, static_cast<Eigen::Index>(2 * a + 1));
    }
    std::vector<double> sorted = rough;
    std::sort(sorted.begin(), sorted.end());
    const auto grid = quantile_eps(sorted, levels);
    const auto cr = curve_from_norms(rough, grid, specs[2 * a], "brownian", seed);
    const auto cp = curve_from_norms(path, grid, specs[2 * a + 1], "brownian", seed);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      ++points;
      if (cr.hits[k] > cp.hits[k]) ++dominance_failures;
    }
    indices.push_back(fit_variation_index(cr).index);
    side += (side.empty() ? "" : "; ") + std::string("alpha ") + num(alphas[a]) + ": fitted " +
            num(indices.back()) + " vs predicted " + num(predicted_sbp_index(1.0, alphas[a]));
  }
  const bool increasing = indices[0] < indices[1] && indices[1] < indices[2];
  require(o, increasing,
          "fitted index " + num(indices[0]) + " < " + num(indices[1]) + " < " + num(indices[2]));
  require(o, dominance_failures == 0,
          "p_rough <= p_path at " + std::to_string(points - dominance_failures) + "/" + std::to_string(points) +
              " eps");
  o.notes.push_back(side);
  return o;
}

Outcome criterion8(const std::map<std::string, RunResult>& runs) {
  Outcome o;
  const double c_star =
      simpson([](double x) { return x * std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); }, 0.0, 12.0) / 0.5;
  const double d_star = 2.0 * simpson([&](double x) {
                          return (x - c_star) * (x - c_star) * std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI);
                        }, 0.0, 12.0);
  o.notes.push_back("integration oracle: c* = " + num(c_star, 8) + ", distortion " + num(d_star, 8));

  std::mt19937_64 gen(81);
  std::normal_distribution<double> g;
  std::vector<double> x(1000000);
  for (auto& v : x) v = g(gen);
  LloydOptions opt;
  opt.n = 2;
  opt.r = 2.0;
  opt.update = CenterUpdate::mean;
  opt.seed = 83;
  const auto book = lloyd_scalar(x, opt);
  const bool centers_ok = book.centers.size() == 2 && std::abs(book.centers[0] + 0.79788) <= 1e-2 &&
                          std::abs(book.centers[1] - 0.79788) <= 1e-2 &&
                          std::abs(book.centers[0] + c_star) <= 1e-2 && std::abs(book.centers[1] - c_star) <= 1e-2;
  require(o, centers_ok, "codepoints " + num(book.centers.front(), 6) + ", " + num(book.centers.back(), 6));
  require(o, std::abs(book.distortion - 0.36338) <= 1e-2 && std::abs(book.distortion - d_star) <= 1e-2,
          "distortion " + num(book.distortion, 6));

  std::size_t rows = 0, held = 0;
  std::string table;
  for (const auto& [name, run] : runs) {
    if (!run.files.count("quantization.csv")) continue;
    for (const auto& r : read_csv(run.files.at("quantization.csv"))) {
      ++rows;
      held += r.at("holds") == "true";
      table += (table.empty() ? "" : "; ") + std::string("n ") + r.at("n") + ": e_hat " + num(std::stod(r.at("e_hat"))) +
               " vs bound " + num(std::stod(r.at("lower_bound"))) + " (se " + num(std::stod(r.at("se")), 2) + ")";
    }
  }
  require(o, rows >= 3 && held == rows, std::to_string(held) + "/" + std::to_string(rows) + " path bounds hold");
  o.notes.push_back(table);
  return o;
}

Outcome criterion9() {
  Outcome o;
  const auto model = CovarianceModel::brownian(2);
  const auto pool = std::make_shared<const std::vector<GridRoughPath>>(
      sample_lifted_paths(model, dyadic_grid(1.0, 4), 40, 91));
  const Metric metric{0.4, PairSet::all};
  Eigen::MatrixXd dist(40, 40);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) dist(i, j) = metric((*pool)[static_cast<std::size_t>(i)], (*pool)[static_cast<std::size_t>(j)]);

  std::mt19937_64 gen(93);
  std::uniform_int_distribution<std::size_t> atom(0, 39);
  auto random_measure = [&](std::size_t k, bool rounded) {
    std::vector<std::size_t> idx;
    while (idx.size() < k) {
      const auto a = atom(gen);
      if (std::find(idx.begin(), idx.end(), a) == idx.end()) idx.push_back(a);
    }
    return std::pair{idx, random_weights(gen, k, rounded)};
  };
  auto as_measure = [&](const std::pair<std::vector<std::size_t>, std::vector<double>>& m) {
    auto atoms = std::make_shared<std::vector<GridRoughPath>>();
    for (auto i : m.first) atoms->push_back((*pool)[i]);
    return DiscreteMeasure{atoms, m.second};
  };
  auto cost = [&](const auto& mu, const auto& nu, double r) {
    Eigen::MatrixXd c(mu.first.size(), nu.first.size());
    for (std::size_t i = 0; i < mu.first.size(); ++i)
      for (std::size_t j = 0; j < nu.first.size(); ++j)
        c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            std::pow(dist(static_cast<Eigen::Index>(mu.first[i]), static_cast<Eigen::Index>(nu.first[j])), r);
    return c;
  };

  std::uniform_int_distribution<int> size(1, 5);
  double worst = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const double r = inst % 2 ? 2.0 : 1.0;
    double oracle = 0.0, solved = 0.0;
    if (inst % 4 == 3) {
      // equal masses on up to six atoms per side: optimal plans are permutations
      const std::size_t k = 1 + static_cast<std::size_t>(inst / 4) % 6;
      auto mu = random_measure(k, false), nu = random_measure(k, false);
      mu.second.assign(k, 1.0 / static_cast<double>(k));
      nu.second = mu.second;
      oracle = std::pow(brute_force_permutations(cost(mu, nu, r)), 1.0 / r);
      solved = wasserstein(as_measure(mu), as_measure(nu), r, metric);
    } else {
      int m = size(gen), n = size(gen);
      while (m + n > 6) (m > n ? m : n) -= 1;
      const auto mu = random_measure(static_cast<std::size_t>(m), inst % 3 == 0);
      const auto nu = random_measure(static_cast<std::size_t>(n), inst % 5 == 0);
      oracle = std::pow(brute_force_bases(mu.second, nu.second, cost(mu, nu, r)), 1.0 / r);
      solved = wasserstein(as_measure(mu), as_measure(nu), r, metric);
    }
    worst = std::max(worst, std::abs(oracle - solved));
  }
  require(o, worst <= 1e-9, "max |W - enumeration| " + num(worst, 3) + " on 1000 instances");

  double sym = 0.0, tri = 0.0, self = 0.0;
  std::uniform_int_distribution<std::size_t> support(1, 6);
  for (int inst = 0; inst < 300; ++inst) {
    std::vector<DiscreteMeasure> ms;
    for (int k = 0; k < 3; ++k) ms.push_back(as_measure(random_measure(support(gen), inst % 2 == 0)));
    auto w = [&](int i, int j) { return wasserstein(ms[static_cast<std::size_t>(i)], ms[static_cast<std::size_t>(j)], 1.0, metric); };
    sym = std::max(sym, std::abs(w(0, 1) - w(1, 0)));
    tri = std::max(tri, w(0, 2) - w(0, 1) - w(1, 2));
    self = std::max(self, std::abs(w(0, 0)));
  }
  require(o, sym <= 1e-9 && tri <= 1e-9 && self <= 1e-9,
          "r = 1 symmetry " + num(sym, 2) + ", triangle excess " + num(tri, 2) + ", W(mu, mu) " + num(self, 2));
  return o;
}

Outcome criterion10(const std::map<std::string, RunResult>& runs) {
  Outcome o;
  bool found = false;
  for (const auto& [name, run] : runs) {
    if (!run.files.count("summary.json") || !run.files.count("rates.csv")) continue;
    found = true;
    const auto s = json::parse(run.files.at("summary.json"));
    const std::size_t cells = s["cells"], failures = s["domination_failures"];
    const double slope = s["slope_weighted"], slope_u = s["slope_uniform"];
    require(o, failures == 0 && cells >= 50,
            name + ": domination in " + std::to_string(cells - failures) + "/" + std::to_string(cells) + " cells");
    require(o, slope < 0.0, "slope of log W against log log n " + num(slope) + " (uniform " + num(slope_u) + ")");
    std::map<long, std::pair<double, int>> mean;
    std::map<long, double> prediction;
    for (const auto& r : read_csv(run.files.at("rates.csv"))) {
      const long n = std::stol(r.at("n"));
      mean[n].first += std::stod(r.at("W_weighted"));
      mean[n].second += 1;
      prediction[n] = std::stod(r.at("prediction"));
    }
    std::string table;
    for (const auto& [n, m] : mean)
      table += (table.empty() ? "" : "; ") + std::string("n ") + std::to_string(n) + ": mean W " +
               num(m.first / m.second) + ", rate " + num(prediction[n]);
    o.notes.push_back(name + " (rate reported, not asserted): " + table);
  }
  require(o, found, "empirical run present");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-11"};
  std::string configs = ROUGHBALL_SOURCE_DIR "/configs";
  std::string work = (fs::temp_directory_path() / "roughball_acceptance").string();
  std::vector<int> only;
  app.add_option("--configs", configs, "shipped config directory")->check(CLI::ExistingDirectory);
  app.add_option("--work", work, "scratch directory for experiment runs");
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int k) { return selected.empty() || selected.count(k); };

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(configs))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  auto run_matrix = [&](int threads) {
    std::map<std::string, RunResult> out;
    for (const auto& f : files) {
      const auto config = load_config(f);
      RunOptions options;
      options.out = fs::path(work) / ("threads" + std::to_string(threads)) / f.stem();
      options.threads = threads;
      out[f.stem().string()] = run_experiment(config, options);
    }
    return out;
  };

  std::map<std::string, RunResult> matrix;
  const bool need_matrix = wanted(6) || wanted(8) || wanted(10) || wanted(11);
  using clock = std::chrono::steady_clock;
  double matrix_seconds = 0.0;
  if (need_matrix) {
    const auto t0 = clock::now();
    matrix = run_matrix(1);
    matrix_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    std::cout << "shipped matrix: " << matrix.size() << " configs in " << num(matrix_seconds, 3) << " s\n";
  }

  const int threads = 1;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"finite-dimensional small-ball oracle", criterion1},
      {"algebra identities", criterion2},
      {"rough-path structure", criterion3},
      {"discretisation bound direction", criterion4},
      {"wavelet variances", [&] { return criterion5(threads); }},
      {"inequality suite", [&] { return criterion6(matrix); }},
      {"small-ball index machinery", [&] { return criterion7(threads); }},
      {"quantization", [&] { return criterion8(matrix); }},
      {"optimal transport", criterion9},
      {"empirical rates", [&] { return criterion10(matrix); }},
      {"determinism", [&] {
         Outcome o;
         const auto eight = run_matrix(8);
         std::size_t same = 0;
         for (const auto& [name, run] : matrix) {
           const bool match = eight.count(name) && eight.at(name).manifest_sha256 == run.manifest_sha256;
           same += match;
           if (!match) o.notes.push_back("manifest differs: " + name);
         }
         require(o, !matrix.empty() && same == matrix.size(),
                 std::to_string(same) + "/" + std::to_string(matrix.size()) +
                     " manifest hashes equal for --threads 1 and 8");
         return o;
       }}};

  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!wanted(id)) continue;
    const auto t0 = clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(clock::now() - t0).count();
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[k].first << "): " << o.detail
              << " [" << num(seconds, 3) << " s]\n";
    for (const auto& note : o.notes) std::cout << "    " << note << "\n";
    std::cout.flush();
  }
  return all ? 0 : 1;
}
