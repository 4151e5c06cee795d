#include "roughball/rough_path.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "roughball/error.hpp"
#include "grid_checks.hpp"

namespace roughball {

namespace {

using detail::is_uniform;
using detail::validate_times;

int exact_log2(std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0) return -1;
  int depth = 0;
  while ((std::size_t{1} << depth) < n) ++depth;
  return depth;
}

void require_same_grid(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvalidArgument("grid mismatch: different number of points");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) > 1e-12 * (1.0 + std::abs(a[k]))) {
      throw InvalidArgument("grid mismatch at index " + std::to_string(k));
    }
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
}

/// (t-s)^{-alpha} lookup that is exact per gap on uniform grids.
class InverseLengthPower {
 public:
  InverseLengthPower(const std::vector<double>& times, bool uniform, double alpha)
      : times_(times), alpha_(alpha), uniform_(uniform) {
    if (uniform_) {
      const std::size_t n = times.size() - 1;
      const double h = (times.back() - times.front()) / static_cast<double>(n);
      by_gap_.resize(n + 1);
      for (std::size_t g = 1; g <= n; ++g) by_gap_[g] = std::pow(static_cast<double>(g) * h, -alpha);
    }
  }
  double operator()(std::size_t s, std::size_t t) const {
    return uniform_ ? by_gap_[t - s] : std::pow(times_[t] - times_[s], -alpha_);
  }

 private:
  const std::vector<double>& times_;
  double alpha_;
  bool uniform_;
  std::vector<double> by_gap_;
};

void consider(HolderResult& best, double value, std::size_t s, std::size_t t) {
  if (value > best.value || (value == best.value && (s < best.s_index || (s == best.s_index && t < best.t_index)))) {
    best = {value, s, t};
  }
}

}  // namespace

CMPath::CMPath(std::vector<double> t, Eigen::MatrixXd v) : times(std::move(t)), values(std::move(v)) {
  validate_times(times);
  if (values.rows() != static_cast<Eigen::Index>(times.size())) {
    throw InvalidArgument("CM path: values need one row per grid point");
  }
  if (values.cols() < 1) throw InvalidArgument("CM path: dimension must be >= 1");
  if (!values.allFinite()) throw InvalidArgument("CM path: values must be finite");
}

std::vector<double> uniform_grid(double horizon, std::size_t num_steps) {
  if (!(horizon > 0.0) || num_steps == 0) throw InvalidArgument("uniform grid needs T > 0 and N >= 1");
  std::vector<double> t(num_steps + 1);
  for (std::size_t k = 0; k <= num_steps; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(num_steps);
  return t;
}

std::vector<double> dyadic_grid(double horizon, int depth) {
  if (depth < 0 || depth > 30) throw InvalidArgument("dyadic depth out of range");
  return uniform_grid(horizon, std::size_t{1} << depth);
}

GridRoughPath::GridRoughPath(std::vector<double> times, const std::vector<G2Element>& steps)
    : times_(std::move(times)) {
  validate_times(times_);
  const std::size_t n = times_.size() - 1;
  if (steps.size() != n) throw InvalidArgument("rough path needs one step per grid cell");
  dim_ = steps.front().dim();
  stride_ = kernels::stride(dim_);
  steps_.resize(n * stride_);
  for (std::size_t k = 0; k < n; ++k) {
    if (steps[k].dim() != dim_) throw InvalidArgument("rough path steps must share one dimension");
    std::copy(steps[k].raw().begin(), steps[k].raw().end(), steps_.begin() + static_cast<std::ptrdiff_t>(k * stride_));
  }
  build_tables();
}

GridRoughPath::GridRoughPath(std::vector<double> times, int dim, std::vector<double> flat_steps)
    : dim_(dim), times_(std::move(times)), steps_(std::move(flat_steps)) {
  validate_times(times_);
  if (dim < 1) throw InvalidArgument("rough path dimension must be >= 1");
  stride_ = kernels::stride(dim_);
  if (steps_.size() != (times_.size() - 1) * stride_) throw InvalidArgument("rough path needs one step per grid cell");
  for (double v : steps_) {
    if (!std::isfinite(v)) throw InvalidArgument("rough path steps must be finite");
  }
  build_tables();
}

void GridRoughPath::build_tables() {
  const std::size_t n = times_.size() - 1;
  prefix_.assign((n + 1) * stride_, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    kernels::multiply(prefix_.data() + k * stride_, raw_step(k), prefix_.data() + (k + 1) * stride_, dim_);
  }

  uniform_ = is_uniform(times_);
  const int depth = uniform_ ? exact_log2(n) : -1;
  dyadic_depth_ = depth;
  if (depth >= 0) {
    dyadic_.resize(((std::size_t{2} << depth) - 1) * stride_);
    std::copy(steps_.begin(), steps_.end(), dyadic_.begin() + static_cast<std::ptrdiff_t>(((std::size_t{1} << depth) - 1) * stride_));
    for (int level = depth - 1; level >= 0; --level) {
      const std::size_t count = std::size_t{1} << level;
      for (std::size_t m = 0; m < count; ++m) {
        double* out = dyadic_.data() + ((count - 1) + m) * stride_;
        kernels::multiply(raw_dyadic(level + 1, 2 * m), raw_dyadic(level + 1, 2 * m + 1), out, dim_);
      }
    }
  }
}

G2Element GridRoughPath::step(std::size_t k) const {
  if (k >= num_steps()) throw InvalidArgument("step index out of range");
  G2Element out(dim_);
  std::copy(raw_step(k), raw_step(k) + stride_, out.raw().begin());
  return out;
}

G2Element GridRoughPath::increment(std::size_t i, std::size_t j) const {
  if (j > num_steps() || i > j) {
    throw InvalidArgument("increment indices must satisfy i <= j <= N (got " + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
  }
  G2Element out(dim_);
  if (i == j) return out;
  if (j == i + 1) return step(i);
  kernels::left_divide(prefix_.data() + i * stride_, prefix_.data() + j * stride_, out.raw().data(), dim_);
  return out;
}

const double* GridRoughPath::raw_dyadic(int level, std::size_t m) const {
  if (dyadic_depth_ < 0) throw InvalidArgument("dyadic increments need a uniform grid with 2^L steps");
  return dyadic_.data() + (((std::size_t{1} << level) - 1) + m) * stride_;
}

std::string to_string(PairSet p) { return p == PairSet::all ? "all" : "dyadic"; }

PairSet pair_set_from_string(const std::string& s) {
  if (s == "all") return PairSet::all;
  if (s == "dyadic") return PairSet::dyadic;
  throw InvalidArgument("pair set must be 'all' or 'dyadic', got '" + s + "'");
}

GridRoughPath lift_piecewise_linear(const CMPath& path) {
  validate_times(path.times);
  const int d = path.dim();
  const std::size_t stride = kernels::stride(d);
  std::vector<double> flat(path.num_steps() * stride);
  for (std::size_t k = 0; k < path.num_steps(); ++k) {
    double* out = flat.data() + k * stride;
    for (int i = 0; i < d; ++i) {
      out[i] = path.values(static_cast<Eigen::Index>(k) + 1, i) - path.values(static_cast<Eigen::Index>(k), i);
    }
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) out[d + i * d + j] = 0.5 * out[i] * out[j];
    }
  }
  return GridRoughPath(path.times, d, std::move(flat));
}

GridRoughPath trivial_path(const std::vector<double>& times, int dim) {
  validate_times(times);
  return GridRoughPath(times, std::vector<G2Element>(times.size() - 1, g2_unit(dim)));
}

G2Element increment(const GridRoughPath& rp, std::size_t i, std::size_t j) { return rp.increment(i, j); }

double geometric_defect(const GridRoughPath& rp) {
  const int d = rp.dim();
  const std::size_t n = rp.num_steps();
  const std::size_t stride = kernels::stride(d);
  std::vector<double> acc(stride), next(stride);
  double worst = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t t = s; t < n; ++t) {
      kernels::multiply(acc.data(), rp.raw_step(t), next.data(), d);
      std::swap(acc, next);
      const double* b = acc.data();
      const double* c = acc.data() + d;
      for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
          const double sym = 0.5 * (c[i * d + j] + c[j * d + i]);
          worst = std::max(worst, std::abs(sym - 0.5 * b[i] * b[j]));
        }
      }
    }
  }
  return worst;
}

HolderResult holder_distance_detail(const GridRoughPath& x, const GridRoughPath& y, double alpha, PairSet pairs,
                                    NormVariant variant) {
  check_alpha(alpha);
  require_same_grid(x.times(), y.times());
  if (x.dim() != y.dim()) throw InvalidArgument("holder distance: dimension mismatch");
  const int d = x.dim();
  const std::size_t n = x.num_steps();
  const std::size_t stride = kernels::stride(d);
  std::vector<double> diff(stride);
  HolderResult best;

  if (pairs == PairSet::dyadic) {
    const int depth = x.dyadic_depth();
    if (depth < 0) throw InvalidArgument("dyadic pair set needs a uniform grid with 2^L steps");
    const double horizon = x.horizon();
    for (int level = 0; level <= depth; ++level) {
      const std::size_t count = std::size_t{1} << level;
      const std::size_t width = n / count;
      const double weight = std::pow(horizon / static_cast<double>(count), -alpha);
      for (std::size_t m = 0; m < count; ++m) {
        kernels::left_divide(x.raw_dyadic(level, m), y.raw_dyadic(level, m), diff.data(), d);
        consider(best, kernels::norm(diff.data(), d, variant) * weight, m * width, (m + 1) * width);
      }
    }
    return best;
  }

  const InverseLengthPower inv_len(x.times(), x.uniform(), alpha);
  std::vector<double> ax(stride), ay(stride), tmp(stride);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(ax.begin(), ax.end(), 0.0);
    std::fill(ay.begin(), ay.end(), 0.0);
    for (std::size_t t = s; t < n; ++t) {
      kernels::multiply(ax.data(), x.raw_step(t), tmp.data(), d);
      std::swap(ax, tmp);
      kernels::multiply(ay.data(), y.raw_step(t), tmp.data(), d);
      std::swap(ay, tmp);
      kernels::left_divide(ax.data(), ay.data(), diff.data(), d);
      consider(best, kernels::norm(diff.data(), d, variant) * inv_len(s, t + 1), s, t + 1);
    }
  }
  return best;
}

double holder_distance(const GridRoughPath& x, const GridRoughPath& y, double alpha, PairSet pairs,
                       NormVariant variant) {
  return holder_distance_detail(x, y, alpha, pairs, variant).value;
}

namespace {

template <typename NormFn>
double norm_over_pairs(const GridRoughPath& x, double alpha, PairSet pairs, NormFn&& fn) {
  check_alpha(alpha);
  const int d = x.dim();
  const std::size_t n = x.num_steps();
  double best = 0.0;
  if (pairs == PairSet::dyadic) {
    const int depth = x.dyadic_depth();
    if (depth < 0) throw InvalidArgument("dyadic pair set needs a uniform grid with 2^L steps");
    for (int level = 0; level <= depth; ++level) {
      const std::size_t count = std::size_t{1} << level;
      const double weight = std::pow(x.horizon() / static_cast<double>(count), -alpha);
      for (std::size_t m = 0; m < count; ++m) best = std::max(best, fn(x.raw_dyadic(level, m), d) * weight);
    }
    return best;
  }
  const InverseLengthPower inv_len(x.times(), x.uniform(), alpha);
  const std::size_t stride = kernels::stride(d);
  std::vector<double> acc(stride), tmp(stride);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t t = s; t < n; ++t) {
      kernels::multiply(acc.data(), x.raw_step(t), tmp.data(), d);
      std::swap(acc, tmp);
      best = std::max(best, fn(acc.data(), d) * inv_len(s, t + 1));
    }
  }
  return best;
}

}  // namespace

double holder_norm(const GridRoughPath& x, double alpha, PairSet pairs, NormVariant variant) {
  return norm_over_pairs(x, alpha, pairs, [variant](const double* g, int d) { return kernels::norm(g, d, variant); });
}

double path_holder_norm(const GridRoughPath& x, double alpha, PairSet pairs, NormVariant variant) {
  return norm_over_pairs(x, alpha, pairs,
                         [variant](const double* g, int d) { return kernels::level1_norm(g, d, variant); });
}

DyadicBound dyadic_holder_bound(const GridRoughPath& x, double alpha, double eps, int depth, NormVariant variant) {
  check_alpha(alpha);
  const int grid_depth = x.dyadic_depth();
  if (grid_depth < 0) throw InvalidArgument("dyadic bound needs a uniform grid with 2^L steps");
  if (depth < 1 || depth > grid_depth) {
    throw InvalidArgument("depth must lie in [1, " + std::to_string(grid_depth) + "]");
  }
  const double horizon = x.horizon();
  if (!(eps > 0.0) || !(eps < horizon)) throw InvalidArgument("eps must lie in (0, T)");
  const double k_real = std::log2(horizon / eps);
  const int k = static_cast<int>(std::lround(k_real));
  if (std::abs(k_real - k) > 1e-9 || k < 1 || k > depth) {
    throw InvalidArgument("eps must equal T 2^-k for an integer 1 <= k <= depth");
  }

  const int d = x.dim();
  std::vector<std::vector<double>> norms(static_cast<std::size_t>(depth) + 1);
  for (int level = 0; level <= depth; ++level) {
    const std::size_t count = std::size_t{1} << level;
    auto& row = norms[static_cast<std::size_t>(level)];
    row.resize(count);
    for (std::size_t m = 0; m < count; ++m) row[m] = kernels::norm(x.raw_dyadic(level, m), d, variant);
  }

  const double eps_pow = std::pow(eps, alpha);
  DyadicBound out;
  out.truncation_level = depth;

  double coarse = 0.0;
  for (int level = 1; level <= depth; ++level) {
    const auto& row = norms[static_cast<std::size_t>(level)];
    coarse += *std::max_element(row.begin(), row.end());
  }
  out.coarse_term = 2.0 * coarse / eps_pow;

  double fine = 0.0;
  for (int j = 0; j <= depth - k - 1; ++j) {
    const std::size_t blocks = (std::size_t{1} << j) * ((std::size_t{1} << k) - 1) + 1;
    const double scale = eps_pow * std::pow(2.0, -alpha * (j + 1));
    for (std::size_t i = 0; i < blocks; ++i) {
      double sum = 0.0;
      for (int l = j + 1; l <= depth - k; ++l) {
        const std::size_t per_block = std::size_t{1} << (l - j);
        const auto& row = norms[static_cast<std::size_t>(k + l)];
        double level_max = 0.0;
        for (std::size_t m = 0; m < per_block; ++m) level_max = std::max(level_max, row[i * per_block + m]);
        sum += level_max;
      }
      fine = std::max(fine, sum / scale);
    }
  }
  out.fine_term = 3.0 * fine;
  out.value = std::max(out.coarse_term, out.fine_term);
  return out;
}

GridRoughPath translate(const GridRoughPath& x, const CMPath& h) {
  require_same_grid(x.times(), h.times);
  if (x.dim() != h.dim()) throw InvalidArgument("translate: dimension mismatch");
  std::vector<G2Element> steps;
  steps.reserve(x.num_steps());
  for (std::size_t k = 0; k < x.num_steps(); ++k) {
    G2Element s = x.step(k);
    const Eigen::VectorXd dx = s.level1();
    const Eigen::VectorXd dh =
        (h.values.row(static_cast<Eigen::Index>(k) + 1) - h.values.row(static_cast<Eigen::Index>(k))).transpose();
    s.level1() = dx + dh;
    s.level2() += 0.5 * (dx * dh.transpose() + dh * dx.transpose() + dh * dh.transpose());
    steps.push_back(std::move(s));
  }
  return GridRoughPath(x.times(), steps);
}

CMPath add(const CMPath& a, const CMPath& b) {
  require_same_grid(a.times, b.times);
  if (a.dim() != b.dim()) throw InvalidArgument("CM path sum: dimension mismatch");
  return CMPath(a.times, a.values + b.values);
}

CMPath scale(const CMPath& a, double factor) { return CMPath(a.times, a.values * factor); }

double q_variation_holder(const CMPath& h, double q, double alpha) {
  if (!(q >= 1.0)) throw InvalidArgument("q must be >= 1");
  check_alpha(alpha);
  const std::size_t n = h.num_steps();
  std::vector<double> best(n + 1);
  double result = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    best[s] = 0.0;
    for (std::size_t t = s + 1; t <= n; ++t) {
      double v = 0.0;
      for (std::size_t u = s; u < t; ++u) {
        const double jump = (h.values.row(static_cast<Eigen::Index>(t)) - h.values.row(static_cast<Eigen::Index>(u))).norm();
        v = std::max(v, best[u] + std::pow(jump, q));
      }
      best[t] = v;
      result = std::max(result, std::pow(v, 1.0 / q) / std::pow(h.times[t] - h.times[s], alpha));
    }
  }
  return result;
}

}  // namespace roughball
