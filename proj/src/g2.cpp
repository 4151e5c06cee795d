#include "roughball/g2.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "roughball/error.hpp"

namespace roughball {

template <typename Tag>
TruncatedTensor<Tag>::TruncatedTensor(int dim) : dim_(dim) {
  if (dim < 1) throw InvalidArgument("tensor dimension must be >= 1, got " + std::to_string(dim));
  data_.assign(kernels::stride(dim), 0.0);
}

template <typename Tag>
TruncatedTensor<Tag>::TruncatedTensor(const Eigen::VectorXd& level1, const Eigen::MatrixXd& level2)
    : TruncatedTensor(static_cast<int>(level1.size())) {
  if (level2.rows() != dim_ || level2.cols() != dim_) {
    throw InvalidArgument("level-2 block must be " + std::to_string(dim_) + "x" + std::to_string(dim_));
  }
  if (!level1.allFinite() || !level2.allFinite()) throw InvalidArgument("tensor entries must be finite");
  this->level1() = level1;
  this->level2() = level2;
}

template <typename Tag>
std::vector<double> TruncatedTensor<Tag>::to_flat() const {
  std::vector<double> flat;
  flat.reserve(data_.size() + 1);
  flat.push_back(static_cast<double>(dim_));
  flat.insert(flat.end(), data_.begin(), data_.end());
  return flat;
}

template <typename Tag>
TruncatedTensor<Tag> TruncatedTensor<Tag>::from_flat(std::span<const double> flat) {
  if (flat.empty()) throw InvalidArgument("empty flat tensor");
  const double d_raw = flat[0];
  if (!(d_raw >= 1.0) || d_raw != std::floor(d_raw)) throw InvalidArgument("flat tensor: bad dimension field");
  const int d = static_cast<int>(d_raw);
  if (flat.size() != kernels::stride(d) + 1) {
    throw InvalidArgument("flat tensor of dimension " + std::to_string(d) + " must have " +
                          std::to_string(kernels::stride(d) + 1) + " entries");
  }
  TruncatedTensor out(d);
  for (std::size_t k = 0; k < out.data_.size(); ++k) {
    if (!std::isfinite(flat[k + 1])) throw InvalidArgument("tensor entries must be finite");
    out.data_[k] = flat[k + 1];
  }
  return out;
}

template class TruncatedTensor<GroupTag>;
template class TruncatedTensor<AlgebraTag>;

namespace {

void require_same_dim(int a, int b) {
  if (a != b) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

namespace kernels {

void multiply(const double* x, const double* y, double* out, int d) {
  const double* xb = x;
  const double* yb = y;
  const double* xc = x + d;
  const double* yc = y + d;
  double* ob = out;
  double* oc = out + d;
  for (int i = 0; i < d; ++i) ob[i] = xb[i] + yb[i];
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const int k = i * d + j;
      oc[k] = xc[k] + yc[k] + xb[i] * yb[j];
    }
  }
}

void left_divide(const double* x, const double* y, double* out, int d) {
  const double* xb = x;
  const double* yb = y;
  const double* xc = x + d;
  const double* yc = y + d;
  double* ob = out;
  double* oc = out + d;
  for (int i = 0; i < d; ++i) ob[i] = yb[i] - xb[i];
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const int k = i * d + j;
      oc[k] = yc[k] - xc[k] + xb[i] * (xb[j] - yb[j]);
    }
  }
}

// Symmetric log entries below this multiple of the operand magnitude are
// rounding residue: the square root would turn 1e-17 into 3e-9.
constexpr double kSymmetricFloor = 1e-12;

double norm(const double* x, int d, NormVariant variant) {
  const double* b = x;
  const double* c = x + d;
  const bool sum = variant == NormVariant::sum;
  double acc = 0.0;
  auto add = [&](double v) { acc = sum ? acc + v : std::max(acc, v); };
  for (int i = 0; i < d; ++i) add(std::abs(b[i]));
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const double cij = c[i * d + j];
      const double cji = c[j * d + i];
      const double bb = b[i] * b[j];
      double sym = 0.5 * (cij + cji) - 0.5 * bb;
      if (std::abs(sym) <= kSymmetricFloor * (std::abs(cij) + std::abs(cji) + std::abs(bb))) sym = 0.0;
      if (i == j) {
        add(std::sqrt(std::abs(sym)));
      } else {
        const double anti = 0.5 * (cij - cji);
        add(std::sqrt(std::abs(sym + anti)));
        add(std::sqrt(std::abs(sym - anti)));
      }
    }
  }
  return acc;
}

double level1_norm(const double* x, int d, NormVariant variant) {
  double acc = 0.0;
  for (int i = 0; i < d; ++i) {
    acc = variant == NormVariant::sum ? acc + std::abs(x[i]) : std::max(acc, std::abs(x[i]));
  }
  return acc;
}

}  // namespace kernels

G2Element g2_unit(int dim) { return G2Element(dim); }

G2Element g2_multiply(const G2Element& x, const G2Element& y) {
  require_same_dim(x.dim(), y.dim());
  G2Element out(x.dim());
  kernels::multiply(x.raw().data(), y.raw().data(), out.raw().data(), x.dim());
  return out;
}

G2Element g2_inverse(const G2Element& x) {
  G2Element out(x.dim());
  out.level1() = -x.level1();
  out.level2() = -x.level2() + x.level1() * x.level1().transpose();
  return out;
}

G2Element g2_exp(const L2Element& l) {
  G2Element out(l.dim());
  out.level1() = l.level1();
  out.level2() = l.level2() + 0.5 * l.level1() * l.level1().transpose();
  return out;
}

L2Element g2_log(const G2Element& x) {
  L2Element out(x.dim());
  out.level1() = x.level1();
  out.level2() = x.level2() - 0.5 * x.level1() * x.level1().transpose();
  return out;
}

G2Element g2_dilate(const G2Element& x, double t) {
  // Scaling log coordinates by (t, t^2) scales group coordinates the same way.
  G2Element out = x;
  out.level1() *= t;
  out.level2() *= t * t;
  return out;
}

double homogeneous_norm(const G2Element& x, NormVariant variant) {
  return kernels::norm(x.raw().data(), x.dim(), variant);
}

double max_abs_difference(const G2Element& x, const G2Element& y) {
  require_same_dim(x.dim(), y.dim());
  double worst = 0.0;
  for (std::size_t k = 0; k < x.raw().size(); ++k) worst = std::max(worst, std::abs(x.raw()[k] - y.raw()[k]));
  return worst;
}

}  // namespace roughball
