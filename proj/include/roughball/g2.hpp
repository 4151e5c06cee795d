#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace roughball {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/**
 * Element of the truncated tensor algebra T^(2)(R^d) with a fixed scalar part.
 *
 * Memory layout
 * =============
 *   data = [ b_1 ... b_d | c_11 c_12 ... c_1d c_21 ... c_dd ]
 *
 * The level-2 block is row major, so c_ij = <x, e_i (x) e_j>. A G2Element has
 * scalar part 1 (group), an L2Element has scalar part 0 (Lie algebra). Both
 * share this storage; the scalar part is never stored.
 */
template <typename Tag>
class TruncatedTensor {
 public:
  TruncatedTensor() = default;

  /// Zero level-1 and level-2 parts. For G2Element this is the group unit.
  explicit TruncatedTensor(int dim);

  /// Checked constructor: dimensions must agree and all entries be finite.
  TruncatedTensor(const Eigen::VectorXd& level1, const Eigen::MatrixXd& level2);

  int dim() const noexcept { return dim_; }

  Eigen::Map<const Eigen::VectorXd> level1() const { return {data_.data(), dim_}; }
  Eigen::Map<Eigen::VectorXd> level1() { return {data_.data(), dim_}; }
  Eigen::Map<const RowMatrix> level2() const { return {data_.data() + dim_, dim_, dim_}; }
  Eigen::Map<RowMatrix> level2() { return {data_.data() + dim_, dim_, dim_}; }

  std::span<const double> raw() const noexcept { return data_; }
  std::span<double> raw() noexcept { return data_; }

  /// Flat serialisation [d, b_1..b_d, c_11..c_dd].
  std::vector<double> to_flat() const;
  static TruncatedTensor from_flat(std::span<const double> flat);

  bool operator==(const TruncatedTensor&) const = default;

 private:
  int dim_ = 0;
  std::vector<double> data_;
};

struct GroupTag {};
struct AlgebraTag {};

using G2Element = TruncatedTensor<GroupTag>;
using L2Element = TruncatedTensor<AlgebraTag>;

/// The two explicit homogeneous norms built from log coordinates.
enum class NormVariant { sum, sup };

/// Homogeneous norm used wherever the Carnot-Caratheodory norm appears.
inline constexpr NormVariant kDefaultNorm = NormVariant::sum;

G2Element g2_unit(int dim);

/// Group product (1,b,c) x (1,b',c') = (1, b+b', c+c'+b (x) b').
G2Element g2_multiply(const G2Element& x, const G2Element& y);

/// (1,b,c)^{-1} = (1, -b, -c + b (x) b).
G2Element g2_inverse(const G2Element& x);

G2Element g2_exp(const L2Element& l);
L2Element g2_log(const G2Element& x);

/// Dilation delta_t acting on log coordinates (level k scaled by t^k).
G2Element g2_dilate(const G2Element& x, double t);

double homogeneous_norm(const G2Element& x, NormVariant variant = kDefaultNorm);

/// Largest entry of |x - y| over both levels.
double max_abs_difference(const G2Element& x, const G2Element& y);

namespace kernels {

// Raw kernels on the flat layout, used by hot loops in the rough path code.
// Output buffers may not alias inputs.

inline std::size_t stride(int d) { return static_cast<std::size_t>(d) * (d + 1); }

void multiply(const double* x, const double* y, double* out, int d);

/// out = x^{-1} (x) y without materialising the inverse.
void left_divide(const double* x, const double* y, double* out, int d);

double norm(const double* x, int d, NormVariant variant);

/// Homogeneous norm restricted to the level-1 terms (the path-level part).
double level1_norm(const double* x, int d, NormVariant variant);

}  // namespace kernels

}  // namespace roughball
