#include "roughball/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "roughball/error.hpp"

namespace roughball {

namespace {

class NetworkSimplex {
 public:
  NetworkSimplex(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& cost)
      : m_(static_cast<int>(a.size())), n_(static_cast<int>(b.size())), cost_(cost) {
    nodes_ = m_ + n_ + 1;
    root_ = m_ + n_;
    real_arcs_ = static_cast<std::size_t>(m_) * static_cast<std::size_t>(n_);
    const std::size_t arcs = real_arcs_ + static_cast<std::size_t>(m_ + n_);
    source_.resize(arcs);
    target_.resize(arcs);
    arc_cost_.resize(arcs);
    flow_.assign(arcs, 0.0);
    in_tree_.assign(arcs, false);
    double max_cost = 0.0;
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j) {
        const std::size_t e = static_cast<std::size_t>(i) * n_ + j;
        source_[e] = i;
        target_[e] = m_ + j;
        arc_cost_[e] = cost(i, j);
        max_cost = std::max(max_cost, std::abs(cost(i, j)));
      }
    const double art = (max_cost + 1.0) * static_cast<double>(m_ + n_);
    tolerance_ = 1e-13 * art;
    tree_.assign(static_cast<std::size_t>(nodes_), {});
    for (int v = 0; v < m_ + n_; ++v) {
      const std::size_t e = real_arcs_ + static_cast<std::size_t>(v);
      arc_cost_[e] = art;
      if (v < m_ && a[v] > 0.0) {
        source_[e] = v;
        target_[e] = root_;
        flow_[e] = a[v];
      } else {
        source_[e] = root_;
        target_[e] = v;
        flow_[e] = v < m_ ? 0.0 : b[v - m_];
      }
      link(e);
    }
    parent_.assign(static_cast<std::size_t>(nodes_), -1);
    pred_.assign(static_cast<std::size_t>(nodes_), 0);
    up_.assign(static_cast<std::size_t>(nodes_), false);
    depth_.assign(static_cast<std::size_t>(nodes_), 0);
    pi_.assign(static_cast<std::size_t>(nodes_), 0.0);
    block_ = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(static_cast<double>(arcs))));
    rebuild();
  }

  std::size_t run() {
    std::size_t pivots = 0;
    const std::size_t limit = 50 * source_.size() + 1000;
    std::size_t entering;
    while (find_entering(entering)) {
      pivot(entering);
      if (++pivots > limit) throw NumericalError("network simplex did not converge");
    }
    return pivots;
  }

  double flow(int i, int j) const { return flow_[static_cast<std::size_t>(i) * n_ + j]; }
  double potential(int v) const { return pi_[static_cast<std::size_t>(v)]; }

 private:
  void link(std::size_t e) {
    in_tree_[e] = true;
    tree_[static_cast<std::size_t>(source_[e])].push_back(e);
    tree_[static_cast<std::size_t>(target_[e])].push_back(e);
  }

  void unlink(std::size_t e) {
    in_tree_[e] = false;
    for (int v : {source_[e], target_[e]}) {
      auto& list = tree_[static_cast<std::size_t>(v)];
      list.erase(std::find(list.begin(), list.end(), e));
    }
  }

  /// Parent pointers, depths and potentials from the tree adjacency.
  void rebuild() {
    std::deque<int> queue{root_};
    parent_[static_cast<std::size_t>(root_)] = -1;
    depth_[static_cast<std::size_t>(root_)] = 0;
    pi_[static_cast<std::size_t>(root_)] = 0.0;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      const auto vi = static_cast<std::size_t>(v);
      for (std::size_t e : tree_[vi]) {
        const int w = source_[e] == v ? target_[e] : source_[e];
        if (w == parent_[vi]) continue;
        const auto wi = static_cast<std::size_t>(w);
        parent_[wi] = v;
        pred_[wi] = e;
        up_[wi] = source_[e] == w;
        depth_[wi] = depth_[vi] + 1;
        pi_[wi] = up_[wi] ? pi_[vi] - arc_cost_[e] : pi_[vi] + arc_cost_[e];
        queue.push_back(w);
      }
    }
  }

  double reduced(std::size_t e) const {
    return arc_cost_[e] + pi_[static_cast<std::size_t>(source_[e])] - pi_[static_cast<std::size_t>(target_[e])];
  }

  bool find_entering(std::size_t& entering) {
    const std::size_t arcs = source_.size();
    double best = -tolerance_;
    bool found = false;
    std::size_t count = 0;
    for (std::size_t k = 0; k < arcs; ++k) {
      const std::size_t e = (next_ + k) % arcs;
      if (!in_tree_[e]) {
        const double r = reduced(e);
        if (r < best) {
          best = r;
          entering = e;
          found = true;
        }
      }
      if (++count == block_) {
        if (found) {
          next_ = (e + 1) % arcs;
          return true;
        }
        count = 0;
      }
    }
    return found;
  }

  void pivot(std::size_t in) {
    const int first = source_[in];
    const int second = target_[in];
    int u = first, v = second;
    while (u != v) {
      if (depth_[static_cast<std::size_t>(u)] >= depth_[static_cast<std::size_t>(v)])
        u = parent_[static_cast<std::size_t>(u)];
      else
        v = parent_[static_cast<std::size_t>(v)];
    }
    const int join = u;
    constexpr double inf = std::numeric_limits<double>::infinity();
    double delta = inf;
    int out = -1;
    for (int w = first; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto wi = static_cast<std::size_t>(w);
      const double d = up_[wi] ? flow_[pred_[wi]] : inf;
      if (d < delta) {
        delta = d;
        out = w;
      }
    }
    for (int w = second; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto wi = static_cast<std::size_t>(w);
      const double d = up_[wi] ? inf : flow_[pred_[wi]];
      if (d <= delta) {
        delta = d;
        out = w;
      }
    }
    if (out < 0) throw NumericalError("transport problem is unbounded");
    flow_[in] += delta;
    for (int w = first; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto wi = static_cast<std::size_t>(w);
      flow_[pred_[wi]] += up_[wi] ? -delta : delta;
    }
    for (int w = second; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto wi = static_cast<std::size_t>(w);
      flow_[pred_[wi]] += up_[wi] ? delta : -delta;
    }
    unlink(pred_[static_cast<std::size_t>(out)]);
    link(in);
    rebuild();
  }

  int m_, n_, nodes_, root_;
  std::size_t real_arcs_;
  const Eigen::MatrixXd& cost_;
  std::vector<int> source_, target_;
  std::vector<double> arc_cost_, flow_;
  std::vector<bool> in_tree_;
  std::vector<std::vector<std::size_t>> tree_;
  std::vector<int> parent_, depth_;
  std::vector<std::size_t> pred_;
  std::vector<bool> up_;
  std::vector<double> pi_;
  double tolerance_ = 0.0;
  std::size_t block_ = 0;
  std::size_t next_ = 0;
};

}  // namespace

TransportResult solve_transport(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& cost) {
  if (a.size() == 0 || b.size() == 0) throw InvalidArgument("transport needs nonempty marginals");
  if (cost.rows() != a.size() || cost.cols() != b.size()) throw InvalidArgument("cost matrix shape mismatch");
  if ((a.array() < 0.0).any() || (b.array() < 0.0).any()) throw InvalidArgument("marginal weights must be >= 0");
  if (!cost.allFinite()) throw InvalidArgument("cost matrix must be finite");
  const double sa = a.sum(), sb = b.sum();
  if (!(sa > 0.0) || std::abs(sa - sb) > 1e-12 * std::max(sa, sb)) {
    throw InvalidArgument("marginal weights must have equal positive sums");
  }
  // Match the sums exactly so the artificial arcs can drain completely.
  Eigen::VectorXd bb = b * (sa / sb);
  bb[bb.size() - 1] = std::max(0.0, sa - (bb.sum() - bb[bb.size() - 1]));

  NetworkSimplex ns(a, bb, cost);
  TransportResult r;
  r.pivots = ns.run();
  const auto m = a.size(), n = b.size();
  r.plan.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) r.plan(i, j) = std::max(0.0, ns.flow(static_cast<int>(i), static_cast<int>(j)));
  r.cost = (r.plan.array() * cost.array()).sum();

  // Tree potentials, then a double c-transform so both vectors sit on the scale of the costs.
  Eigen::VectorXd v(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j] = ns.potential(static_cast<int>(m + j));
  Eigen::VectorXd u = (cost.rowwise() - v.transpose()).rowwise().minCoeff();
  v = (cost.colwise() - u).colwise().minCoeff().transpose();
  u = (cost.rowwise() - v.transpose()).rowwise().minCoeff();
  r.supply_potential = u;
  r.demand_potential = v;
  return r;
}

}  // namespace roughball
