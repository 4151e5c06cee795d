#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace roughball {

struct TransportResult {
  double cost = 0.0;                // sum of plan * cost
  Eigen::MatrixXd plan;             // supply x demand
  Eigen::VectorXd supply_potential; // dual variables: cost(i,j) >= u_i + v_j, equality on the support
  Eigen::VectorXd demand_potential;
  std::size_t pivots = 0;
};

/**
 * Balanced transportation problem min <P, C> subject to P 1 = a, P^T 1 = b, P >= 0,
 * solved exactly by a primal network simplex on the bipartite graph with a
 * strongly feasible spanning tree and block-search pricing.
 *
 * a and b must be nonnegative and have equal sums to within 1e-12 (relative).
 */
TransportResult solve_transport(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& cost);

}  // namespace roughball
