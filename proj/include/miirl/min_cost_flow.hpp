#pragma once

#include <Eigen/Dense>

namespace miirl {

struct TransportResult {
    Eigen::MatrixXd flow;  // same shape as costs, row sums = row_marginals
    double cost = 0.0;
};

// Solves the transportation problem
//   min sum_ij w_ij c_ij   s.t.  sum_j w_ij = r_i, sum_i w_ij = c_j, w >= 0
// as a min-cost flow with a unit source/sink pair: outer edges carry the
// marginals at zero cost, inner edges carry the pairwise costs. Successive
// shortest paths with real-valued capacities; shortest-path ties break toward
// the lowest node index.
TransportResult solve_transportation(const Eigen::MatrixXd& costs,
                                     const Eigen::VectorXd& row_marginals,
                                     const Eigen::VectorXd& col_marginals);

}  // namespace miirl
