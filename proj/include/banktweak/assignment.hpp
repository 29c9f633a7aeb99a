#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace banktweak {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Minimum-cost assignment over the feasible cells of a rectangular cost
// matrix. Among all maximum-cardinality assignments the returned one has
// minimum total cost, and ties are broken lexicographically: row 0 takes
// the lowest admissible column, then row 1, and so on. Rows that cannot
// be matched in any optimal assignment are left out.
std::vector<std::pair<int, int>> hungarian_assign(const Eigen::MatrixXd& cost,
                                                  const BoolMatrix& feasible);

// Convenience overload with every cell feasible.
std::vector<std::pair<int, int>> hungarian_assign(const Eigen::MatrixXd& cost);

}  // namespace banktweak
