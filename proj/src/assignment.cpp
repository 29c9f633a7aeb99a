#include "banktweak/assignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace banktweak {

namespace {

// Cost assigned to infeasible cells. Large enough to dominate any sum of
// feasible costs, small enough that double precision still resolves
// feasible-cost differences on top of it.
constexpr double kInfeasible = 1.0e7;

struct CoreSolution {
    std::vector<int> row_to_col;  // -1 = unmatched after stripping padding
    double feasible_cost = 0.0;
    int cardinality = 0;
};

// Shortest-augmenting-path Hungarian on a dense matrix, rows <= cols.
// Infeasible cells carry kInfeasible, so minimizing total cost first
// maximizes the number of feasible cells used.
CoreSolution solve_padded(const Eigen::MatrixXd& cost, const BoolMatrix& feasible) {
    const int nr = static_cast<int>(cost.rows());
    const int nc = static_cast<int>(cost.cols());

    const bool transposed = nr > nc;
    const int n = transposed ? nc : nr;  // rows of the solved problem
    const int m = transposed ? nr : nc;

    auto cell = [&](int i, int j) -> double {
        const int r = transposed ? j : i;
        const int c = transposed ? i : j;
        return feasible(r, c) ? cost(r, c) : kInfeasible;
    };

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cell(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    CoreSolution sol;
    sol.row_to_col.assign(nr, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j] == 0) continue;
        const int si = p[j] - 1;  // solved-problem row
        const int r = transposed ? (j - 1) : si;
        const int c = transposed ? si : (j - 1);
        if (feasible(r, c)) {
            sol.row_to_col[r] = c;
            sol.feasible_cost += cost(r, c);
            ++sol.cardinality;
        }
    }
    return sol;
}

// Solves the subproblem over the given row/col subsets (index lists into
// the original matrix).
CoreSolution solve_subset(const Eigen::MatrixXd& cost, const BoolMatrix& feasible,
                          const std::vector<int>& rows, const std::vector<int>& cols) {
    const int nr = static_cast<int>(rows.size());
    const int nc = static_cast<int>(cols.size());
    if (nr == 0 || nc == 0) return CoreSolution{std::vector<int>(nr, -1), 0.0, 0};
    Eigen::MatrixXd sub(nr, nc);
    BoolMatrix subf(nr, nc);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nc; ++j) {
            sub(i, j) = cost(rows[i], cols[j]);
            subf(i, j) = feasible(rows[i], cols[j]);
        }
    return solve_padded(sub, subf);
}

}  // namespace

std::vector<std::pair<int, int>> hungarian_assign(const Eigen::MatrixXd& cost,
                                                  const BoolMatrix& feasible) {
    const int nr = static_cast<int>(cost.rows());
    const int nc = static_cast<int>(cost.cols());
    if (feasible.rows() != nr || feasible.cols() != nc)
        throw std::invalid_argument("hungarian_assign: shape mismatch");
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nc; ++j)
            if (feasible(i, j) && !std::isfinite(cost(i, j)))
                throw std::invalid_argument("hungarian_assign: non-finite feasible cost");
    if (nr == 0 || nc == 0) return {};

    std::vector<int> all_rows(nr), all_cols(nc);
    for (int i = 0; i < nr; ++i) all_rows[i] = i;
    for (int j = 0; j < nc; ++j) all_cols[j] = j;

    const CoreSolution best = solve_subset(cost, feasible, all_rows, all_cols);
    const double tol = 1e-9 * std::max(1.0, std::abs(best.feasible_cost));

    // Fix rows in order, choosing for each the lowest column that still
    // admits a completion with the optimal cardinality and total cost.
    std::vector<std::pair<int, int>> result;
    std::vector<int> free_cols = all_cols;
    double fixed_cost = 0.0;
    int fixed_card = 0;

    for (int r = 0; r < nr; ++r) {
        std::vector<int> later_rows;
        for (int i = r + 1; i < nr; ++i) later_rows.push_back(i);

        int chosen = -1;
        for (int c : free_cols) {
            if (!feasible(r, c)) continue;
            std::vector<int> rest_cols;
            for (int j : free_cols)
                if (j != c) rest_cols.push_back(j);
            const CoreSolution sub = solve_subset(cost, feasible, later_rows, rest_cols);
            const double total = fixed_cost + cost(r, c) + sub.feasible_cost;
            const int card = fixed_card + 1 + sub.cardinality;
            if (card == best.cardinality && std::abs(total - best.feasible_cost) <= tol) {
                chosen = c;
                break;
            }
        }
        if (chosen >= 0) {
            result.emplace_back(r, chosen);
            fixed_cost += cost(r, chosen);
            ++fixed_card;
            free_cols.erase(std::find(free_cols.begin(), free_cols.end(), chosen));
        }
        // else: row r stays unmatched in the canonical optimum.
    }
    return result;
}

std::vector<std::pair<int, int>> hungarian_assign(const Eigen::MatrixXd& cost) {
    BoolMatrix feasible = BoolMatrix::Constant(cost.rows(), cost.cols(), true);
    return hungarian_assign(cost, feasible);
}

}  // namespace banktweak
