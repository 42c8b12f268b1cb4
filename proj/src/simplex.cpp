#include "sage/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sage {

namespace {

constexpr double kTol = 1e-9;

struct Tableau {
    Matrix body;             // m x (cols), last column is the RHS
    std::vector<int> basis;  // basic variable per row
    int cols = 0;            // total variable count (without RHS)

    double& rhs(int i) { return body(i, cols); }

    void pivot(int row, int col) {
        body.row(row) /= body(row, col);
        for (int i = 0; i < body.rows(); ++i) {
            if (i == row) continue;
            const double f = body(i, col);
            if (f != 0.0) body.row(i) -= f * body.row(row);
        }
        basis[static_cast<size_t>(row)] = col;
    }
};

// Runs simplex iterations for maximizing the given objective over the tableau.
// Returns false if unbounded. Bland's rule: smallest eligible entering index,
// ratio ties broken by smallest basic variable index.
bool run_phase(Tableau& t, const Vector& c, int active_cols) {
    const int m = static_cast<int>(t.body.rows());
    for (;;) {
        // reduced costs: c_j - c_B' B^{-1} A_j
        Vector dual = Vector::Zero(m);
        for (int i = 0; i < m; ++i) dual(i) = c(t.basis[static_cast<size_t>(i)]);
        int enter = -1;
        for (int j = 0; j < active_cols; ++j) {
            double red = c(j);
            for (int i = 0; i < m; ++i) red -= dual(i) * t.body(i, j);
            if (red > kTol) {
                enter = j;
                break;
            }
        }
        if (enter < 0) return true;
        int leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            const double a = t.body(i, enter);
            if (a > kTol) {
                const double ratio = t.rhs(i) / a;
                if (ratio < best_ratio - kTol ||
                    (ratio < best_ratio + kTol &&
                     (leave < 0 || t.basis[static_cast<size_t>(i)] <
                                       t.basis[static_cast<size_t>(leave)]))) {
                    best_ratio = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) return false;
        t.pivot(leave, enter);
    }
}

}  // namespace

LpResult solve_lp(const Matrix& constraints, const Vector& rhs, const Vector& objective) {
    const int m = static_cast<int>(constraints.rows());
    const int n = static_cast<int>(constraints.cols());
    if (rhs.size() != m || objective.size() != n)
        throw std::invalid_argument("solve_lp: dimension mismatch");

    // Count artificials: one per row with negative RHS.
    int n_art = 0;
    for (int i = 0; i < m; ++i)
        if (rhs(i) < 0) ++n_art;

    Tableau t;
    t.cols = n + m + n_art;
    t.body = Matrix::Zero(m, t.cols + 1);
    t.basis.resize(static_cast<size_t>(m));

    int art = n + m;
    for (int i = 0; i < m; ++i) {
        if (rhs(i) >= 0) {
            t.body.block(i, 0, 1, n) = constraints.row(i);
            t.body(i, n + i) = 1.0;  // slack
            t.rhs(i) = rhs(i);
            t.basis[static_cast<size_t>(i)] = n + i;
        } else {
            // negate the row so the RHS is non-negative; slack becomes -1
            t.body.block(i, 0, 1, n) = -constraints.row(i);
            t.body(i, n + i) = -1.0;
            t.body(i, art) = 1.0;
            t.rhs(i) = -rhs(i);
            t.basis[static_cast<size_t>(i)] = art;
            ++art;
        }
    }

    LpResult result;
    if (n_art > 0) {
        Vector phase1 = Vector::Zero(t.cols);
        phase1.segment(n + m, n_art).setConstant(-1.0);
        if (!run_phase(t, phase1, t.cols))
            throw std::logic_error("solve_lp: phase one unbounded");
        double infeas = 0.0;
        for (int i = 0; i < m; ++i)
            if (t.basis[static_cast<size_t>(i)] >= n + m) infeas += t.rhs(i);
        if (infeas > 1e-7) {
            result.status = LpStatus::infeasible;
            return result;
        }
        // drive zero-level artificials out of the basis where possible
        for (int i = 0; i < m; ++i) {
            if (t.basis[static_cast<size_t>(i)] < n + m) continue;
            int col = -1;
            for (int j = 0; j < n + m; ++j)
                if (std::abs(t.body(i, j)) > kTol) {
                    col = j;
                    break;
                }
            if (col >= 0) t.pivot(i, col);
            // otherwise the row is redundant; the artificial stays basic at zero
        }
    }

    Vector phase2 = Vector::Zero(t.cols);
    phase2.head(n) = objective;
    // artificials must never re-enter: restrict pricing to the real columns
    if (!run_phase(t, phase2, n + m)) {
        result.status = LpStatus::unbounded;
        return result;
    }

    result.status = LpStatus::optimal;
    result.x = Vector::Zero(n);
    for (int i = 0; i < m; ++i)
        if (t.basis[static_cast<size_t>(i)] < n) result.x(t.basis[static_cast<size_t>(i)]) = t.rhs(i);
    result.objective = objective.dot(result.x);
    return result;
}

}  // namespace sage
