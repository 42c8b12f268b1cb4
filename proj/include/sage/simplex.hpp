#pragma once

// Dense two-phase simplex for the small LPs used by the bounding solver.
// Solves   maximize c' x   subject to  A x <= b,  x >= 0.
// b may be negative; phase one introduces artificials where needed.

#include "sage/system_model.hpp"

namespace sage {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Vector x;             // primal solution when optimal
    double objective = 0; // c' x when optimal
};

// Bland's rule throughout, so the method cannot cycle.
LpResult solve_lp(const Matrix& constraints, const Vector& rhs, const Vector& objective);

}  // namespace sage
