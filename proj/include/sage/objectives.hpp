#pragma once

#include <limits>

#include "sage/system_model.hpp"

namespace sage {

enum class Norm { l1, l2, squared_l2 };

// What the defender is assumed to watch; the stealth term mirrors it.
struct MonitorSpec {
    enum class Variant { identity, identity_plus_variance, hotelling_t2, sliding_window_std };
    Variant variant = Variant::identity;
    Vector t2_mean;     // hotelling_t2 only
    Matrix t2_inv_cov;  // hotelling_t2 only, symmetric positive semidefinite
};

// Physical plausibility of the injected sequence.
struct ConstraintSpec {
    enum class Variant { diff_l2, diff_l1, magnitude_l2 };
    Variant variant = Variant::diff_l2;
};

// Attacker effort. Indicator mode charges c_j once if channel j is touched
// beyond tau_j; continuous mode charges c_j * mean_t |delta u_j| instead.
struct CostSpec {
    enum class Mode { indicator, continuous };
    Mode mode = Mode::indicator;
    Vector channel_costs;              // q
    double attacked_threshold = -1.0;  // indicator tau; negative = 1e-9 * channel in-control std
};

// Full instance of the attack-generation problem. Multipliers drive the
// penalized objective; budgets are the hard caps the constrained solver
// (branch-and-reduce) enforces on top of it.
struct AttackProblem {
    LinearSystemModel model;
    Vector reference_output;  // p
    Matrix in_control;        // T x q replay baseline
    MonitorSpec monitor;
    ConstraintSpec constraint;
    CostSpec cost;
    Norm damage_norm = Norm::squared_l2;
    Norm stealth_norm = Norm::squared_l2;
    double lambda1 = 0.0;       // stealth multiplier
    double lambda1_corr = 0.0;  // sliding-window-std stealth multiplier
    double lambda2 = 0.0;       // physical multiplier
    double lambda3 = 0.0;       // cost multiplier
    double eps1 = std::numeric_limits<double>::infinity();
    double eps2 = std::numeric_limits<double>::infinity();
    double eps3 = std::numeric_limits<double>::infinity();
    Vector box_lower;  // q, per-channel bounds on attack inputs
    Vector box_upper;  // q
    int window = 100;         // sliding-window length n
    int warmup_discard = -1;  // leading steps excluded from the window term; negative = 2*window

    int horizon() const { return static_cast<int>(in_control.rows()); }
    int channels() const { return static_cast<int>(in_control.cols()); }
    int effective_warmup() const { return warmup_discard < 0 ? 2 * window : warmup_discard; }
};

// Term values before weighting; total is the lambda-weighted sum with damage
// entering as-is (it is already negative for damaging attacks).
struct ObjectiveBreakdown {
    double damage = 0.0;
    double stealth = 0.0;
    double correlation_stealth = 0.0;
    double physical = 0.0;
    double cost = 0.0;
    double total = 0.0;
};

// Throws std::invalid_argument on dimension mismatches, negative multipliers,
// non-positive budgets, inverted box bounds, or window/horizon conflicts.
void validate_problem(const AttackProblem& problem);

// -|| Y_ref - offset - beta * u_t ||_p summed over the horizon.
double damage_term(const AttackProblem& problem, const Matrix& attack);

// Monitor-view distance between in-control and attack inputs. The
// sliding_window_std variant delegates to corr_stealth_term.
double stealth_term(const AttackProblem& problem, const Matrix& attack);

// Sum over valid steps of the squared l2 difference between per-channel
// sliding-window standard deviations of in-control and attack inputs.
// Windows end at t and need t >= window - 1; the first effective_warmup()
// steps are excluded from the sum. Requires horizon > window + warmup.
double corr_stealth_term(const AttackProblem& problem, const Matrix& attack);

// Smoothness / magnitude of the attack sequence per the constraint variant.
// Difference variants require a horizon of at least 2 steps.
double physical_term(const AttackProblem& problem, const Matrix& attack);

// Attack cost per the cost spec.
double cost_term(const AttackProblem& problem, const Matrix& attack);

// All terms plus the penalized total.
ObjectiveBreakdown sage_objective(const AttackProblem& problem, const Matrix& attack);

// Gradient of the penalized total w.r.t. every attack entry (T x q). The
// indicator cost mode is non-differentiable and rejected; continuous mode uses
// the sign subgradient. Norm l1/l2 use sign/unit subgradients where needed.
Matrix sage_gradient(const AttackProblem& problem, const Matrix& attack);

// Hotelling T^2 statistic of one observation given the inverse covariance.
double hotelling_t2_statistic(const Vector& x, const Vector& mean, const Matrix& inv_covariance);

}  // namespace sage
