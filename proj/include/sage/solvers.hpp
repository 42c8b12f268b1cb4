#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sage/objectives.hpp"

namespace sage {

// Bounding solver configuration. The solver works on four levels
// (total objective, stealth, physical, cost); level 0 is capped by
// upper_bound_b0 and levels 1..3 by the problem budgets eps1..eps3.
struct BranchReduceConfig {
    // NaN: use the objective value at the in-control replay, which is always
    // an upper bound on the minimum because the replay is feasible.
    double upper_bound_b0 = std::numeric_limits<double>::quiet_NaN();
    Vector reduction_weights;  // (a0..a3) >= 0, not all zero; empty = (1,0,0,0)
    double gap_tolerance = 1e-4;
    int max_iterations = 200;
    int subproblem_restarts = 8;
    int subproblem_iterations = 300;
    std::uint64_t seed = 0;
};

// One record per dual/primal cycle. lambdas carry the dual sign convention
// (component-wise <= -reduction_weights); internally the solver works with
// the non-negative weights -lambdas.
struct DualIterate {
    int k = 0;
    Vector lambdas;   // (l0..l3) <= 0
    Vector u_levels;  // (total, stealth, physical, cost) at the subproblem solution
    double upper = 0.0;
    double lower = 0.0;
    double gap = 0.0;
    double cut_z = 0.0;
};

struct SolveResult {
    Matrix attack_inputs;  // T x q, inside the problem box
    ObjectiveBreakdown breakdown;
    int iterations = 0;
    bool converged = false;
    // stealth <= eps1, physical <= eps2, cost <= eps3 at attack_inputs
    bool feasible = true;
    std::optional<double> final_gap;         // bounding solver only
    std::vector<DualIterate> dual_iterates;  // bounding solver log
    std::vector<double> best_history;        // heuristics: best total so far
    std::string note;                        // diagnostics, e.g. LP failure detail
};

struct HeuristicConfig {
    enum class Method { projected_gradient, genetic };
    Method method = Method::projected_gradient;
    int max_iterations = 300;  // gradient steps per start / generations
    int restarts = 8;          // random starts beyond the in-control start
    double tolerance = 1e-9;   // relative step-size stop for descent
    int population = 64;
    double mutation_std = 0.1;      // relative to the box width
    double crossover_alpha = 0.5;   // blend range extension
    int tournament = 3;
    int elite = 2;
    std::uint64_t seed = 0;
};

// Dual cutting-plane bound tightener: alternates a relaxed dual linear
// program over accumulated cuts, a multi-start projected-gradient Lagrangian
// subproblem, and a relaxed primal linear program, until the bound gap closes
// or max_iterations is hit. Returns the best budget-feasible point seen.
// Requires a bounded box. A linear-program failure is reported in note with
// the violating cut set and stops the loop early.
SolveResult solve_branch_reduce(const AttackProblem& problem, const BranchReduceConfig& cfg);

// Multi-start projected gradient on the penalized total. Start 0 is the
// in-control replay; the rest mix box corners and uniform draws. Rejects the
// indicator cost mode when it would enter the objective (use the genetic
// solver for that); requires a bounded box.
SolveResult solve_projected_gradient(const AttackProblem& problem, const HeuristicConfig& cfg);

// Real-valued genetic algorithm: tournament selection (ties to the lower
// index), blend crossover, Gaussian mutation clipped to the box, elitism.
// Population seeded around the in-control replay. Handles every cost mode.
SolveResult solve_genetic(const AttackProblem& problem, const HeuristicConfig& cfg);

// Exhaustive evaluation over the axis-aligned grid with the given spacing,
// anchored at the lower box corner. Rejects grids above 10^7 points naming
// the computed count. Ties resolve to the lexicographically smallest point
// in (step, channel) scan order.
SolveResult brute_force_oracle(const AttackProblem& problem, double grid_resolution);

struct TunerConfig {
    double ae_threshold = 3.0;   // minimum acceptable attack effectivity
    double ap_threshold = 0.5;   // maximum acceptable average perturbation
    double ac_threshold = 4.0;   // maximum acceptable attack cost
    int max_iter = 12;           // adjustment budget
    double lambda1_min = 0.0, lambda1_max = 1.0;
    double lambda2_min = 0.0, lambda2_max = 1.0;
    double lambda3_min = 0.0, lambda3_max = 1.0;
    // window-std stealth multiplier is kept at corr_ratio * lambda1 while
    // tuning, so problems with a split stealth weighting tune both together
    double corr_ratio = 0.0;
};

struct TunerMetrics {
    double ae = 0.0;
    double ap = 0.0;
    double ac = 0.0;
};

// Scores a candidate solution. Supplied by the caller so attacks can be
// scored on the actual system response rather than the fitted model.
using TunerEvaluator = std::function<TunerMetrics(const AttackProblem&, const SolveResult&)>;

struct TunerResult {
    double lambda1 = 0.0, lambda2 = 0.0, lambda3 = 0.0;
    SolveResult solution;
    TunerMetrics metrics;
    int iterations = 0;  // interval adjustments applied
    int solves = 0;
    bool thresholds_met = false;
    // an interval collapsed to a point while its threshold was still unmet
    bool degenerate_interval = false;
};

// Interval-halving multiplier search. Each round solves the problem at the
// current multipliers and scores it; low effectivity pulls the lambda1/2
// upper endpoints to the current values, high perturbation pulls the lower
// endpoints, high cost pulls the lambda3 lower endpoint. New multipliers are
// the midpoints of the intervals as they were before the round's updates.
// Stops once all thresholds hold or the adjustment budget is exhausted.
TunerResult tune_lambdas(AttackProblem problem, const TunerConfig& tuner,
                         const HeuristicConfig& solver, const TunerEvaluator& evaluate);

}  // namespace sage
