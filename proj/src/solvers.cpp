#include "sage/solvers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "sage/rng.hpp"
#include "sage/simplex.hpp"

namespace sage {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite_box(const AttackProblem& p, const char* who) {
    const Eigen::Index q = p.in_control.cols();
    if (p.box_lower.size() != q || p.box_upper.size() != q ||
        !p.box_lower.allFinite() || !p.box_upper.allFinite())
        throw std::invalid_argument(std::string(who) + ": a bounded box is required");
}

Matrix clip_box(const AttackProblem& p, Matrix x) {
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        x.col(j) = x.col(j).cwiseMax(p.box_lower(j)).cwiseMin(p.box_upper(j));
    return x;
}

// Random restart point: each coordinate is the lower bound, the upper bound,
// or uniform inside, with probability 1/3 each. Covers box corners on small
// instances while still sampling the interior.
Matrix corner_mixed_start(const AttackProblem& p, Rng& rng) {
    const int T = p.horizon(), q = p.channels();
    Matrix x(T, q);
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < q; ++j) {
            const double lo = p.box_lower(j), hi = p.box_upper(j);
            const double r = rng.uniform();
            if (r < 1.0 / 3.0)
                x(t, j) = lo;
            else if (r < 2.0 / 3.0)
                x(t, j) = hi;
            else
                x(t, j) = lo + rng.uniform() * (hi - lo);
        }
    return x;
}

bool within_budget(double value, double budget) {
    if (std::isinf(budget)) return true;
    return value <= budget + 1e-9 * (1.0 + std::abs(budget));
}

bool budgets_ok(const AttackProblem& p, const ObjectiveBreakdown& b) {
    return within_budget(b.stealth, p.eps1) && within_budget(b.physical, p.eps2) &&
           within_budget(b.cost, p.eps3);
}

struct Descent {
    Matrix x;
    double value = 0.0;
    bool converged = false;
    int steps = 0;
};

// Spectral projected gradient: Barzilai-Borwein steps with a non-monotone
// Armijo line search over the last few accepted values. The BB step tracks
// the curvature actually seen along the trajectory, so a single stiff term
// cannot pin the whole descent to a step far smaller than the flat
// directions need. The search moves along the feasible direction
// P(x - s g) - x, which stays inside the box for any fraction of the step.
Descent pg_descend(const std::function<double(const Matrix&)>& value,
                   const std::function<Matrix(const Matrix&)>& grad, const AttackProblem& p,
                   Matrix x0, int max_iter, double tol) {
    constexpr int kMemory = 10;
    constexpr int kStallWindow = 50;
    constexpr double kStepMin = 1e-12, kStepMax = 1e8;
    Descent d;
    d.x = clip_box(p, std::move(x0));
    d.value = value(d.x);
    Matrix g = grad(d.x);
    Matrix best_x = d.x;
    double best_f = d.value;
    int last_improve = 0;
    std::array<double, kMemory> recent;
    recent.fill(d.value);
    double step = 1.0;
    for (int it = 0; it < max_iter; ++it) {
        const double scale = 1.0 + d.x.cwiseAbs().maxCoeff();
        // stationarity: the unit projected gradient step goes nowhere
        if ((clip_box(p, d.x - g) - d.x).cwiseAbs().maxCoeff() <= tol * scale) {
            d.converged = true;
            break;
        }
        // near kinks of the l1 terms the iterates bounce without making
        // progress; a long stretch with no improvement in the best value is
        // the practical stationarity signal there
        if (it - last_improve >= kStallWindow) {
            d.converged = true;
            break;
        }
        const Matrix dir = clip_box(p, d.x - step * g) - d.x;
        const double gd = (g.array() * dir.array()).sum();
        if (!(gd < 0.0)) {  // stationary at this step length
            d.converged = true;
            break;
        }
        const double fref = *std::max_element(recent.begin(), recent.end());
        double alpha = 1.0;
        bool accepted = false;
        Matrix xn;
        double fn = 0.0;
        for (int bt = 0; bt < 60; ++bt) {
            xn = d.x + alpha * dir;
            fn = value(xn);
            if (fn <= fref + 1e-4 * alpha * gd) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {  // numerical floor, no acceptable decrease left
            d.converged = true;
            break;
        }
        Matrix gn = grad(xn);
        const Matrix dx = xn - d.x;
        const double ss = (dx.array() * dx.array()).sum();
        const double sy = (dx.array() * (gn - g).array()).sum();
        // BB step 1; negative curvature along the move means the quadratic
        // model is useless, so take the longest allowed step instead
        step = sy > 0.0 ? std::clamp(ss / sy, kStepMin, kStepMax) : kStepMax;
        d.x = std::move(xn);
        d.value = fn;
        g = std::move(gn);
        ++d.steps;
        recent[static_cast<std::size_t>(d.steps % kMemory)] = fn;
        if (fn < best_f - 1e-10 * (1.0 + std::abs(best_f))) {
            best_f = fn;
            best_x = d.x;
            last_improve = it;
        } else if (fn < best_f) {
            best_f = fn;
            best_x = d.x;
        }
    }
    if (best_f < d.value) {  // the non-monotone search may end off the best point
        d.x = best_x;
        d.value = best_f;
    }
    return d;
}

void finish(const AttackProblem& p, SolveResult& r) {
    r.breakdown = sage_objective(p, r.attack_inputs);
    r.feasible = budgets_ok(p, r.breakdown);
}

bool indicator_cost_active(const AttackProblem& p) {
    return p.cost.mode == CostSpec::Mode::indicator && p.cost.channel_costs.size() != 0;
}

}  // namespace

SolveResult solve_projected_gradient(const AttackProblem& problem, const HeuristicConfig& cfg) {
    validate_problem(problem);
    require_finite_box(problem, "solve_projected_gradient");
    if (cfg.max_iterations < 1 || cfg.restarts < 0)
        throw std::invalid_argument("solve_projected_gradient: bad iteration/restart counts");
    if (indicator_cost_active(problem) && problem.lambda3 > 0)
        throw std::invalid_argument(
            "solve_projected_gradient: indicator cost mode is not differentiable; "
            "use the genetic solver");

    auto value = [&problem](const Matrix& x) { return sage_objective(problem, x).total; };
    auto grad = [&problem](const Matrix& x) { return sage_gradient(problem, x); };

    SolveResult result;
    double best_value = kInf;
    for (int s = 0; s <= cfg.restarts; ++s) {
        Matrix x0;
        if (s == 0) {
            x0 = problem.in_control;
        } else {
            Rng rng(split_seed(cfg.seed, static_cast<std::uint64_t>(s)));
            x0 = corner_mixed_start(problem, rng);
        }
        Descent d = pg_descend(value, grad, problem, std::move(x0), cfg.max_iterations,
                               cfg.tolerance);
        result.iterations += d.steps;
        result.converged = result.converged || d.converged;
        if (d.value < best_value) {
            best_value = d.value;
            result.attack_inputs = d.x;
        }
        result.best_history.push_back(best_value);
    }
    finish(problem, result);
    return result;
}

SolveResult solve_genetic(const AttackProblem& problem, const HeuristicConfig& cfg) {
    validate_problem(problem);
    require_finite_box(problem, "solve_genetic");
    if (cfg.population < 4)
        throw std::invalid_argument("solve_genetic: population must be at least 4");
    if (!(cfg.mutation_std > 0))
        throw std::invalid_argument("solve_genetic: mutation_std must be positive");
    if (cfg.max_iterations < 1 || cfg.tournament < 1 || cfg.elite < 0 ||
        cfg.elite >= cfg.population)
        throw std::invalid_argument("solve_genetic: bad generation/tournament/elite counts");

    const int T = problem.horizon(), q = problem.channels();
    const int pop_size = cfg.population;
    const Vector width = problem.box_upper - problem.box_lower;
    const double gene_count = static_cast<double>(T) * q;
    const double mutate_prob = std::max(0.1, 1.0 / gene_count);
    Rng rng(split_seed(cfg.seed, 0));

    std::vector<Matrix> pop(static_cast<size_t>(pop_size));
    std::vector<double> fit(static_cast<size_t>(pop_size));
    for (int i = 0; i < pop_size; ++i) {
        Matrix x;
        if (i == 0) {
            x = problem.in_control;
        } else if (i <= pop_size / 2) {
            x = problem.in_control;
            for (int t = 0; t < T; ++t)
                for (int j = 0; j < q; ++j) x(t, j) += rng.normal() * cfg.mutation_std * width(j);
        } else {
            x.resize(T, q);
            for (int t = 0; t < T; ++t)
                for (int j = 0; j < q; ++j)
                    x(t, j) = problem.box_lower(j) + rng.uniform() * width(j);
        }
        pop[static_cast<size_t>(i)] = clip_box(problem, std::move(x));
        fit[static_cast<size_t>(i)] = sage_objective(problem, pop[static_cast<size_t>(i)]).total;
    }

    auto tournament = [&]() -> int {
        int best = static_cast<int>(rng.below(static_cast<std::uint64_t>(pop_size)));
        for (int c = 1; c < cfg.tournament; ++c) {
            const int cand = static_cast<int>(rng.below(static_cast<std::uint64_t>(pop_size)));
            const auto cf = fit[static_cast<size_t>(cand)];
            const auto bf = fit[static_cast<size_t>(best)];
            if (cf < bf || (cf == bf && cand < best)) best = cand;
        }
        return best;
    };

    SolveResult result;
    auto best_index = [&]() {
        int b = 0;
        for (int i = 1; i < pop_size; ++i)
            if (fit[static_cast<size_t>(i)] < fit[static_cast<size_t>(b)]) b = i;
        return b;
    };
    result.best_history.push_back(fit[static_cast<size_t>(best_index())]);

    std::vector<int> order(static_cast<size_t>(pop_size));
    for (int gen = 0; gen < cfg.max_iterations; ++gen) {
        for (int i = 0; i < pop_size; ++i) order[static_cast<size_t>(i)] = i;
        std::sort(order.begin(), order.end(), [&](int l, int r) {
            const auto lf = fit[static_cast<size_t>(l)], rf = fit[static_cast<size_t>(r)];
            return lf < rf || (lf == rf && l < r);
        });
        std::vector<Matrix> next;
        next.reserve(static_cast<size_t>(pop_size));
        for (int e = 0; e < cfg.elite; ++e) next.push_back(pop[static_cast<size_t>(order[static_cast<size_t>(e)])]);
        while (static_cast<int>(next.size()) < pop_size) {
            const Matrix& a = pop[static_cast<size_t>(tournament())];
            const Matrix& b = pop[static_cast<size_t>(tournament())];
            Matrix child(T, q);
            for (int t = 0; t < T; ++t)
                for (int j = 0; j < q; ++j) {
                    const double w =
                        -cfg.crossover_alpha + rng.uniform() * (1.0 + 2.0 * cfg.crossover_alpha);
                    child(t, j) = w * a(t, j) + (1.0 - w) * b(t, j);
                    if (rng.uniform() < mutate_prob)
                        child(t, j) += rng.normal() * cfg.mutation_std * width(j);
                }
            next.push_back(clip_box(problem, std::move(child)));
        }
        pop = std::move(next);
        for (int i = 0; i < pop_size; ++i)
            fit[static_cast<size_t>(i)] = sage_objective(problem, pop[static_cast<size_t>(i)]).total;
        result.best_history.push_back(fit[static_cast<size_t>(best_index())]);
    }

    result.attack_inputs = pop[static_cast<size_t>(best_index())];
    result.iterations = cfg.max_iterations;
    result.converged = true;
    finish(problem, result);
    return result;
}

SolveResult brute_force_oracle(const AttackProblem& problem, double grid_resolution) {
    validate_problem(problem);
    require_finite_box(problem, "brute_force_oracle");
    if (!(grid_resolution > 0))
        throw std::invalid_argument("brute_force_oracle: grid resolution must be positive");

    const int T = problem.horizon(), q = problem.channels();
    const int vars = T * q;
    std::vector<int> counts(static_cast<size_t>(vars));
    long double total_points = 1.0L;
    for (int v = 0; v < vars; ++v) {
        const int j = v % q;
        const double span = problem.box_upper(j) - problem.box_lower(j);
        const int count = static_cast<int>(std::floor(span / grid_resolution + 1e-9)) + 1;
        counts[static_cast<size_t>(v)] = count;
        total_points *= count;
        if (total_points > 1e7L) {
            std::ostringstream msg;
            msg << "brute_force_oracle: grid has ";
            if (total_points < 9e18L)
                msg << static_cast<long long>(total_points);
            else
                msg << static_cast<double>(total_points);
            msg << " or more points; the limit is 10000000";
            throw std::invalid_argument(msg.str());
        }
    }

    std::vector<int> idx(static_cast<size_t>(vars), 0);
    Matrix x(T, q);
    for (int v = 0; v < vars; ++v) x(v / q, v % q) = problem.box_lower(v % q);

    SolveResult result;
    double best = kInf;
    long long visited = 0;
    for (;;) {
        ++visited;
        const double total = sage_objective(problem, x).total;
        if (total < best) {  // strict: ties keep the lexicographically smallest point
            best = total;
            result.attack_inputs = x;
        }
        int v = vars - 1;
        for (; v >= 0; --v) {
            const int j = v % q;
            if (++idx[static_cast<size_t>(v)] < counts[static_cast<size_t>(v)]) {
                x(v / q, j) = std::min(
                    problem.box_lower(j) + idx[static_cast<size_t>(v)] * grid_resolution,
                    problem.box_upper(j));
                break;
            }
            idx[static_cast<size_t>(v)] = 0;
            x(v / q, j) = problem.box_lower(j);
        }
        if (v < 0) break;
    }
    result.iterations = static_cast<int>(visited);
    result.converged = true;
    finish(problem, result);
    return result;
}

namespace {

struct Levels {
    double total = 0, stealth = 0, physical = 0, cost = 0;
    Vector vec() const {
        Vector u(4);
        u << total, stealth, physical, cost;
        return u;
    }
};

Levels eval_levels(const AttackProblem& p, const Matrix& x) {
    const ObjectiveBreakdown b = sage_objective(p, x);
    return Levels{b.total, b.stealth, b.physical, b.cost};
}

std::string format_cut_set(const std::vector<std::pair<Vector, Vector>>& pairs) {
    std::ostringstream os;
    for (size_t k = 0; k < pairs.size(); ++k) {
        if (k) os << "; ";
        os << "cut " << k << ": u=(";
        for (int i = 0; i < 4; ++i) os << (i ? "," : "") << pairs[k].second(i);
        os << ")";
    }
    return os.str();
}

}  // namespace

SolveResult solve_branch_reduce(const AttackProblem& problem, const BranchReduceConfig& cfg) {
    validate_problem(problem);
    require_finite_box(problem, "solve_branch_reduce");
    Vector a(4);
    if (cfg.reduction_weights.size() == 0) {
        a << 1, 0, 0, 0;
    } else if (cfg.reduction_weights.size() == 4) {
        a = cfg.reduction_weights;
    } else {
        throw std::invalid_argument("solve_branch_reduce: reduction_weights must have 4 entries");
    }
    if ((a.array() < 0).any() || a.maxCoeff() <= 0)
        throw std::invalid_argument(
            "solve_branch_reduce: reduction weights must be non-negative and not all zero");
    if (!(cfg.gap_tolerance > 0))
        throw std::invalid_argument("solve_branch_reduce: gap tolerance must be positive");
    if (cfg.max_iterations < 1 || cfg.subproblem_restarts < 1 || cfg.subproblem_iterations < 1)
        throw std::invalid_argument("solve_branch_reduce: bad iteration counts");

    const Matrix u_ic = clip_box(problem, problem.in_control);
    const Levels ic_levels = eval_levels(problem, u_ic);
    const double b0 = std::isnan(cfg.upper_bound_b0) ? ic_levels.total : cfg.upper_bound_b0;
    Vector caps(4);
    caps << b0, problem.eps1, problem.eps2, problem.eps3;

    // a level enters the linear programs only when its cap is finite
    std::vector<int> active;
    for (int i = 0; i < 4; ++i) {
        if (std::isfinite(caps(i)))
            active.push_back(i);
        else if (a(i) > 0)
            throw std::invalid_argument(
                "solve_branch_reduce: positive reduction weight on an uncapped level");
    }
    const int ns = static_cast<int>(active.size());

    SolveResult result;
    double best_feasible_score = kInf, best_any_score = kInf;
    bool have_feasible = false;
    Matrix best_feasible_x, best_any_x;
    auto consider = [&](const Matrix& x, const Levels& lv) {
        const double score =
            a(0) * lv.total + a(1) * lv.stealth + a(2) * lv.physical + a(3) * lv.cost;
        const bool feas = within_budget(lv.stealth, problem.eps1) &&
                          within_budget(lv.physical, problem.eps2) &&
                          within_budget(lv.cost, problem.eps3);
        if (feas && (!have_feasible || score < best_feasible_score)) {
            have_feasible = true;
            best_feasible_score = score;
            best_feasible_x = x;
        }
        if (score < best_any_score) {
            best_any_score = score;
            best_any_x = x;
        }
    };
    consider(u_ic, ic_levels);

    std::vector<Vector> cuts;  // dual constraint points; starts at the caps point
    cuts.push_back(caps);
    std::vector<std::pair<Vector, Vector>> pairs;  // (lambda, u) rows for the primal

    const bool indicator = indicator_cost_active(problem);
    double upper_env = kInf, lower_env = -kInf;
    Matrix warm = u_ic;

    for (int k = 0; k < cfg.max_iterations; ++k) {
        // step 1: relaxed dual over the cuts. Variables s_i >= 0 (lambda_i =
        // -a_i - s_i) for active levels plus a free z split into z+ - z-.
        {
            const int rows = static_cast<int>(cuts.size());
            Matrix A = Matrix::Zero(rows, ns + 2);
            Vector b(rows), c(ns + 2);
            for (int pos = 0; pos < ns; ++pos) c(pos) = -caps(active[static_cast<size_t>(pos)]);
            c(ns) = -1.0;
            c(ns + 1) = 1.0;
            for (int r = 0; r < rows; ++r) {
                for (int pos = 0; pos < ns; ++pos)
                    A(r, pos) = -cuts[static_cast<size_t>(r)](active[static_cast<size_t>(pos)]);
                A(r, ns) = -1.0;
                A(r, ns + 1) = 1.0;
                // inactive levels carry zero weight but an infinite cap, so
                // the dot product has to skip them
                double rhs = 0.0;
                for (int pos = 0; pos < ns; ++pos) {
                    const int i = active[static_cast<size_t>(pos)];
                    rhs += a(i) * cuts[static_cast<size_t>(r)](i);
                }
                b(r) = rhs;
            }
            const LpResult dual = solve_lp(A, b, c);
            if (dual.status != LpStatus::optimal) {
                result.note = std::string("dual relaxation ") +
                              (dual.status == LpStatus::infeasible ? "infeasible" : "unbounded") +
                              "; " + format_cut_set(pairs);
                break;
            }
            Vector lambda(4);
            for (int i = 0; i < 4; ++i) lambda(i) = -a(i);
            for (int pos = 0; pos < ns; ++pos)
                lambda(active[static_cast<size_t>(pos)]) -= dual.x(pos);
            const double z_val = dual.x(ns) - dual.x(ns + 1);
            const double h_upper = dual.objective;

            // step 2: Lagrangian subproblem min over the box of
            // w0*total + w1*stealth + w2*physical + w3*cost with w = -lambda.
            const Vector w = -lambda;
            AttackProblem subv = problem;
            std::function<double(const Matrix&)> sub_value;
            std::function<Matrix(const Matrix&)> sub_grad;
            if (w(0) > 1e-12) {
                subv.lambda1 = problem.lambda1 + w(1) / w(0);
                subv.lambda2 = problem.lambda2 + w(2) / w(0);
                subv.lambda3 = problem.lambda3 + w(3) / w(0);
                AttackProblem subg = subv;
                if (indicator) subg.lambda3 = 0;  // indicator gradient is 0 a.e.
                const double w0 = w(0);
                sub_value = [subv, w0](const Matrix& x) {
                    return w0 * sage_objective(subv, x).total;
                };
                sub_grad = [subg, w0](const Matrix& x) {
                    return Matrix(w0 * sage_gradient(subg, x));
                };
            } else {
                // no weight on the total; the damage part drops out
                subv.lambda1 = w(1);
                subv.lambda1_corr = 0;
                subv.lambda2 = w(2);
                subv.lambda3 = w(3);
                AttackProblem subg = subv;
                if (indicator) subg.lambda3 = 0;
                AttackProblem plain = subg;
                plain.lambda1 = plain.lambda1_corr = plain.lambda2 = plain.lambda3 = 0;
                sub_value = [subv](const Matrix& x) {
                    const ObjectiveBreakdown b2 = sage_objective(subv, x);
                    return b2.total - b2.damage;
                };
                sub_grad = [subg, plain](const Matrix& x) {
                    return Matrix(sage_gradient(subg, x) - sage_gradient(plain, x));
                };
            }

            double best_sub = kInf;
            Matrix best_sub_x;
            for (int s = 0; s < cfg.subproblem_restarts; ++s) {
                Matrix x0;
                if (s == 0) {
                    x0 = warm;
                } else if (s == 1) {
                    x0 = u_ic;
                } else {
                    Rng rng(split_seed(cfg.seed,
                                       1000003ULL * static_cast<std::uint64_t>(k + 1) +
                                           static_cast<std::uint64_t>(s)));
                    x0 = corner_mixed_start(problem, rng);
                }
                const Descent d = pg_descend(sub_value, sub_grad, problem, std::move(x0),
                                             cfg.subproblem_iterations, 1e-10);
                if (d.value < best_sub) {
                    best_sub = d.value;
                    best_sub_x = d.x;
                }
            }
            warm = best_sub_x;
            const Levels lv = eval_levels(problem, best_sub_x);
            consider(best_sub_x, lv);
            const Vector u = lv.vec();
            cuts.push_back(u);
            pairs.emplace_back(lambda, u);

            // step 3: relaxed primal over the (lambda, u) pairs via
            // v_i = caps_i - u_i >= 0 on the active levels.
            const int prows = static_cast<int>(pairs.size());
            Matrix Ap = Matrix::Zero(prows, ns);
            Vector bp(prows), cp(ns);
            double a_caps = 0.0;
            for (int pos = 0; pos < ns; ++pos) {
                cp(pos) = a(active[static_cast<size_t>(pos)]);
                a_caps += a(active[static_cast<size_t>(pos)]) * caps(active[static_cast<size_t>(pos)]);
            }
            for (int r = 0; r < prows; ++r) {
                double rhs = 0.0;
                for (int pos = 0; pos < ns; ++pos) {
                    const int i = active[static_cast<size_t>(pos)];
                    Ap(r, pos) = -pairs[static_cast<size_t>(r)].first(i);
                    rhs += pairs[static_cast<size_t>(r)].first(i) *
                           (pairs[static_cast<size_t>(r)].second(i) - caps(i));
                }
                bp(r) = rhs;
            }
            const LpResult primal = solve_lp(Ap, bp, cp);
            double h_lower;
            if (primal.status == LpStatus::optimal) {
                h_lower = a_caps - primal.objective;
            } else if (primal.status == LpStatus::unbounded) {
                h_lower = -kInf;  // the cuts do not bound the levels yet
            } else {
                result.note = "primal relaxation infeasible; " + format_cut_set(pairs);
                break;
            }

            upper_env = std::min(upper_env, h_upper);
            lower_env = std::max(lower_env, h_lower);
            DualIterate it;
            it.k = k;
            it.lambdas = lambda;
            it.u_levels = u;
            it.upper = upper_env;
            it.lower = lower_env;
            it.gap = upper_env - lower_env;
            it.cut_z = z_val;
            result.dual_iterates.push_back(it);
            if (it.gap <= cfg.gap_tolerance) {
                result.converged = true;
                break;
            }
        }
    }

    result.iterations = static_cast<int>(result.dual_iterates.size());
    if (!result.dual_iterates.empty()) result.final_gap = result.dual_iterates.back().gap;
    result.attack_inputs = have_feasible ? best_feasible_x : best_any_x;
    result.feasible = have_feasible;
    result.breakdown = sage_objective(problem, result.attack_inputs);
    return result;
}

TunerResult tune_lambdas(AttackProblem problem, const TunerConfig& tuner,
                         const HeuristicConfig& solver, const TunerEvaluator& evaluate) {
    if (!(tuner.ae_threshold > 0) || !(tuner.ap_threshold > 0) || !(tuner.ac_threshold > 0))
        throw std::invalid_argument("tune_lambdas: thresholds must be positive");
    if (tuner.max_iter < 1)
        throw std::invalid_argument("tune_lambdas: max_iter must be at least 1");
    if (!evaluate) throw std::invalid_argument("tune_lambdas: an evaluator is required");
    if (tuner.lambda1_min > tuner.lambda1_max || tuner.lambda2_min > tuner.lambda2_max ||
        tuner.lambda3_min > tuner.lambda3_max || tuner.lambda1_min < 0 || tuner.lambda2_min < 0 ||
        tuner.lambda3_min < 0 || tuner.corr_ratio < 0)
        throw std::invalid_argument("tune_lambdas: bad multiplier intervals");

    double l1min = tuner.lambda1_min, l1max = tuner.lambda1_max;
    double l2min = tuner.lambda2_min, l2max = tuner.lambda2_max;
    double l3min = tuner.lambda3_min, l3max = tuner.lambda3_max;
    double l1 = l1min, l2 = l2min, l3 = l3min;

    TunerResult out;
    for (;;) {
        problem.lambda1 = l1;
        problem.lambda1_corr = tuner.corr_ratio * l1;
        problem.lambda2 = l2;
        problem.lambda3 = l3;
        out.solution = solver.method == HeuristicConfig::Method::genetic
                           ? solve_genetic(problem, solver)
                           : solve_projected_gradient(problem, solver);
        ++out.solves;
        out.metrics = evaluate(problem, out.solution);
        out.lambda1 = l1;
        out.lambda2 = l2;
        out.lambda3 = l3;

        const bool ae_low = out.metrics.ae < tuner.ae_threshold;
        const bool ap_high = out.metrics.ap > tuner.ap_threshold;
        const bool ac_high = out.metrics.ac > tuner.ac_threshold;
        if (!ae_low && !ap_high && !ac_high) {
            out.thresholds_met = true;
            break;
        }

        // every endpoint update and every midpoint reads the pre-round state
        const double mid1 = 0.5 * (l1min + l1max);
        const double mid2 = 0.5 * (l2min + l2max);
        const double mid3 = 0.5 * (l3min + l3max);
        double n1min = l1min, n1max = l1max, n2min = l2min, n2max = l2max, n3min = l3min;
        if (ae_low) {
            n1max = l1;
            n2max = l2;
        }
        if (ap_high) {
            n1min = l1;
            n2min = l2;
        }
        if (ac_high) {
            n3min = l3;
        }
        // one adjustment pass per round, whatever mix of thresholds fired
        ++out.iterations;
        if (ae_low || ap_high) {
            l1 = mid1;
            l2 = mid2;
        }
        if (ac_high) l3 = mid3;
        l1min = n1min;
        l1max = n1max;
        l2min = n2min;
        l2max = n2max;
        l3min = n3min;

        if ((ae_low || ap_high) && (l1max <= l1min || l2max <= l2min))
            out.degenerate_interval = true;
        if (ac_high && l3max <= l3min) out.degenerate_interval = true;

        if (out.iterations >= tuner.max_iter) break;
    }
    return out;
}

}  // namespace sage
