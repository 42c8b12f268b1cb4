#include <cmath>
#include <vector>

#include "doctest.h"
#include "sage/rng.hpp"
#include "sage/solvers.hpp"

using namespace sage;

namespace {

// f(u) = -|2u| + 0.5 u^2 on [0, 8]: minimum -2 at u = 2.
AttackProblem closed_form_1d() {
    AttackProblem p;
    p.model.offset = Vector::Zero(1);
    p.model.coefficients = Matrix::Constant(1, 1, 2.0);
    p.model.noise_std = Vector::Constant(1, 0.1);
    p.reference_output = Vector::Zero(1);
    p.in_control = Matrix::Zero(1, 1);
    p.box_lower = Vector::Constant(1, 0.0);
    p.box_upper = Vector::Constant(1, 8.0);
    p.damage_norm = Norm::l1;
    p.stealth_norm = Norm::squared_l2;
    p.lambda1 = 0.5;
    p.constraint.variant = ConstraintSpec::Variant::magnitude_l2;
    p.cost.mode = CostSpec::Mode::continuous;
    p.cost.channel_costs = Vector::Zero(1);
    return p;
}

// Random bounded quadratic with q*T <= 3 decision variables. lambda1 sits
// above the damage curvature so the total stays convex and every solver has
// to find the same unique minimum.
AttackProblem small_random(Rng& rng) {
    const int pick = static_cast<int>(rng.below(4));
    const int T = (pick == 0) ? 1 : (pick == 1 ? 2 : (pick == 2 ? 3 : 1));
    const int q = (pick == 3) ? 3 : 1;
    AttackProblem p;
    p.model.offset = Vector::Zero(1);
    p.model.coefficients = Matrix::Zero(1, q);
    for (int j = 0; j < q; ++j) p.model.coefficients(0, j) = rng.uniform(-1.5, 1.5);
    p.model.noise_std = Vector::Constant(1, 0.1);
    p.reference_output = Vector::Constant(1, rng.uniform(-1.0, 1.0));
    p.in_control = Matrix::Zero(T, q);
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < q; ++j) p.in_control(t, j) = rng.uniform(-0.5, 0.5);
    p.box_lower = Vector::Constant(q, -2.0);
    p.box_upper = Vector::Constant(q, 2.0);
    p.damage_norm = Norm::squared_l2;
    p.stealth_norm = Norm::squared_l2;
    p.lambda1 = p.model.coefficients.squaredNorm() + rng.uniform(0.3, 1.5);
    p.lambda2 = (T > 1) ? rng.uniform(0.1, 0.5) : 0.0;
    p.constraint.variant = T > 1 ? ConstraintSpec::Variant::diff_l2
                                 : ConstraintSpec::Variant::magnitude_l2;
    p.cost.channel_costs = Vector::Zero(q);
    return p;
}

}  // namespace

TEST_CASE("all three solvers hit the closed-form optimum") {
    AttackProblem p = closed_form_1d();

    HeuristicConfig h;
    h.max_iterations = 2000;
    h.restarts = 4;
    h.seed = 5;
    SolveResult pg = solve_projected_gradient(p, h);
    CHECK(pg.breakdown.total == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(pg.attack_inputs(0, 0) == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(pg.converged);

    HeuristicConfig g;
    g.method = HeuristicConfig::Method::genetic;
    g.max_iterations = 400;
    g.population = 80;
    g.seed = 5;
    SolveResult ga = solve_genetic(p, g);
    CHECK(ga.breakdown.total == doctest::Approx(-2.0).epsilon(1e-3));

    BranchReduceConfig br;
    br.seed = 5;
    SolveResult b = solve_branch_reduce(p, br);
    CHECK(b.breakdown.total == doctest::Approx(-2.0).epsilon(1e-3));
    CHECK(b.attack_inputs(0, 0) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("heuristics and bounding solver match the grid oracle") {
    Rng rng(100);
    for (int rep = 0; rep < 5; ++rep) {
        AttackProblem p = small_random(rng);
        const int vars = p.horizon() * p.channels();
        SolveResult oracle = brute_force_oracle(p, vars <= 2 ? 0.01 : 0.02);

        HeuristicConfig h;
        h.max_iterations = 1500;
        h.restarts = 3;
        h.seed = 9;
        SolveResult pg = solve_projected_gradient(p, h);
        CHECK(pg.breakdown.total <= oracle.breakdown.total + 5e-3);
        CHECK(std::abs(pg.breakdown.total - oracle.breakdown.total) <= 5e-3);

        HeuristicConfig g = h;
        g.method = HeuristicConfig::Method::genetic;
        g.max_iterations = 300;
        g.population = 60;
        SolveResult ga = solve_genetic(p, g);
        CHECK(std::abs(ga.breakdown.total - oracle.breakdown.total) <= 5e-3);

        BranchReduceConfig br;
        br.seed = 9;
        SolveResult b = solve_branch_reduce(p, br);
        CHECK(std::abs(b.breakdown.total - oracle.breakdown.total) <= 5e-3);
    }
}

TEST_CASE("bounding solver keeps its bounds ordered and monotone") {
    Rng rng(200);
    for (int rep = 0; rep < 3; ++rep) {
        AttackProblem p = small_random(rng);
        BranchReduceConfig br;
        br.seed = 1;
        SolveResult r = solve_branch_reduce(p, br);
        REQUIRE(!r.dual_iterates.empty());
        double last_upper = std::numeric_limits<double>::infinity();
        double last_lower = -std::numeric_limits<double>::infinity();
        for (const DualIterate& it : r.dual_iterates) {
            CHECK(it.upper <= last_upper + 1e-9);
            CHECK(it.lower >= last_lower - 1e-9);
            CHECK(it.lower <= it.upper + 1e-9);
            last_upper = it.upper;
            last_lower = it.lower;
        }
        const DualIterate& fin = r.dual_iterates.back();
        const bool closed = fin.gap <= br.gap_tolerance;
        const bool exhausted = r.iterations >= br.max_iterations && !r.converged;
        CHECK((closed || exhausted));
    }
}

TEST_CASE("bounding solver respects budget caps") {
    AttackProblem p = closed_form_1d();
    // stealth at the unconstrained optimum is 4; halving the budget forces
    // the solver to stay at u with 0.5 u^2 ... eps1 on the stealth level
    p.eps1 = 2.0;
    BranchReduceConfig br;
    br.seed = 3;
    SolveResult r = solve_branch_reduce(p, br);
    CHECK(r.feasible);
    CHECK(r.breakdown.stealth <= 2.0 + 1e-6);
    // optimum moves to u = sqrt(2 / 1) ... stealth = u^2 = 2
    CHECK(r.attack_inputs(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-2));
}

TEST_CASE("projected gradient refuses the indicator cost") {
    AttackProblem p = closed_form_1d();
    p.cost.mode = CostSpec::Mode::indicator;
    p.cost.channel_costs = Vector::Constant(1, 1.0);
    p.lambda3 = 0.5;
    HeuristicConfig h;
    CHECK_THROWS_AS(solve_projected_gradient(p, h), std::invalid_argument);
    // the genetic path handles it
    HeuristicConfig g;
    g.method = HeuristicConfig::Method::genetic;
    g.max_iterations = 150;
    g.population = 40;
    g.seed = 2;
    CHECK_NOTHROW(solve_genetic(p, g));
}

TEST_CASE("genetic solver is reproducible per seed") {
    AttackProblem p = closed_form_1d();
    HeuristicConfig g;
    g.method = HeuristicConfig::Method::genetic;
    g.max_iterations = 120;
    g.population = 30;
    g.seed = 77;
    SolveResult a = solve_genetic(p, g);
    SolveResult b = solve_genetic(p, g);
    CHECK(a.breakdown.total == b.breakdown.total);
    CHECK((a.attack_inputs - b.attack_inputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.best_history == b.best_history);
}

TEST_CASE("oracle rejects oversized grids by point count") {
    AttackProblem p = closed_form_1d();
    p.in_control = Matrix::Zero(4, 1);
    p.constraint.variant = ConstraintSpec::Variant::magnitude_l2;
    // (8 / 1e-3 + 1)^4 points is far past the cap
    CHECK_THROWS_WITH_AS(brute_force_oracle(p, 1e-3), doctest::Contains("point"),
                         std::invalid_argument);
}

TEST_CASE("tuner follows the interval-halving contract") {
    AttackProblem p = closed_form_1d();
    HeuristicConfig h;
    h.max_iterations = 300;
    h.restarts = 0;
    h.seed = 1;
    TunerConfig tc;
    tc.ae_threshold = 1.0;
    tc.ap_threshold = 10.0;
    tc.ac_threshold = 10.0;
    tc.max_iter = 6;

    SUBCASE("pre-satisfied instance needs zero adjustments") {
        TunerResult r = tune_lambdas(
            p, tc, h, [](const AttackProblem&, const SolveResult&) {
                return TunerMetrics{5.0, 0.1, 0.0};
            });
        CHECK(r.thresholds_met);
        CHECK(r.iterations == 0);
        CHECK(r.solves == 1);
        CHECK(r.lambda1 == doctest::Approx(tc.lambda1_min));
    }

    SUBCASE("unreachable effectivity exhausts the budget in bounds") {
        std::vector<double> seen1, seen2, seen3;
        TunerResult r = tune_lambdas(
            p, tc, h, [&](const AttackProblem& prob, const SolveResult&) {
                seen1.push_back(prob.lambda1);
                seen2.push_back(prob.lambda2);
                seen3.push_back(prob.lambda3);
                return TunerMetrics{0.1, 0.1, 0.0};  // AE always too low
            });
        CHECK(!r.thresholds_met);
        CHECK(r.iterations == tc.max_iter);
        CHECK(r.solves == tc.max_iter);
        for (std::size_t i = 0; i < seen1.size(); ++i) {
            CHECK(seen1[i] >= 0.0);
            CHECK(seen1[i] <= 1.0);
            CHECK(seen2[i] >= 0.0);
            CHECK(seen2[i] <= 1.0);
            CHECK(seen3[i] >= 0.0);
            CHECK(seen3[i] <= 1.0);
        }
        CHECK(seen1[0] == doctest::Approx(0.0));
    }

    SUBCASE("high perturbation pulls the lower endpoints up") {
        std::vector<double> seen;
        int calls = 0;
        TunerResult r = tune_lambdas(
            p, tc, h, [&](const AttackProblem& prob, const SolveResult&) {
                seen.push_back(prob.lambda1);
                ++calls;
                // too much perturbation until lambda1 passes 0.7
                return TunerMetrics{5.0, prob.lambda1 > 0.7 ? 0.1 : 20.0, 0.0};
            });
        CHECK(r.thresholds_met);
        CHECK(r.lambda1 > 0.7);
        CHECK(r.iterations <= tc.max_iter);
        CHECK(r.solves == calls);
        // midpoints read the pre-round interval, so the first tightened level
        // is evaluated twice: 0, 0.5, 0.5, 0.75
        REQUIRE(seen.size() == 4);
        CHECK(seen[1] == doctest::Approx(0.5));
        CHECK(seen[2] == doctest::Approx(0.5));
        CHECK(seen[3] == doctest::Approx(0.75));
    }

    SUBCASE("cost threshold moves only lambda3") {
        std::vector<double> l3;
        TunerResult r = tune_lambdas(
            p, tc, h, [&](const AttackProblem& prob, const SolveResult&) {
                l3.push_back(prob.lambda3);
                return TunerMetrics{5.0, 0.1, prob.lambda3 >= 0.5 ? 1.0 : 99.0};
            });
        CHECK(r.thresholds_met);
        REQUIRE(l3.size() == 2);
        CHECK(l3[0] == doctest::Approx(0.0));
        CHECK(l3[1] == doctest::Approx(0.5));
        CHECK(r.lambda1 == doctest::Approx(0.0));
    }

    SUBCASE("degenerate interval is flagged") {
        TunerConfig pin = tc;
        pin.lambda1_min = pin.lambda1_max = 0.3;
        pin.lambda2_min = pin.lambda2_max = 0.3;
        TunerResult r = tune_lambdas(
            p, pin, h, [](const AttackProblem&, const SolveResult&) {
                return TunerMetrics{0.1, 0.1, 0.0};
            });
        CHECK(!r.thresholds_met);
        CHECK(r.degenerate_interval);
    }

    SUBCASE("corr ratio ties the window weight to lambda1") {
        AttackProblem wp = closed_form_1d();
        wp.in_control = Matrix::Zero(40, 1);
        wp.window = 5;
        wp.warmup_discard = 0;
        TunerConfig tw = tc;
        tw.corr_ratio = 3.0;
        std::vector<double> ratio;
        tune_lambdas(wp, tw, h, [&](const AttackProblem& prob, const SolveResult&) {
            if (prob.lambda1 > 0.0) ratio.push_back(prob.lambda1_corr / prob.lambda1);
            return TunerMetrics{5.0, prob.lambda1 >= 0.4 ? 0.1 : 20.0, 0.0};
        });
        REQUIRE(!ratio.empty());
        for (double r : ratio) CHECK(r == doctest::Approx(3.0));
    }
}

TEST_CASE("tuner rejects broken configuration") {
    AttackProblem p = closed_form_1d();
    HeuristicConfig h;
    TunerConfig tc;
    tc.ae_threshold = -1.0;
    auto eval = [](const AttackProblem&, const SolveResult&) { return TunerMetrics{}; };
    CHECK_THROWS_AS(tune_lambdas(p, tc, h, eval), std::invalid_argument);
    tc.ae_threshold = 3.0;
    tc.max_iter = 0;
    CHECK_THROWS_AS(tune_lambdas(p, tc, h, eval), std::invalid_argument);
    tc.max_iter = 5;
    tc.lambda1_min = 0.8;
    tc.lambda1_max = 0.2;
    CHECK_THROWS_AS(tune_lambdas(p, tc, h, eval), std::invalid_argument);
    tc.lambda1_min = 0.0;
    tc.lambda1_max = 1.0;
    CHECK_THROWS_AS(tune_lambdas(p, tc, h, nullptr), std::invalid_argument);
}
