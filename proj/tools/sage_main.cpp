// Command-line front end: simulate | attack | tune | detect | report.
// Exit codes: 0 success, 1 config error, 2 non-convergence under --strict,
// 3 I/O failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sage/config.hpp"
#include "sage/detectors.hpp"
#include "sage/metrics.hpp"
#include "sage/scenario.hpp"
#include "sage/solvers.hpp"
#include "sage/system_model.hpp"
#include "sage/trajectory_io.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sage;

Vector column_stds(const Matrix& m) {
    const int T = static_cast<int>(m.rows());
    Vector out(m.cols());
    for (int j = 0; j < m.cols(); ++j) {
        const double mean = m.col(j).mean();
        out(j) = std::sqrt((m.col(j).array() - mean).square().sum() / std::max(1, T - 1));
    }
    return out;
}

json detection_json(const DetectionReport& r) {
    json j;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["tn"] = r.tn;
    j["fn"] = r.fn;
    j["alarms"] = r.alarm_indices;
    return j;
}

json breakdown_json(const ObjectiveBreakdown& b) {
    json j;
    j["damage"] = b.damage;
    j["stealth"] = b.stealth;
    j["correlation_stealth"] = b.correlation_stealth;
    j["physical"] = b.physical;
    j["cost"] = b.cost;
    j["total"] = b.total;
    return j;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("write failed: " + path);
}

void write_table(const std::string& path, const std::vector<std::string>& names,
                 const Matrix& data) {
    std::vector<std::string> cols;
    cols.push_back("t");
    for (const auto& n : names) cols.push_back(n);
    Matrix rows(data.rows(), 1 + data.cols());
    for (int t = 0; t < data.rows(); ++t) {
        rows(t, 0) = t;
        rows.row(t).tail(data.cols()) = data.row(t);
    }
    write_csv(path, cols, rows);
}

struct BuiltProblem {
    AttackProblem problem;
    Trajectory baseline;
    Trajectory train;
};

BuiltProblem build_problem(const CliConfig& cfg) {
    const AttackCommandConfig& a = cfg.attack;
    const Testbed& tb = cfg.testbed;
    BuiltProblem out;
    out.train = simulate_closed_loop(tb, a.train_steps, a.train_seed);
    out.baseline = simulate_closed_loop(tb, a.horizon, a.seed);

    AttackProblem& p = out.problem;
    p.model = fit_linear_model(out.train);
    p.reference_output = tb.reference_output;
    p.in_control = out.baseline.inputs;
    p.monitor.variant = a.monitor;
    if (a.monitor == MonitorSpec::Variant::hotelling_t2) {
        const T2Model t2 = fit_t2_model(out.train.inputs);
        p.monitor.t2_mean = t2.mean;
        p.monitor.t2_inv_cov = t2.inv_covariance;
    }
    p.constraint.variant = a.constraint;
    p.cost.mode = a.cost_mode;
    p.cost.channel_costs =
        a.channel_costs.size() > 0 ? a.channel_costs : Vector::Zero(tb.num_inputs());
    p.cost.attacked_threshold = a.attacked_threshold;
    p.damage_norm = a.damage_norm;
    p.stealth_norm = a.stealth_norm;
    p.lambda1 = a.lambda1;
    p.lambda1_corr = a.lambda1_corr;
    p.lambda2 = a.lambda2;
    p.lambda3 = a.lambda3;
    p.eps1 = a.eps1;
    p.eps2 = a.eps2;
    p.eps3 = a.eps3;
    p.window = a.window;
    p.warmup_discard = a.warmup_discard;
    p.box_lower = tb.input_setpoint.array() - a.box_halfwidth;
    p.box_upper = tb.input_setpoint.array() + a.box_halfwidth;
    return out;
}

SolveResult dispatch_solve(const AttackProblem& p, const SolverSelection& sel) {
    switch (sel.method) {
        case SolverSelection::Method::genetic: {
            HeuristicConfig h = sel.heuristic;
            h.method = HeuristicConfig::Method::genetic;
            return solve_genetic(p, h);
        }
        case SolverSelection::Method::branch_reduce:
            return solve_branch_reduce(p, sel.branch);
        case SolverSelection::Method::projected_gradient:
        default: {
            HeuristicConfig h = sel.heuristic;
            h.method = HeuristicConfig::Method::projected_gradient;
            return solve_projected_gradient(p, h);
        }
    }
}

json solve_json(const SolveResult& r, const AttackProblem& p) {
    json j;
    j["converged"] = r.converged;
    j["feasible"] = r.feasible;
    j["iterations"] = r.iterations;
    j["note"] = r.note;
    j["breakdown"] = breakdown_json(r.breakdown);
    j["multipliers"] = {{"lambda1", p.lambda1},
                        {"lambda1_corr", p.lambda1_corr},
                        {"lambda2", p.lambda2},
                        {"lambda3", p.lambda3}};
    if (r.final_gap.has_value()) j["final_gap"] = *r.final_gap;
    if (!r.dual_iterates.empty()) {
        json iters = json::array();
        for (const auto& it : r.dual_iterates) {
            json e;
            e["k"] = it.k;
            e["upper"] = it.upper;
            e["lower"] = it.lower;
            e["gap"] = it.gap;
            e["cut_z"] = it.cut_z;
            e["lambdas"] = std::vector<double>(it.lambdas.data(), it.lambdas.data() + it.lambdas.size());
            e["u_levels"] =
                std::vector<double>(it.u_levels.data(), it.u_levels.data() + it.u_levels.size());
            iters.push_back(e);
        }
        j["dual_iterates"] = iters;
    }
    json model;
    model["offset"] =
        std::vector<double>(p.model.offset.data(), p.model.offset.data() + p.model.offset.size());
    model["noise_std"] = std::vector<double>(p.model.noise_std.data(),
                                             p.model.noise_std.data() + p.model.noise_std.size());
    std::vector<std::vector<double>> coeff;
    for (int i = 0; i < p.model.coefficients.rows(); ++i) {
        std::vector<double> row;
        for (int c = 0; c < p.model.coefficients.cols(); ++c)
            row.push_back(p.model.coefficients(i, c));
        coeff.push_back(std::move(row));
    }
    model["coefficients"] = coeff;
    j["model"] = model;
    return j;
}

int cmd_simulate(const CliConfig& cfg, const std::string& out_dir, bool verbose) {
    const Trajectory traj = simulate_closed_loop(cfg.testbed, cfg.simulate.steps, cfg.simulate.seed);
    fs::create_directories(out_dir);
    const std::string path = (fs::path(out_dir) / "trajectory_ic.csv").string();
    write_trajectory_csv(path, traj);
    if (verbose)
        std::cerr << "simulated " << cfg.simulate.steps << " steps, seed " << cfg.simulate.seed
                  << "\n";
    std::cout << path << "\n";
    return 0;
}

int cmd_attack(const CliConfig& cfg, const std::string& out_dir, bool strict, bool verbose) {
    BuiltProblem built = build_problem(cfg);
    const SolveResult result = dispatch_solve(built.problem, cfg.attack.solver);
    fs::create_directories(out_dir);

    const std::string inputs_path = (fs::path(out_dir) / "attack_inputs.csv").string();
    write_table(inputs_path, cfg.testbed.channel_names, result.attack_inputs);
    const std::string predicted_path = (fs::path(out_dir) / "predicted_response.csv").string();
    write_table(predicted_path, cfg.testbed.output_names,
                predict_outputs(built.problem.model, result.attack_inputs));

    json j = solve_json(result, built.problem);
    j["solver"] = solver_method_name(cfg.attack.solver.method);
    j["files"] = {inputs_path, predicted_path};
    const std::string json_path = (fs::path(out_dir) / "solve.json").string();
    write_json_file(json_path, j);

    if (verbose)
        std::cerr << "total " << result.breakdown.total << " converged " << result.converged
                  << " note \"" << result.note << "\"\n";
    std::cout << json_path << "\n";
    if (strict && !result.converged) return 2;
    return 0;
}

int cmd_tune(const CliConfig& cfg, const std::string& out_dir, bool strict, bool verbose) {
    BuiltProblem built = build_problem(cfg);
    const Testbed& tb = cfg.testbed;
    const Vector sigma_u = column_stds(built.baseline.inputs);
    const Vector sigma_y = column_stds(built.baseline.outputs);

    CostSpec metric_cost;
    metric_cost.mode = CostSpec::Mode::indicator;
    metric_cost.channel_costs = built.problem.cost.channel_costs;
    metric_cost.attacked_threshold = cfg.attack.attacked_threshold;

    const auto evaluate = [&](const AttackProblem&, const SolveResult& sol) {
        const Trajectory resp = inject_inputs(tb, sol.attack_inputs, cfg.attack.seed);
        MetricInputs mi;
        mi.reference_output = tb.reference_output;
        mi.attack_response = resp.outputs;
        mi.in_control = built.baseline.inputs;
        mi.attack_inputs = sol.attack_inputs;
        mi.sigma_u = sigma_u;
        mi.sigma_y = sigma_y;
        mi.cost = metric_cost;
        TunerMetrics m;
        m.ae = attack_effectivity(mi);
        m.ap = average_perturbation(mi);
        m.ac = attack_cost_metric(mi);
        return m;
    };

    HeuristicConfig h = cfg.attack.solver.heuristic;
    h.method = cfg.attack.solver.method == SolverSelection::Method::genetic
                   ? HeuristicConfig::Method::genetic
                   : HeuristicConfig::Method::projected_gradient;
    const TunerResult tuned = tune_lambdas(built.problem, cfg.tune, h, evaluate);

    fs::create_directories(out_dir);
    const std::string inputs_path = (fs::path(out_dir) / "attack_inputs.csv").string();
    write_table(inputs_path, tb.channel_names, tuned.solution.attack_inputs);

    json j;
    j["lambda1"] = tuned.lambda1;
    j["lambda1_corr"] = cfg.tune.corr_ratio * tuned.lambda1;
    j["lambda2"] = tuned.lambda2;
    j["lambda3"] = tuned.lambda3;
    j["metrics"] = {{"ae", tuned.metrics.ae}, {"ap", tuned.metrics.ap}, {"ac", tuned.metrics.ac}};
    j["iterations"] = tuned.iterations;
    j["solves"] = tuned.solves;
    j["thresholds_met"] = tuned.thresholds_met;
    j["degenerate_interval"] = tuned.degenerate_interval;
    j["solution"] = {{"converged", tuned.solution.converged},
                     {"breakdown", breakdown_json(tuned.solution.breakdown)}};
    j["files"] = {inputs_path};
    const std::string json_path = (fs::path(out_dir) / "tune.json").string();
    write_json_file(json_path, j);

    if (verbose)
        std::cerr << "tuner: " << tuned.iterations << " adjustments, " << tuned.solves
                  << " solves, thresholds_met=" << tuned.thresholds_met << "\n";
    std::cout << json_path << "\n";
    if (strict && (!tuned.thresholds_met || !tuned.solution.converged)) return 2;
    return 0;
}

int cmd_detect(const CliConfig& cfg, const std::string& out_dir, bool verbose) {
    const DetectCommandConfig& d = cfg.detect;
    if (d.in_control_path.empty() || d.test_path.empty())
        throw ConfigError("config error: detect requires in_control and test paths");
    const Trajectory ic = read_trajectory_csv(d.in_control_path);
    const Trajectory test = read_trajectory_csv(d.test_path);
    const Matrix& ic_block = d.use_outputs ? ic.outputs : ic.inputs;
    const Matrix& test_block = d.use_outputs ? test.outputs : test.inputs;

    json j;
    j["method"] = detect_method_name(d.method);
    switch (d.method) {
        case DetectCommandConfig::Method::chart: {
            const ChartModel chart = fit_control_chart(ic_block, d.sigma_multiplier);
            const AlarmResult base = chart_alarm_rate(chart, ic_block);
            const AlarmResult tested = chart_alarm_rate(chart, test_block);
            j["in_control_rate"] = base.rate;
            j["test_rate"] = tested.rate;
            j["alarms"] = tested.indices;
            break;
        }
        case DetectCommandConfig::Method::t2: {
            const T2Model t2 = fit_t2_model(ic_block, d.t2_quantile);
            const AlarmResult base = hotelling_t2_alarms(t2, ic_block);
            const AlarmResult tested = hotelling_t2_alarms(t2, test_block);
            j["in_control_rate"] = base.rate;
            j["test_rate"] = tested.rate;
            j["ucl"] = t2.ucl;
            j["alarms"] = tested.indices;
            break;
        }
        case DetectCommandConfig::Method::knn_raw:
        case DetectCommandConfig::Method::knn_corr: {
            WindowFeatureSpec spec;
            spec.mode = d.method == DetectCommandConfig::Method::knn_raw
                            ? WindowFeatureSpec::Mode::raw
                            : WindowFeatureSpec::Mode::correlation;
            spec.window = d.window;
            const Matrix icw = window_features(ic_block, spec);
            const Matrix tw = window_features(test_block, spec);
            const int nw = static_cast<int>(tw.rows());
            if (static_cast<int>(icw.rows()) < nw)
                throw std::runtime_error("detect: in-control series shorter than test series");
            const int half = nw / 2;
            if (half < 1) throw std::runtime_error("detect: not enough windows");
            Matrix train(2 * half, tw.cols()), testf(2 * (nw - half), tw.cols());
            std::vector<int> train_labels, test_labels;
            train << icw.topRows(half), tw.topRows(half);
            testf << icw.middleRows(half, nw - half), tw.bottomRows(nw - half);
            for (int i = 0; i < half; ++i) train_labels.push_back(0);
            for (int i = 0; i < half; ++i) train_labels.push_back(1);
            for (int i = 0; i < nw - half; ++i) test_labels.push_back(0);
            for (int i = 0; i < nw - half; ++i) test_labels.push_back(1);
            const DetectionReport rep = knn_evaluate(train, train_labels, testf, test_labels, d.k);
            j["report"] = detection_json(rep);
            break;
        }
        case DetectCommandConfig::Method::correlation: {
            const int T = static_cast<int>(std::min(ic_block.rows(), test_block.rows()));
            const Matrix diff =
                correlation_difference(ic_block.topRows(T), test_block.topRows(T), d.window);
            std::vector<std::vector<double>> mat;
            double max_off = 0.0;
            for (int r = 0; r < diff.rows(); ++r) {
                std::vector<double> row;
                for (int c = 0; c < diff.cols(); ++c) {
                    row.push_back(diff(r, c));
                    if (r != c) max_off = std::max(max_off, diff(r, c));
                }
                mat.push_back(std::move(row));
            }
            j["matrix"] = mat;
            j["max_off_diagonal"] = max_off;
            j["channels"] = d.use_outputs ? ic.output_names : ic.input_names;
            break;
        }
    }
    fs::create_directories(out_dir);
    const std::string path = (fs::path(out_dir) / "detect.json").string();
    write_json_file(path, j);
    if (verbose) std::cerr << "detect method " << detect_method_name(d.method) << " done\n";
    std::cout << path << "\n";
    return 0;
}

int cmd_report(const CliConfig& cfg, const std::string& out_dir, bool strict, bool verbose) {
    const ScenarioReport report = run_scenario(cfg.scenario, out_dir);
    if (verbose) {
        std::cerr << "variant " << variant_name(report.variant) << " ae " << report.ae << " ap "
                  << report.ap << " ac " << report.ac << " max corr diff "
                  << report.max_off_diagonal_correlation << "\n";
    }
    std::cout << (fs::path(out_dir) / "report.json").string() << "\n";
    const bool trouble =
        !report.solver_converged || (report.tuner_used && !report.thresholds_met);
    if (strict && trouble) return 2;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"worst-case stealthy attack generation and detection workbench"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool strict = false;
    bool verbose = false;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory (default: out)");
    app.add_option("--seed", seed, "override the command's seed(s)");
    app.add_option("--threads", threads, "worker thread cap (else SAGE_THREADS)");
    app.add_flag("--strict", strict, "exit 2 when the solver or tuner does not converge");
    app.add_flag("--verbose", verbose, "extra diagnostics on stderr");

    CLI::App* c_simulate = app.add_subcommand("simulate", "write an in-control trajectory");
    CLI::App* c_attack = app.add_subcommand("attack", "solve the configured attack problem");
    CLI::App* c_tune = app.add_subcommand("tune", "search multipliers against the thresholds");
    CLI::App* c_detect = app.add_subcommand("detect", "run a detector over recorded trajectories");
    CLI::App* c_report = app.add_subcommand("report", "full scenario: attack, inject, detect");
    for (CLI::App* sub : {c_simulate, c_attack, c_tune, c_detect, c_report}) sub->fallthrough();

    if (argc <= 1) {
        std::cout << app.help();
        return 1;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (app.get_subcommands().empty()) {
        std::cout << app.help();
        return 1;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        apply_thread_count(threads);
        if (config_path.empty()) throw sage::ConfigError("config error: --config is required");
        CliConfig cfg = load_config_file(config_path);
        if (seed.has_value()) apply_seed_override(cfg, command, *seed);

        if (command == "simulate") return cmd_simulate(cfg, out_dir, verbose);
        if (command == "attack") return cmd_attack(cfg, out_dir, strict, verbose);
        if (command == "tune") return cmd_tune(cfg, out_dir, strict, verbose);
        if (command == "detect") return cmd_detect(cfg, out_dir, verbose);
        if (command == "report") return cmd_report(cfg, out_dir, strict, verbose);
        std::cerr << "unknown command: " << command << "\n";
        return 1;
    } catch (const sage::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    }
}
