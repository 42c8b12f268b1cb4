#include "sage/config.hpp"

#include <Eigen/Core>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sage/rng.hpp"

namespace sage {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) { throw ConfigError("config error: " + message); }

std::string key_in(const char* section, const std::string& key) {
    return "key \"" + key + "\" in section \"" + section + "\"";
}

void check_object(const json& j, const char* section) {
    if (!j.is_object()) fail(std::string("section \"") + section + "\" must be an object");
}

// Anti-typo stance: any key outside the section's schema is fatal.
void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
    check_object(j, section);
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (item.key() == a) {
                known = true;
                break;
            }
        if (!known) fail("unknown " + key_in(section, item.key()));
    }
}

double get_num(const json& j, const char* section, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) fail(key_in(section, key) + " must be a number");
    return j[key].get<double>();
}

int get_int(const json& j, const char* section, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) fail(key_in(section, key) + " must be an integer");
    return j[key].get<int>();
}

std::uint64_t get_seed(const json& j, const char* section, const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_unsigned() && !j[key].is_number_integer())
        fail(key_in(section, key) + " must be a non-negative integer");
    if (j[key].is_number_integer() && j[key].get<long long>() < 0)
        fail(key_in(section, key) + " must be a non-negative integer");
    return j[key].get<std::uint64_t>();
}

bool get_bool(const json& j, const char* section, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) fail(key_in(section, key) + " must be a boolean");
    return j[key].get<bool>();
}

std::string get_str(const json& j, const char* section, const char* key,
                    const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) fail(key_in(section, key) + " must be a string");
    return j[key].get<std::string>();
}

Vector get_vector(const json& j, const char* section, const char* key, const Vector& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_array()) fail(key_in(section, key) + " must be an array of numbers");
    Vector v(j[key].size());
    int i = 0;
    for (const auto& e : j[key]) {
        if (!e.is_number()) fail(key_in(section, key) + " must be an array of numbers");
        v(i++) = e.get<double>();
    }
    return v;
}

Matrix get_matrix(const json& j, const char* section, const char* key) {
    if (!j[key].is_array() || j[key].empty())
        fail(key_in(section, key) + " must be a non-empty array of rows");
    const auto& rows = j[key];
    Matrix m;
    int r = 0;
    for (const auto& row : rows) {
        if (!row.is_array() || row.empty())
            fail(key_in(section, key) + " rows must be non-empty arrays");
        if (r == 0) m.resize(static_cast<int>(rows.size()), static_cast<int>(row.size()));
        if (static_cast<int>(row.size()) != m.cols())
            fail(key_in(section, key) + " rows have inconsistent lengths");
        int c = 0;
        for (const auto& e : row) {
            if (!e.is_number()) fail(key_in(section, key) + " entries must be numbers");
            m(r, c++) = e.get<double>();
        }
        ++r;
    }
    return m;
}

std::vector<std::string> get_names(const json& j, const char* section, const char* key,
                                   const std::vector<std::string>& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_array()) fail(key_in(section, key) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : j[key]) {
        if (!e.is_string()) fail(key_in(section, key) + " must be an array of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

MonitorSpec::Variant parse_monitor(const std::string& s, const char* section) {
    if (s == "identity") return MonitorSpec::Variant::identity;
    if (s == "identity_plus_variance") return MonitorSpec::Variant::identity_plus_variance;
    if (s == "hotelling_t2") return MonitorSpec::Variant::hotelling_t2;
    if (s == "sliding_window_std") return MonitorSpec::Variant::sliding_window_std;
    fail("unknown monitor \"" + s + "\" in section \"" + section + "\"");
}

ConstraintSpec::Variant parse_constraint(const std::string& s, const char* section) {
    if (s == "diff_l2") return ConstraintSpec::Variant::diff_l2;
    if (s == "diff_l1") return ConstraintSpec::Variant::diff_l1;
    if (s == "magnitude_l2") return ConstraintSpec::Variant::magnitude_l2;
    fail("unknown constraint \"" + s + "\" in section \"" + section + "\"");
}

CostSpec::Mode parse_cost_mode(const std::string& s, const char* section) {
    if (s == "indicator") return CostSpec::Mode::indicator;
    if (s == "continuous") return CostSpec::Mode::continuous;
    fail("unknown cost_mode \"" + s + "\" in section \"" + section + "\"");
}

Norm parse_norm(const std::string& s, const char* section, const char* key) {
    if (s == "l1" || s == "1") return Norm::l1;
    if (s == "l2" || s == "2") return Norm::l2;
    if (s == "squared_l2" || s == "squared_2") return Norm::squared_l2;
    fail("unknown norm \"" + s + "\" for " + key_in(section, key));
}

SolverSelection::Method parse_method(const std::string& s, const char* section) {
    if (s == "projected_gradient") return SolverSelection::Method::projected_gradient;
    if (s == "genetic") return SolverSelection::Method::genetic;
    if (s == "branch_reduce") return SolverSelection::Method::branch_reduce;
    fail("unknown solver method \"" + s + "\" in section \"" + section + "\"");
}

void parse_testbed(const json& j, Testbed& tb) {
    check_keys(j, "testbed",
               {"pole", "dc_gain", "process_noise_std", "measurement_noise_std", "input_setpoint",
                "input_ar_coefficient", "input_noise_std", "input_stationary_std",
                "reference_output", "channel_names", "output_names"});

    double pole = tb.state_transition(0, 0);
    pole = get_num(j, "testbed", "pole", pole);
    Matrix dc = tb.output_map * (Matrix::Identity(tb.num_states(), tb.num_states()) -
                                 tb.state_transition)
                                    .inverse() *
                tb.input_map;
    if (j.contains("dc_gain")) dc = get_matrix(j, "testbed", "dc_gain");
    const int p = static_cast<int>(dc.rows());
    const int q = static_cast<int>(dc.cols());

    tb.state_transition = Matrix::Identity(p, p) * pole;
    tb.input_map = (1.0 - pole) * dc;
    tb.output_map = Matrix::Identity(p, p);
    tb.feedthrough = Matrix::Zero(p, q);

    tb.process_noise_std = get_num(j, "testbed", "process_noise_std", tb.process_noise_std);
    tb.measurement_noise_std =
        get_num(j, "testbed", "measurement_noise_std", tb.measurement_noise_std);
    tb.input_ar_coefficient =
        get_num(j, "testbed", "input_ar_coefficient", tb.input_ar_coefficient);

    if (j.contains("input_setpoint")) tb.input_setpoint = get_vector(j, "testbed", "input_setpoint", {});
    if (j.contains("reference_output"))
        tb.reference_output = get_vector(j, "testbed", "reference_output", {});
    if (j.contains("input_noise_std") && j.contains("input_stationary_std"))
        fail("section \"testbed\" takes input_noise_std or input_stationary_std, not both");
    if (j.contains("input_noise_std"))
        tb.input_noise_std = get_vector(j, "testbed", "input_noise_std", {});
    if (j.contains("input_stationary_std")) {
        const Vector stationary = get_vector(j, "testbed", "input_stationary_std", {});
        const double a = tb.input_ar_coefficient;
        if (!(a >= 0.0 && a < 1.0)) fail("testbed input_ar_coefficient must lie in [0, 1)");
        tb.input_noise_std = stationary * std::sqrt(1.0 - a * a);
    }
    tb.channel_names = get_names(j, "testbed", "channel_names", tb.channel_names);
    tb.output_names = get_names(j, "testbed", "output_names", tb.output_names);

    if (static_cast<int>(tb.input_setpoint.size()) != q)
        tb.input_setpoint = Vector::Zero(q);  // shape changed without a setpoint override
    if (static_cast<int>(tb.reference_output.size()) != p) tb.reference_output = Vector::Zero(p);

    try {
        validate_testbed(tb);
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
}

void parse_solver(const json& j, const char* section, SolverSelection& sel) {
    check_keys(j, section,
               {"method", "max_iterations", "restarts", "tolerance", "population", "mutation_std",
                "crossover_alpha", "tournament", "elite", "seed", "gap_tolerance",
                "subproblem_restarts", "subproblem_iterations", "upper_bound",
                "reduction_weights"});
    sel.method = parse_method(get_str(j, section, "method", solver_method_name(sel.method)), section);
    HeuristicConfig& h = sel.heuristic;
    h.method = sel.method == SolverSelection::Method::genetic ? HeuristicConfig::Method::genetic
                                                              : HeuristicConfig::Method::projected_gradient;
    h.max_iterations = get_int(j, section, "max_iterations", h.max_iterations);
    h.restarts = get_int(j, section, "restarts", h.restarts);
    h.tolerance = get_num(j, section, "tolerance", h.tolerance);
    h.population = get_int(j, section, "population", h.population);
    h.mutation_std = get_num(j, section, "mutation_std", h.mutation_std);
    h.crossover_alpha = get_num(j, section, "crossover_alpha", h.crossover_alpha);
    h.tournament = get_int(j, section, "tournament", h.tournament);
    h.elite = get_int(j, section, "elite", h.elite);
    h.seed = get_seed(j, section, "seed", h.seed);

    BranchReduceConfig& b = sel.branch;
    b.gap_tolerance = get_num(j, section, "gap_tolerance", b.gap_tolerance);
    b.max_iterations = get_int(j, section, "max_iterations", b.max_iterations);
    b.subproblem_restarts = get_int(j, section, "subproblem_restarts", b.subproblem_restarts);
    b.subproblem_iterations = get_int(j, section, "subproblem_iterations", b.subproblem_iterations);
    b.upper_bound_b0 = get_num(j, section, "upper_bound", b.upper_bound_b0);
    b.reduction_weights = get_vector(j, section, "reduction_weights", b.reduction_weights);
    b.seed = get_seed(j, section, "seed", b.seed);
}

void parse_simulate(const json& j, SimulateConfig& cfg) {
    check_keys(j, "simulate", {"steps", "seed"});
    cfg.steps = get_int(j, "simulate", "steps", cfg.steps);
    cfg.seed = get_seed(j, "simulate", "seed", cfg.seed);
    if (cfg.steps <= 0) fail("simulate steps must be positive");
}

void parse_attack(const json& j, AttackCommandConfig& cfg) {
    check_keys(j, "attack",
               {"horizon", "seed", "train_seed", "train_steps", "lambda1", "lambda1_corr",
                "lambda2", "lambda3", "monitor", "constraint", "cost_mode", "channel_costs",
                "attacked_threshold", "damage_norm", "stealth_norm", "norm_p", "window",
                "warmup_discard", "box_halfwidth", "eps1", "eps2", "eps3", "solver"});
    cfg.horizon = get_int(j, "attack", "horizon", cfg.horizon);
    cfg.seed = get_seed(j, "attack", "seed", cfg.seed);
    cfg.train_seed = get_seed(j, "attack", "train_seed", cfg.train_seed);
    cfg.train_steps = get_int(j, "attack", "train_steps", cfg.train_steps);
    cfg.lambda1 = get_num(j, "attack", "lambda1", cfg.lambda1);
    cfg.lambda1_corr = get_num(j, "attack", "lambda1_corr", cfg.lambda1_corr);
    cfg.lambda2 = get_num(j, "attack", "lambda2", cfg.lambda2);
    cfg.lambda3 = get_num(j, "attack", "lambda3", cfg.lambda3);
    cfg.monitor = parse_monitor(get_str(j, "attack", "monitor", "identity"), "attack");
    cfg.constraint = parse_constraint(get_str(j, "attack", "constraint", "diff_l2"), "attack");
    cfg.cost_mode = parse_cost_mode(get_str(j, "attack", "cost_mode", "continuous"), "attack");
    cfg.channel_costs = get_vector(j, "attack", "channel_costs", cfg.channel_costs);
    cfg.attacked_threshold = get_num(j, "attack", "attacked_threshold", cfg.attacked_threshold);
    if (j.contains("norm_p")) {
        // one knob setting both norms at once
        const Norm n = parse_norm(get_str(j, "attack", "norm_p", ""), "attack", "norm_p");
        cfg.damage_norm = n;
        cfg.stealth_norm = n;
    }
    if (j.contains("damage_norm"))
        cfg.damage_norm = parse_norm(get_str(j, "attack", "damage_norm", ""), "attack", "damage_norm");
    if (j.contains("stealth_norm"))
        cfg.stealth_norm =
            parse_norm(get_str(j, "attack", "stealth_norm", ""), "attack", "stealth_norm");
    cfg.window = get_int(j, "attack", "window", cfg.window);
    cfg.warmup_discard = get_int(j, "attack", "warmup_discard", cfg.warmup_discard);
    cfg.box_halfwidth = get_num(j, "attack", "box_halfwidth", cfg.box_halfwidth);
    cfg.eps1 = get_num(j, "attack", "eps1", cfg.eps1);
    cfg.eps2 = get_num(j, "attack", "eps2", cfg.eps2);
    cfg.eps3 = get_num(j, "attack", "eps3", cfg.eps3);
    if (j.contains("solver")) parse_solver(j["solver"], "attack.solver", cfg.solver);
    if (cfg.horizon < 2) fail("attack horizon must be at least 2");
    if (cfg.box_halfwidth <= 0) fail("attack box_halfwidth must be positive");
}

void parse_tuner(const json& j, const char* section, TunerConfig& t, bool allow_corr_ratio) {
    if (allow_corr_ratio)
        check_keys(j, section,
                   {"ae_threshold", "ap_threshold", "ac_threshold", "max_iter", "lambda1_min",
                    "lambda1_max", "lambda2_min", "lambda2_max", "lambda3_min", "lambda3_max",
                    "corr_ratio"});
    else
        check_keys(j, section,
                   {"ae_threshold", "ap_threshold", "ac_threshold", "max_iter", "lambda1_min",
                    "lambda1_max", "lambda2_min", "lambda2_max", "lambda3_min", "lambda3_max"});
    t.ae_threshold = get_num(j, section, "ae_threshold", t.ae_threshold);
    t.ap_threshold = get_num(j, section, "ap_threshold", t.ap_threshold);
    t.ac_threshold = get_num(j, section, "ac_threshold", t.ac_threshold);
    t.max_iter = get_int(j, section, "max_iter", t.max_iter);
    t.lambda1_min = get_num(j, section, "lambda1_min", t.lambda1_min);
    t.lambda1_max = get_num(j, section, "lambda1_max", t.lambda1_max);
    t.lambda2_min = get_num(j, section, "lambda2_min", t.lambda2_min);
    t.lambda2_max = get_num(j, section, "lambda2_max", t.lambda2_max);
    t.lambda3_min = get_num(j, section, "lambda3_min", t.lambda3_min);
    t.lambda3_max = get_num(j, section, "lambda3_max", t.lambda3_max);
    if (allow_corr_ratio) t.corr_ratio = get_num(j, section, "corr_ratio", t.corr_ratio);
}

void parse_detect(const json& j, DetectCommandConfig& cfg) {
    check_keys(j, "detect",
               {"method", "in_control", "test", "window", "k", "sigma_multiplier", "t2_quantile",
                "use_outputs"});
    const std::string m = get_str(j, "detect", "method", detect_method_name(cfg.method));
    if (m == "chart")
        cfg.method = DetectCommandConfig::Method::chart;
    else if (m == "t2")
        cfg.method = DetectCommandConfig::Method::t2;
    else if (m == "knn_raw")
        cfg.method = DetectCommandConfig::Method::knn_raw;
    else if (m == "knn_corr")
        cfg.method = DetectCommandConfig::Method::knn_corr;
    else if (m == "correlation")
        cfg.method = DetectCommandConfig::Method::correlation;
    else
        fail("unknown detect method \"" + m + "\"");
    cfg.in_control_path = get_str(j, "detect", "in_control", cfg.in_control_path);
    cfg.test_path = get_str(j, "detect", "test", cfg.test_path);
    cfg.window = get_int(j, "detect", "window", cfg.window);
    cfg.k = get_int(j, "detect", "k", cfg.k);
    cfg.sigma_multiplier = get_num(j, "detect", "sigma_multiplier", cfg.sigma_multiplier);
    cfg.t2_quantile = get_num(j, "detect", "t2_quantile", cfg.t2_quantile);
    cfg.use_outputs = get_bool(j, "detect", "use_outputs", cfg.use_outputs);
}

void parse_scenario(const json& j, ScenarioConfig& cfg) {
    check_keys(j, "scenario",
               {"variant", "horizon", "lead_in", "window", "warmup_discard", "train_steps",
                "multipliers", "tuner", "attack2_corr_ratio", "attack2_lambda2_max", "solver", "box_halfwidth",
                "channel_costs", "attacked_threshold", "knn_k", "knn_window", "train_seed", "attack_seed",
                "eval_seed"});
    const std::string v = get_str(j, "scenario", "variant", variant_name(cfg.variant));
    if (v == "attack1")
        cfg.variant = ScenarioConfig::Variant::attack1;
    else if (v == "attack2")
        cfg.variant = ScenarioConfig::Variant::attack2;
    else
        fail("unknown scenario variant \"" + v + "\"");
    cfg.horizon = get_int(j, "scenario", "horizon", cfg.horizon);
    cfg.lead_in = get_int(j, "scenario", "lead_in", cfg.lead_in);
    cfg.window = get_int(j, "scenario", "window", cfg.window);
    cfg.warmup_discard = get_int(j, "scenario", "warmup_discard", cfg.warmup_discard);
    cfg.train_steps = get_int(j, "scenario", "train_steps", cfg.train_steps);

    if (j.contains("multipliers") && j.contains("tuner"))
        fail("section \"scenario\" takes multipliers or tuner, not both");
    if (j.contains("multipliers")) {
        check_keys(j["multipliers"], "scenario.multipliers",
                   {"lambda1", "lambda1_corr", "lambda2", "lambda3"});
        cfg.use_tuner = false;
        cfg.lambda1 = get_num(j["multipliers"], "scenario.multipliers", "lambda1", 0.0);
        cfg.lambda1_corr = get_num(j["multipliers"], "scenario.multipliers", "lambda1_corr", 0.0);
        cfg.lambda2 = get_num(j["multipliers"], "scenario.multipliers", "lambda2", 0.0);
        cfg.lambda3 = get_num(j["multipliers"], "scenario.multipliers", "lambda3", 0.0);
    }
    if (j.contains("tuner")) {
        cfg.use_tuner = true;
        parse_tuner(j["tuner"], "scenario.tuner", cfg.tuner, false);
    }
    cfg.attack2_corr_ratio = get_num(j, "scenario", "attack2_corr_ratio", cfg.attack2_corr_ratio);
    cfg.attack2_lambda2_max =
        get_num(j, "scenario", "attack2_lambda2_max", cfg.attack2_lambda2_max);
    if (j.contains("solver")) {
        SolverSelection sel;
        sel.heuristic = cfg.solver;
        parse_solver(j["solver"], "scenario.solver", sel);
        if (sel.method == SolverSelection::Method::branch_reduce)
            fail("scenario solver must be projected_gradient or genetic");
        cfg.solver = sel.heuristic;
    }
    cfg.box_halfwidth = get_num(j, "scenario", "box_halfwidth", cfg.box_halfwidth);
    cfg.channel_costs = get_vector(j, "scenario", "channel_costs", cfg.channel_costs);
    cfg.attacked_threshold = get_num(j, "scenario", "attacked_threshold", cfg.attacked_threshold);
    cfg.knn_k = get_int(j, "scenario", "knn_k", cfg.knn_k);
    cfg.knn_window = get_int(j, "scenario", "knn_window", cfg.knn_window);
    cfg.train_seed = get_seed(j, "scenario", "train_seed", cfg.train_seed);
    cfg.attack_seed = get_seed(j, "scenario", "attack_seed", cfg.attack_seed);
    cfg.eval_seed = get_seed(j, "scenario", "eval_seed", cfg.eval_seed);
}

}  // namespace

const char* solver_method_name(SolverSelection::Method m) {
    switch (m) {
        case SolverSelection::Method::projected_gradient: return "projected_gradient";
        case SolverSelection::Method::genetic: return "genetic";
        case SolverSelection::Method::branch_reduce: return "branch_reduce";
    }
    return "projected_gradient";
}

const char* detect_method_name(DetectCommandConfig::Method m) {
    switch (m) {
        case DetectCommandConfig::Method::chart: return "chart";
        case DetectCommandConfig::Method::t2: return "t2";
        case DetectCommandConfig::Method::knn_raw: return "knn_raw";
        case DetectCommandConfig::Method::knn_corr: return "knn_corr";
        case DetectCommandConfig::Method::correlation: return "correlation";
    }
    return "chart";
}

CliConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(std::string("malformed JSON: ") + e.what());
    }

    CliConfig cfg;
    cfg.testbed = default_rolling_mill();
    check_keys(j, "(top level)", {"testbed", "simulate", "attack", "tune", "detect", "scenario"});
    if (j.contains("testbed")) parse_testbed(j["testbed"], cfg.testbed);
    cfg.scenario.testbed = cfg.testbed;

    if (j.contains("simulate")) parse_simulate(j["simulate"], cfg.simulate);
    if (j.contains("attack")) parse_attack(j["attack"], cfg.attack);
    if (j.contains("tune")) parse_tuner(j["tune"], "tune", cfg.tune, true);
    if (j.contains("detect")) parse_detect(j["detect"], cfg.detect);
    if (j.contains("scenario")) parse_scenario(j["scenario"], cfg.scenario);

    if (cfg.attack.channel_costs.size() == 0 && cfg.testbed.num_inputs() == 4) {
        cfg.attack.channel_costs = Vector::Zero(4);
        cfg.attack.channel_costs << 0.0, 2.0, 0.0, 2.0;
    }
    if (cfg.scenario.channel_costs.size() != cfg.testbed.num_inputs()) {
        // costs follow an overridden testbed shape unless the config pins them
        cfg.scenario.channel_costs = Vector::Zero(cfg.testbed.num_inputs());
    }
    return cfg;
}

CliConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot read config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

void apply_seed_override(CliConfig& cfg, const std::string& command, std::uint64_t seed) {
    if (command == "simulate") {
        cfg.simulate.seed = seed;
    } else if (command == "attack" || command == "tune") {
        cfg.attack.seed = seed;
        cfg.attack.train_seed = split_seed(seed, 100);
    } else if (command == "report") {
        cfg.scenario.train_seed = split_seed(seed, 1);
        cfg.scenario.attack_seed = split_seed(seed, 2);
        cfg.scenario.eval_seed = split_seed(seed, 3);
    }
}

void apply_thread_count(std::optional<int> cli_threads) {
    int n = 0;
    if (cli_threads.has_value()) {
        n = *cli_threads;
    } else if (const char* env = std::getenv("SAGE_THREADS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || parsed <= 0) return;  // ignore junk
        n = static_cast<int>(parsed);
    } else {
        return;
    }
    if (n <= 0) throw ConfigError("config error: thread count must be positive");
    Eigen::setNbThreads(n);
}

}  // namespace sage
