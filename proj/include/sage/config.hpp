#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "sage/objectives.hpp"
#include "sage/scenario.hpp"
#include "sage/solvers.hpp"
#include "sage/system_model.hpp"

namespace sage {

// Bad config content: unknown keys, wrong types, unreadable file, invalid
// values. The CLI maps this to its config-error exit status.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimulateConfig {
    int steps = 2000;
    std::uint64_t seed = 1;
};

struct SolverSelection {
    enum class Method { projected_gradient, genetic, branch_reduce };
    Method method = Method::projected_gradient;
    HeuristicConfig heuristic;
    BranchReduceConfig branch;
};

// Problem construction shared by the attack and tune commands. The model is
// fitted on a fresh training run; the baseline the attack perturbs is a
// second, held-out run.
struct AttackCommandConfig {
    int horizon = 2400;
    std::uint64_t seed = 21;
    std::uint64_t train_seed = 20;
    int train_steps = 40000;
    double lambda1 = 0.002;
    double lambda1_corr = 0.0;
    double lambda2 = 0.0012;
    double lambda3 = 0.0;
    MonitorSpec::Variant monitor = MonitorSpec::Variant::identity;
    ConstraintSpec::Variant constraint = ConstraintSpec::Variant::diff_l2;
    CostSpec::Mode cost_mode = CostSpec::Mode::continuous;
    Vector channel_costs;  // empty = testbed default
    double attacked_threshold = 0.5;
    Norm damage_norm = Norm::l1;
    Norm stealth_norm = Norm::squared_l2;
    int window = 100;
    int warmup_discard = 200;
    double box_halfwidth = 8.0;
    double eps1 = std::numeric_limits<double>::infinity();
    double eps2 = std::numeric_limits<double>::infinity();
    double eps3 = std::numeric_limits<double>::infinity();
    SolverSelection solver;
};

struct DetectCommandConfig {
    enum class Method { chart, t2, knn_raw, knn_corr, correlation };
    Method method = Method::chart;
    std::string in_control_path;
    std::string test_path;
    int window = 100;
    int k = 7;
    double sigma_multiplier = 3.0;
    double t2_quantile = 0.9973;
    bool use_outputs = false;  // detectors read the input block unless set
};

// One schema for every command; each command reads its own section plus the
// shared testbed block.
struct CliConfig {
    Testbed testbed;
    SimulateConfig simulate;
    AttackCommandConfig attack;
    TunerConfig tune;
    DetectCommandConfig detect;
    ScenarioConfig scenario;
};

// Throws ConfigError on unknown keys (named, with their section), type
// mismatches, malformed JSON, or invalid values.
CliConfig parse_config_text(const std::string& text);
CliConfig load_config_file(const std::string& path);

// --seed plumbing: simulate/attack/tune take the value directly, the scenario
// derives its three split seeds from it.
void apply_seed_override(CliConfig& cfg, const std::string& command, std::uint64_t seed);

// --threads wins; otherwise SAGE_THREADS is consulted; otherwise untouched.
void apply_thread_count(std::optional<int> cli_threads);

const char* solver_method_name(SolverSelection::Method m);
const char* detect_method_name(DetectCommandConfig::Method m);

}  // namespace sage
