#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sage/detectors.hpp"
#include "sage/metrics.hpp"
#include "sage/solvers.hpp"
#include "sage/system_model.hpp"

namespace sage {

// End-to-end experiment description. The attack is solved over
// lead_in + horizon steps; metrics, detectors, and emitted series all use the
// final `horizon` steps so the plant transient and the attack onset stay out
// of the scored window.
struct ScenarioConfig {
    enum class Variant { attack1, attack2 };
    Variant variant = Variant::attack1;

    int horizon = 2000;
    int lead_in = 400;
    int window = 100;
    int warmup_discard = 200;
    int train_steps = 40000;

    // Multiplier source: either the tuner searches them (default) or the
    // explicit values below are used as-is.
    bool use_tuner = true;
    double lambda1 = 0.0;
    double lambda1_corr = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;
    TunerConfig tuner;
    // window-variance stealth weight relative to lambda1, applied only to the
    // attack2 variant while tuning
    double attack2_corr_ratio = 8000.0;
    // smoothing-weight cap while tuning attack2. The window-variance term
    // cannot see trades that swap the fast dither for slow waves of equal
    // variance, so the smoothing pool has to stay small for that attack.
    double attack2_lambda2_max = 0.05;

    HeuristicConfig solver;
    double box_halfwidth = 8.0;

    Vector channel_costs;            // empty = testbed default (0,2,0,2)
    double attacked_threshold = 0.5; // indicator tau for the cost metric

    int knn_k = 7;
    // classifier windowing; shorter than the correlation-analysis window so
    // the balanced datasets carry enough windows per class
    int knn_window = 25;

    std::uint64_t train_seed = 11;
    std::uint64_t attack_seed = 22;
    std::uint64_t eval_seed = 33;

    Testbed testbed;

    ScenarioConfig();
};

struct ChartRates {
    double in_control = 0.0;
    double attack = 0.0;
};

struct ScenarioReport {
    ScenarioConfig::Variant variant = ScenarioConfig::Variant::attack1;

    double ae = 0.0;
    double ap = 0.0;
    double ac = 0.0;

    // multipliers actually used for the reported solution
    double lambda1 = 0.0;
    double lambda1_corr = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;

    // monitored input channels, q x q, diagonal zero
    Matrix correlation_difference;
    std::vector<std::string> correlation_channels;
    double max_off_diagonal_correlation = 0.0;

    ChartRates input_chart;
    ChartRates output_chart;

    DetectionReport chart_detection;  // per-step, monitored inputs
    DetectionReport t2_detection;     // per-step, monitored inputs
    DetectionReport knn_raw;          // per-window
    DetectionReport knn_corr;         // per-window

    bool tuner_used = false;
    int tuner_iterations = 0;
    int tuner_solves = 0;
    bool thresholds_met = false;
    bool degenerate_interval = false;

    bool solver_converged = false;
    int solver_iterations = 0;
    std::string solver_note;

    std::vector<std::string> files;
    std::string output_dir;
};

// Throws std::invalid_argument on horizon/window conflicts, reused seeds,
// non-odd k, or an invalid testbed.
void validate_scenario(const ScenarioConfig& cfg);

// Full pipeline: simulate and fit, replay baseline, solve the variant,
// inject, score, detect, and write every artifact under output_dir.
// Solver trouble is reported in the result; failure to write a file throws.
ScenarioReport run_scenario(const ScenarioConfig& cfg, const std::string& output_dir);

const char* variant_name(ScenarioConfig::Variant v);

}  // namespace sage
