#pragma once

#include "sage/objectives.hpp"
#include "sage/system_model.hpp"

namespace sage {

// Everything the attacker-facing metrics need. Stds are in-control estimates;
// both deviations are reported in units of them.
struct MetricInputs {
    Vector reference_output;  // p
    Matrix attack_response;   // T x p
    Matrix in_control;        // T x q
    Matrix attack_inputs;     // T x q
    Vector sigma_u;           // q, > 0
    Vector sigma_y;           // p, > 0
    CostSpec cost;
};

// Mean per-step l1 response deviation from the reference, in units of the
// mean in-control response std.
double attack_effectivity(const MetricInputs& inputs);

// Sum over channels of the mean absolute input deviation, divided by the sum
// of in-control input stds.
double average_perturbation(const MetricInputs& inputs);

// Indicator-mode attack cost; the quantity the tuner compares against its
// cost threshold.
double attack_cost_metric(const MetricInputs& inputs);

}  // namespace sage
