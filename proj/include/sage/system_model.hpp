#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace sage {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Static input/output map fitted from recorded data: y = offset + coefficients * u.
// noise_std holds the per-output residual standard deviation of the fit.
struct LinearSystemModel {
    Vector offset;        // p
    Matrix coefficients;  // p x q
    Vector noise_std;     // p
};

// One recorded run: inputs row t is u_t (q channels), outputs row t is y_t
// (p responses). The seed that generated the run rides along for replay.
struct Trajectory {
    std::vector<std::string> input_names;
    std::vector<std::string> output_names;
    Matrix inputs;   // T x q
    Matrix outputs;  // T x p
    std::uint64_t seed = 0;
};

// Simulated plant standing in for the physical process: a stable discrete-time
// state-space core driven by per-channel AR(1) input corrections around a
// setpoint. input_noise_std is the AR innovation std; the stationary std is
// input_noise_std / sqrt(1 - a^2).
struct Testbed {
    Matrix state_transition;  // n x n, spectral radius < 1
    Matrix input_map;         // n x q
    Matrix output_map;        // p x n
    Matrix feedthrough;       // p x q
    double process_noise_std = 0.0;
    double measurement_noise_std = 0.0;
    Vector input_setpoint;        // q
    double input_ar_coefficient = 0.0;  // in [0, 1)
    Vector input_noise_std;       // q
    Vector reference_output;      // p
    std::vector<std::string> channel_names;  // q
    std::vector<std::string> output_names;   // p

    int num_states() const { return static_cast<int>(state_transition.rows()); }
    int num_inputs() const { return static_cast<int>(input_map.cols()); }
    int num_outputs() const { return static_cast<int>(output_map.rows()); }
};

// Throws std::invalid_argument on shape mismatch, AR coefficient outside
// [0, 1), negative noise, or spectral radius >= 1.
void validate_testbed(const Testbed& tb);

double spectral_radius(const Matrix& a);

// offset + coefficients * u_t per row; no noise.
Matrix predict_outputs(const LinearSystemModel& model, const Matrix& inputs);

// Generate T in-control steps (after an internal 300-step stationary burn-in).
Trajectory simulate_closed_loop(const Testbed& tb, int steps, std::uint64_t seed);

// Drive the plant with externally chosen inputs; fresh noise streams per seed.
Trajectory inject_inputs(const Testbed& tb, const Matrix& inputs, std::uint64_t seed);

// Ordinary least squares per output with intercept. Throws on too-short data
// (T < q + 2) and on rank-deficient inputs.
LinearSystemModel fit_linear_model(const Trajectory& traj);

// Default four-channel surrogate used by the scenario module. Two gap channels
// carry high static gain onto the thickness deviations, two force channels low
// gain; slow plant poles suppress the response to the fast in-control dither
// while passing persistent shifts at full gain.
Testbed default_rolling_mill();

}  // namespace sage
