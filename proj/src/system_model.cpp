#include "sage/system_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sage/rng.hpp"

namespace sage {

double spectral_radius(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("spectral_radius: square matrix required");
    return a.eigenvalues().cwiseAbs().maxCoeff();
}

void validate_testbed(const Testbed& tb) {
    const int n = tb.num_states();
    const int q = tb.num_inputs();
    const int p = tb.num_outputs();
    if (n <= 0 || q <= 0 || p <= 0)
        throw std::invalid_argument("testbed: empty dimensions");
    if (tb.input_map.rows() != n) throw std::invalid_argument("testbed: input_map rows != states");
    if (tb.output_map.cols() != n) throw std::invalid_argument("testbed: output_map cols != states");
    if (tb.feedthrough.rows() != p || tb.feedthrough.cols() != q)
        throw std::invalid_argument("testbed: feedthrough shape mismatch");
    if (tb.input_setpoint.size() != q) throw std::invalid_argument("testbed: setpoint size != inputs");
    if (tb.input_noise_std.size() != q) throw std::invalid_argument("testbed: input_noise_std size != inputs");
    if (tb.reference_output.size() != p)
        throw std::invalid_argument("testbed: reference_output size != outputs");
    if (!(tb.input_ar_coefficient >= 0.0 && tb.input_ar_coefficient < 1.0))
        throw std::invalid_argument("testbed: AR coefficient must lie in [0, 1)");
    if (tb.process_noise_std < 0.0 || tb.measurement_noise_std < 0.0)
        throw std::invalid_argument("testbed: negative noise std");
    if ((tb.input_noise_std.array() < 0.0).any())
        throw std::invalid_argument("testbed: negative input noise std");
    if (tb.channel_names.size() != static_cast<size_t>(q))
        throw std::invalid_argument("testbed: channel_names size != inputs");
    if (tb.output_names.size() != static_cast<size_t>(p))
        throw std::invalid_argument("testbed: output_names size != outputs");
    // Stability is a hard requirement: an unstable core makes every downstream
    // statistic (charts, stds, correlation windows) meaningless.
    const double rho = spectral_radius(tb.state_transition);
    if (!(rho < 1.0))
        throw std::invalid_argument("testbed: spectral radius must be < 1, got " + std::to_string(rho));
}

Matrix predict_outputs(const LinearSystemModel& model, const Matrix& inputs) {
    const int p = static_cast<int>(model.offset.size());
    const int q = static_cast<int>(model.coefficients.cols());
    if (model.coefficients.rows() != p)
        throw std::invalid_argument("predict_outputs: offset/coefficients mismatch");
    if (inputs.cols() != q)
        throw std::invalid_argument("predict_outputs: inputs have wrong channel count");
    Matrix out(inputs.rows(), p);
    out = inputs * model.coefficients.transpose();
    out.rowwise() += model.offset.transpose();
    return out;
}

namespace {

// Shared propagation core. The three noise streams (input AR, process,
// measurement) are split from the master seed so in-control simulation and
// attack injection draw independent but reproducible noise.
Trajectory run_plant(const Testbed& tb, const Matrix& inputs, std::uint64_t seed) {
    const int n = tb.num_states();
    const int p = tb.num_outputs();
    const int steps = static_cast<int>(inputs.rows());
    Rng process_rng(split_seed(seed, 1));
    Rng measure_rng(split_seed(seed, 2));

    Trajectory traj;
    traj.input_names = tb.channel_names;
    traj.output_names = tb.output_names;
    traj.inputs = inputs;
    traj.outputs.resize(steps, p);
    traj.seed = seed;

    Vector x = Vector::Zero(n);
    for (int t = 0; t < steps; ++t) {
        const Vector u = inputs.row(t).transpose();
        Vector y = tb.output_map * x + tb.feedthrough * u;
        for (int i = 0; i < p; ++i) y(i) += measure_rng.normal(0.0, tb.measurement_noise_std);
        traj.outputs.row(t) = y.transpose();
        Vector w(n);
        for (int i = 0; i < n; ++i) w(i) = process_rng.normal(0.0, tb.process_noise_std);
        x = tb.state_transition * x + tb.input_map * u + w;
    }
    return traj;
}

Matrix draw_in_control_inputs(const Testbed& tb, int steps, std::uint64_t seed) {
    const int q = tb.num_inputs();
    const double a = tb.input_ar_coefficient;
    Rng rng(split_seed(seed, 0));
    Matrix inputs(steps, q);
    Vector noise(q);
    // Start each channel at its stationary distribution so no AR warm-up shows.
    const double stationary_scale = 1.0 / std::sqrt(1.0 - a * a);
    for (int j = 0; j < q; ++j)
        noise(j) = rng.normal(0.0, tb.input_noise_std(j) * stationary_scale);
    for (int t = 0; t < steps; ++t) {
        inputs.row(t) = (tb.input_setpoint + noise).transpose();
        for (int j = 0; j < q; ++j)
            noise(j) = a * noise(j) + rng.normal(0.0, tb.input_noise_std(j));
    }
    return inputs;
}

constexpr int kPlantBurnIn = 300;

}  // namespace

Trajectory simulate_closed_loop(const Testbed& tb, int steps, std::uint64_t seed) {
    validate_testbed(tb);
    if (steps <= 0) throw std::invalid_argument("simulate_closed_loop: steps must be positive");
    // Burn in past the plant transient so the returned block is stationary.
    const Matrix inputs = draw_in_control_inputs(tb, steps + kPlantBurnIn, seed);
    Trajectory full = run_plant(tb, inputs, seed);
    Trajectory traj;
    traj.input_names = full.input_names;
    traj.output_names = full.output_names;
    traj.inputs = full.inputs.bottomRows(steps);
    traj.outputs = full.outputs.bottomRows(steps);
    traj.seed = seed;
    return traj;
}

Trajectory inject_inputs(const Testbed& tb, const Matrix& inputs, std::uint64_t seed) {
    validate_testbed(tb);
    if (inputs.rows() == 0) throw std::invalid_argument("inject_inputs: empty input sequence");
    if (inputs.cols() != tb.num_inputs())
        throw std::invalid_argument("inject_inputs: channel count mismatch");
    return run_plant(tb, inputs, seed);
}

LinearSystemModel fit_linear_model(const Trajectory& traj) {
    const int T = static_cast<int>(traj.inputs.rows());
    const int q = static_cast<int>(traj.inputs.cols());
    const int p = static_cast<int>(traj.outputs.cols());
    if (traj.outputs.rows() != T)
        throw std::invalid_argument("fit_linear_model: inputs/outputs row mismatch");
    if (T < q + 2)
        throw std::invalid_argument("fit_linear_model: need at least q + 2 samples");

    Matrix design(T, q + 1);
    design.col(0).setOnes();
    design.rightCols(q) = traj.inputs;

    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < q + 1) {
        // the pivoting pushes dependent columns to the back; name those channels
        std::string who;
        const auto perm = qr.colsPermutation().indices();
        for (int i = static_cast<int>(qr.rank()); i < q + 1; ++i) {
            const int col = perm(i);
            if (!who.empty()) who += ", ";
            if (col == 0)
                who += "intercept";
            else if (col - 1 < static_cast<int>(traj.input_names.size()))
                who += traj.input_names[static_cast<size_t>(col - 1)];
            else
                who += "channel " + std::to_string(col - 1);
        }
        throw std::runtime_error("fit_linear_model: collinear input channels: " + who);
    }

    LinearSystemModel model;
    model.offset.resize(p);
    model.coefficients.resize(p, q);
    model.noise_std.resize(p);
    const Matrix theta = qr.solve(traj.outputs);  // (q+1) x p
    for (int i = 0; i < p; ++i) {
        model.offset(i) = theta(0, i);
        model.coefficients.row(i) = theta.col(i).tail(q).transpose();
    }
    const Matrix residual = traj.outputs - design * theta;
    const int dof = std::max(1, T - q - 1);
    for (int i = 0; i < p; ++i)
        model.noise_std(i) = std::sqrt(residual.col(i).squaredNorm() / dof);
    return model;
}

Testbed default_rolling_mill() {
    Testbed tb;
    const int n = 2, q = 4, p = 2;
    // Slow rolls: the pole at 0.993 passes persistent input shifts at full
    // static gain but knocks the fast in-control dither down to a few percent.
    tb.state_transition = Matrix::Identity(n, n) * 0.993;
    // Static gains: gap channels dominate, force channels an order of
    // magnitude weaker, strong cross-coupling between the two axes.
    Matrix dc_gain(p, q);
    dc_gain << 0.30, 0.03, 0.20, 0.02,
               0.20, 0.02, 0.30, 0.03;
    tb.input_map = (Matrix::Identity(n, n) - tb.state_transition) * dc_gain;
    tb.output_map = Matrix::Identity(p, n);
    tb.feedthrough = Matrix::Zero(p, q);
    tb.process_noise_std = 0.001;
    tb.measurement_noise_std = 0.01;
    // The line runs to the high side of tolerance: the gap setpoints hold the
    // thickness deviation near +0.08 rather than on the reference itself.
    tb.input_setpoint = Vector::Zero(q);
    tb.input_setpoint(0) = 0.16;
    tb.input_setpoint(2) = 0.16;
    tb.input_ar_coefficient = 0.3;
    // Operator dither is wide on every actuator; the stationary spread is
    // what a stealthy input shift has to hide under.
    Vector stationary(q);
    stationary << 2.0, 2.0, 2.0, 2.0;
    tb.input_noise_std = stationary * std::sqrt(1.0 - tb.input_ar_coefficient * tb.input_ar_coefficient);
    tb.reference_output = Vector::Zero(p);
    tb.channel_names = {"x_gap", "x_force", "y_gap", "y_force"};
    tb.output_names = {"x_thickness_dev", "y_thickness_dev"};
    return tb;
}

}  // namespace sage
