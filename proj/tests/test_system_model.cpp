#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "sage/system_model.hpp"
#include "sage/trajectory_io.hpp"

using namespace sage;

namespace {

Testbed tiny_testbed() {
    Testbed tb;
    tb.state_transition = Matrix::Constant(1, 1, 0.5);
    tb.input_map = Matrix::Constant(1, 2, 0.25);
    tb.output_map = Matrix::Constant(1, 1, 1.0);
    tb.feedthrough = Matrix::Zero(1, 2);
    tb.process_noise_std = 0.0;
    tb.measurement_noise_std = 0.0;
    tb.input_setpoint = Vector::Zero(2);
    tb.input_ar_coefficient = 0.0;
    tb.input_noise_std = Vector::Zero(2);
    tb.reference_output = Vector::Zero(1);
    tb.channel_names = {"u0", "u1"};
    tb.output_names = {"y0"};
    return tb;
}

}  // namespace

TEST_CASE("testbed validation rejects broken setups") {
    Testbed ok = tiny_testbed();
    CHECK_NOTHROW(validate_testbed(ok));

    SUBCASE("unstable core") {
        Testbed tb = ok;
        tb.state_transition(0, 0) = 1.0;
        CHECK_THROWS_AS(validate_testbed(tb), std::invalid_argument);
    }
    SUBCASE("ar coefficient out of range") {
        Testbed tb = ok;
        tb.input_ar_coefficient = 1.0;
        CHECK_THROWS_AS(validate_testbed(tb), std::invalid_argument);
        tb.input_ar_coefficient = -0.1;
        CHECK_THROWS_AS(validate_testbed(tb), std::invalid_argument);
    }
    SUBCASE("negative noise") {
        Testbed tb = ok;
        tb.process_noise_std = -1e-3;
        CHECK_THROWS_AS(validate_testbed(tb), std::invalid_argument);
    }
    SUBCASE("shape mismatch") {
        Testbed tb = ok;
        tb.input_setpoint = Vector::Zero(3);
        CHECK_THROWS_AS(validate_testbed(tb), std::invalid_argument);
    }
}

TEST_CASE("spectral radius of a diagonal matrix") {
    Matrix a(2, 2);
    a << 0.4, 0.0, 0.0, -0.9;
    CHECK(spectral_radius(a) == doctest::Approx(0.9));
}

TEST_CASE("noise-free simulation settles on the static response") {
    Testbed tb = tiny_testbed();
    tb.input_setpoint << 1.0, 3.0;
    Trajectory traj = simulate_closed_loop(tb, 50, 7);

    // Inputs hold the setpoint exactly when the dither is off.
    CHECK((traj.inputs.rowwise() - tb.input_setpoint.transpose()).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));

    // Steady state: x = 0.5 x + 0.25 (u0 + u1)  =>  y = 2.
    CHECK(traj.outputs(49, 0) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("dither reaches its stationary spread") {
    Testbed tb = default_rolling_mill();
    Trajectory traj = simulate_closed_loop(tb, 40000, 123);
    const double a = tb.input_ar_coefficient;
    for (int j = 0; j < tb.num_inputs(); ++j) {
        const double target = tb.input_noise_std(j) / std::sqrt(1.0 - a * a);
        Vector col = traj.inputs.col(j);
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().sum() / (col.size() - 1));
        CHECK(sd == doctest::Approx(target).epsilon(0.03));
        CHECK(mean == doctest::Approx(tb.input_setpoint(j)).epsilon(0.05));
    }
}

TEST_CASE("simulation is reproducible per seed") {
    Testbed tb = default_rolling_mill();
    Trajectory a = simulate_closed_loop(tb, 500, 42);
    Trajectory b = simulate_closed_loop(tb, 500, 42);
    Trajectory c = simulate_closed_loop(tb, 500, 43);
    CHECK((a.inputs - b.inputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.outputs - b.outputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.inputs - c.inputs).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("injected inputs drive the same plant") {
    Testbed tb = default_rolling_mill();
    const int T = 600;
    Matrix held = tb.input_setpoint.transpose().replicate(T, 1);
    Trajectory traj = inject_inputs(tb, held, 9);
    CHECK(traj.inputs.rows() == T);
    CHECK((traj.inputs - held).cwiseAbs().maxCoeff() == 0.0);
    // Output wanders around the setpoint response, which is close to the
    // static gain times the setpoint.
    const double level = traj.outputs.col(0).tail(400).mean();
    CHECK(level == doctest::Approx(0.08).epsilon(0.35));
}

TEST_CASE("least squares recovers an exact linear map") {
    Trajectory traj;
    const int T = 200, q = 3;
    Matrix u(T, q);
    std::uint64_t s = 1;
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < q; ++j) {
            s = s * 6364136223846793005ULL + 1442695040888963407ULL;
            u(t, j) = static_cast<double>(s >> 40) / double(1 << 24) - 0.5;
        }
    Matrix beta(2, q);
    beta << 1.0, -2.0, 0.5, 0.0, 3.0, -1.0;
    Vector off(2);
    off << 0.7, -0.3;
    traj.inputs = u;
    traj.outputs = (u * beta.transpose()).rowwise() + off.transpose();

    LinearSystemModel m = fit_linear_model(traj);
    CHECK((m.coefficients - beta).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((m.offset - off).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(m.noise_std.maxCoeff() < 1e-9);

    Matrix pred = predict_outputs(m, u);
    CHECK((pred - traj.outputs).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("least squares error handling") {
    Trajectory traj;
    traj.inputs = Matrix::Random(4, 3);
    traj.outputs = Matrix::Random(4, 1);
    // T < q + 2
    CHECK_THROWS_AS(fit_linear_model(traj), std::invalid_argument);

    traj.inputs = Matrix::Random(50, 2);
    traj.inputs.col(1) = 2.0 * traj.inputs.col(0);  // collinear
    traj.outputs = Matrix::Random(50, 1);
    traj.input_names = {"left", "right"};
    CHECK_THROWS_WITH_AS(fit_linear_model(traj), doctest::Contains("collinear"),
                         std::runtime_error);
}

TEST_CASE("trajectory csv round trip") {
    Testbed tb = default_rolling_mill();
    Trajectory traj = simulate_closed_loop(tb, 64, 5);

    const std::string path =
        (std::filesystem::temp_directory_path() / "sage_roundtrip.csv").string();
    write_trajectory_csv(path, traj);
    Trajectory back = read_trajectory_csv(path);
    std::remove(path.c_str());

    CHECK(back.seed == traj.seed);
    CHECK(back.input_names == traj.input_names);
    CHECK(back.output_names == traj.output_names);
    REQUIRE(back.inputs.rows() == traj.inputs.rows());
    CHECK((back.inputs - traj.inputs).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((back.outputs - traj.outputs).cwiseAbs().maxCoeff() < 1e-10);
}
