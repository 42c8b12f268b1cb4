#include "doctest.h"
#include "sage/config.hpp"
#include "sage/rng.hpp"

using namespace sage;

TEST_CASE("empty config falls back to defaults") {
    CliConfig cfg = parse_config_text("{}");
    CHECK(cfg.simulate.steps == 2000);
    CHECK(cfg.scenario.horizon == 2000);
    CHECK(cfg.scenario.use_tuner);
    CHECK(cfg.scenario.knn_k == 7);
    CHECK(cfg.testbed.num_inputs() == 4);
    // scenario inherits the shared testbed block
    CHECK(cfg.scenario.testbed.channel_names == cfg.testbed.channel_names);
}

TEST_CASE("unknown keys are fatal and named") {
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"simulate": {"stepz": 5}})"),
                         doctest::Contains("stepz"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"scenario": {"windoww": 5}})"),
                         doctest::Contains("windoww"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"rocket": {}})"),
                         doctest::Contains("rocket"), ConfigError);
}

TEST_CASE("type mismatches are fatal and carry the section") {
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"simulate": {"steps": "many"}})"),
                         doctest::Contains("simulate"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"scenario": {"train_seed": -4}})"),
                         doctest::Contains("train_seed"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"attack": {"lambda1": []}})"),
                         doctest::Contains("lambda1"), ConfigError);
}

TEST_CASE("malformed json is a config error") {
    CHECK_THROWS_AS(parse_config_text("{"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(""), ConfigError);
}

TEST_CASE("scenario multipliers switch the tuner off") {
    CliConfig with_tuner = parse_config_text(R"({"scenario": {"variant": "attack2"}})");
    CHECK(with_tuner.scenario.use_tuner);
    CHECK(with_tuner.scenario.variant == ScenarioConfig::Variant::attack2);

    CliConfig fixed = parse_config_text(
        R"({"scenario": {"multipliers": {"lambda1": 0.25, "lambda2": 0.5}}})");
    CHECK(!fixed.scenario.use_tuner);
    CHECK(fixed.scenario.lambda1 == doctest::Approx(0.25));
    CHECK(fixed.scenario.lambda2 == doctest::Approx(0.5));
    CHECK(fixed.scenario.lambda3 == doctest::Approx(0.0));
}

TEST_CASE("scenario knobs parse") {
    CliConfig cfg = parse_config_text(R"({"scenario": {
        "knn_window": 40, "knn_k": 9,
        "attack2_corr_ratio": 500.0, "attack2_lambda2_max": 0.1,
        "tuner": {"ae_threshold": 6.5, "max_iter": 8}
    }})");
    CHECK(cfg.scenario.knn_window == 40);
    CHECK(cfg.scenario.knn_k == 9);
    CHECK(cfg.scenario.attack2_corr_ratio == doctest::Approx(500.0));
    CHECK(cfg.scenario.attack2_lambda2_max == doctest::Approx(0.1));
    CHECK(cfg.scenario.tuner.ae_threshold == doctest::Approx(6.5));
    CHECK(cfg.scenario.tuner.max_iter == 8);
}

TEST_CASE("testbed block overrides the surrogate") {
    CliConfig cfg = parse_config_text(R"({"testbed": {
        "pole": 0.5,
        "dc_gain": [[0.2, 0.1]],
        "input_ar_coefficient": 0.4,
        "input_stationary_std": [1.0, 1.0],
        "channel_names": ["a", "b"],
        "output_names": ["y"]
    }})");
    CHECK(cfg.testbed.num_states() == 1);
    CHECK(cfg.testbed.num_inputs() == 2);
    CHECK(cfg.testbed.input_ar_coefficient == doctest::Approx(0.4));
    // persistent shifts pass at the full static gain: (1 - pole) scaling
    CHECK(cfg.testbed.input_map(0, 0) == doctest::Approx(0.1));
    // stationary spread converts to the AR innovation std
    CHECK(cfg.testbed.input_noise_std(0) ==
          doctest::Approx(std::sqrt(1.0 - 0.16)));
    // the scenario sees the same override
    CHECK(cfg.scenario.testbed.num_inputs() == 2);

    CHECK_THROWS_WITH_AS(parse_config_text(R"({"testbed": {
        "input_noise_std": [1.0], "input_stationary_std": [1.0]
    }})"), doctest::Contains("not both"), ConfigError);
}

TEST_CASE("solver selection parses by name") {
    CliConfig cfg = parse_config_text(R"({"attack": {"solver": {"method": "genetic"}}})");
    CHECK(cfg.attack.solver.method == SolverSelection::Method::genetic);
    CHECK_THROWS_WITH_AS(
        parse_config_text(R"({"attack": {"solver": {"method": "annealing"}}})"),
        doctest::Contains("annealing"), ConfigError);
    CHECK(std::string(solver_method_name(SolverSelection::Method::branch_reduce)) ==
          "branch_reduce");
}

TEST_CASE("detect section parses methods and paths") {
    CliConfig cfg = parse_config_text(R"({"detect": {
        "method": "knn_corr", "in_control": "ic.csv", "test": "probe.csv", "k": 11
    }})");
    CHECK(cfg.detect.method == DetectCommandConfig::Method::knn_corr);
    CHECK(cfg.detect.in_control_path == "ic.csv");
    CHECK(cfg.detect.test_path == "probe.csv");
    CHECK(cfg.detect.k == 11);
    CHECK(std::string(detect_method_name(DetectCommandConfig::Method::t2)) == "t2");
}

TEST_CASE("seed override reaches the right command") {
    CliConfig cfg = parse_config_text("{}");

    apply_seed_override(cfg, "simulate", 99);
    CHECK(cfg.simulate.seed == 99);

    apply_seed_override(cfg, "attack", 55);
    CHECK(cfg.attack.seed == 55);
    CHECK(cfg.attack.train_seed == split_seed(55, 100));

    const std::uint64_t before_train = cfg.scenario.train_seed;
    apply_seed_override(cfg, "report", 7);
    CHECK(cfg.scenario.train_seed == split_seed(7, 1));
    CHECK(cfg.scenario.attack_seed == split_seed(7, 2));
    CHECK(cfg.scenario.eval_seed == split_seed(7, 3));
    CHECK(cfg.scenario.train_seed != before_train);
    // the three derived streams stay distinct
    CHECK(cfg.scenario.train_seed != cfg.scenario.attack_seed);
    CHECK(cfg.scenario.attack_seed != cfg.scenario.eval_seed);
}

TEST_CASE("unreadable file is a config error") {
    CHECK_THROWS_WITH_AS(load_config_file("/nonexistent/sage.json"),
                         doctest::Contains("cannot read"), ConfigError);
}
