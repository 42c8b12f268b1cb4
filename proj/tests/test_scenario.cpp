#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sage/scenario.hpp"

using namespace sage;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing file ", path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// small enough to solve in well under a second, large enough to validate
ScenarioConfig small_config() {
    ScenarioConfig cfg;
    cfg.horizon = 300;
    cfg.lead_in = 50;
    cfg.window = 30;
    cfg.warmup_discard = 50;
    cfg.train_steps = 2000;
    cfg.use_tuner = false;
    cfg.lambda1 = 0.002;
    cfg.lambda1_corr = 0.0;
    cfg.lambda2 = 0.002;
    cfg.lambda3 = 0.004;
    cfg.solver.max_iterations = 300;
    cfg.solver.restarts = 0;
    return cfg;
}

}  // namespace

TEST_CASE("variant names") {
    CHECK(std::string(variant_name(ScenarioConfig::Variant::attack1)) == "attack1");
    CHECK(std::string(variant_name(ScenarioConfig::Variant::attack2)) == "attack2");
}

TEST_CASE("scenario validation") {
    ScenarioConfig base;
    CHECK_NOTHROW(validate_scenario(base));

    SUBCASE("window floor") {
        base.window = 1;
        CHECK_THROWS_WITH_AS(validate_scenario(base), doctest::Contains("window"),
                             std::invalid_argument);
    }
    SUBCASE("horizon must clear the discard and two analysis windows") {
        base.horizon = base.warmup_discard + 2 * base.window;
        CHECK_THROWS_WITH_AS(validate_scenario(base), doctest::Contains("horizon"),
                             std::invalid_argument);
    }
    SUBCASE("seed reuse") {
        base.eval_seed = base.train_seed;
        CHECK_THROWS_WITH_AS(validate_scenario(base), doctest::Contains("distinct"),
                             std::invalid_argument);
    }
    SUBCASE("fixed multipliers must be nonnegative") {
        base.use_tuner = false;
        base.lambda2 = -0.1;
        CHECK_THROWS_WITH_AS(validate_scenario(base), doctest::Contains("multiplier"),
                             std::invalid_argument);
    }
    SUBCASE("negative multipliers are fine while the tuner owns them") {
        base.use_tuner = true;
        base.lambda2 = -0.1;
        CHECK_NOTHROW(validate_scenario(base));
    }
    SUBCASE("even k") {
        base.knn_k = 6;
        CHECK_THROWS_WITH_AS(validate_scenario(base), doctest::Contains("odd"),
                             std::invalid_argument);
    }
    SUBCASE("classifier window floor") {
        base.knn_window = 1;
        CHECK_THROWS_WITH_AS(validate_scenario(base), doctest::Contains("knn_window"),
                             std::invalid_argument);
    }
    SUBCASE("negative attack2 constants") {
        base.attack2_corr_ratio = -1.0;
        CHECK_THROWS_WITH_AS(validate_scenario(base), doctest::Contains("attack2"),
                             std::invalid_argument);
    }
    SUBCASE("k larger than the balanced window count") {
        base.knn_window = base.horizon;  // one window total
        CHECK_THROWS_WITH_AS(validate_scenario(base), doctest::Contains("knn_k"),
                             std::invalid_argument);
    }
    SUBCASE("channel costs must match the input count") {
        base.channel_costs = Vector::Zero(2);
        CHECK_THROWS_WITH_AS(validate_scenario(base), doctest::Contains("channel_costs"),
                             std::invalid_argument);
    }
    SUBCASE("attacked threshold positive") {
        base.attacked_threshold = 0.0;
        CHECK_THROWS_WITH_AS(validate_scenario(base), doctest::Contains("attacked_threshold"),
                             std::invalid_argument);
    }
}

TEST_CASE("fixed multiplier scenario run is deterministic") {
    const ScenarioConfig cfg = small_config();
    const fs::path dir_a = fs::temp_directory_path() / "sage_scn_det_a";
    const fs::path dir_b = fs::temp_directory_path() / "sage_scn_det_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    const ScenarioReport ra = run_scenario(cfg, dir_a.string());
    const ScenarioReport rb = run_scenario(cfg, dir_b.string());

    CHECK(ra.ae == rb.ae);
    CHECK(ra.ap == rb.ap);
    CHECK(ra.ac == rb.ac);
    CHECK(ra.max_off_diagonal_correlation == rb.max_off_diagonal_correlation);
    CHECK(ra.input_chart.attack == rb.input_chart.attack);
    CHECK(ra.output_chart.attack == rb.output_chart.attack);
    CHECK(ra.knn_raw.accuracy == rb.knn_raw.accuracy);
    CHECK(ra.knn_corr.accuracy == rb.knn_corr.accuracy);
    CHECK(ra.solver_iterations == rb.solver_iterations);

    // every emitted series matches byte for byte
    REQUIRE(ra.files.size() == rb.files.size());
    for (size_t i = 0; i < ra.files.size(); ++i) {
        if (fs::path(ra.files[i]).extension() != ".csv") continue;
        CHECK_MESSAGE(slurp(ra.files[i]) == slurp(rb.files[i]),
                      "mismatch in ", fs::path(ra.files[i]).filename().string());
    }

    // report sanity on the first run
    CHECK(ra.variant == ScenarioConfig::Variant::attack1);
    CHECK_FALSE(ra.tuner_used);
    CHECK(ra.lambda1 == doctest::Approx(cfg.lambda1));
    CHECK(ra.lambda2 == doctest::Approx(cfg.lambda2));
    CHECK(ra.ae > 0.0);
    CHECK(ra.ap > 0.0);
    CHECK(ra.solver_iterations > 0);

    // the difference matrix covers the monitored input channels
    const int n = static_cast<int>(ra.correlation_difference.rows());
    CHECK(n == cfg.testbed.num_inputs());
    CHECK(static_cast<int>(ra.correlation_channels.size()) == n);
    for (int i = 0; i < n; ++i) CHECK(ra.correlation_difference(i, i) == 0.0);
    CHECK(ra.correlation_difference.isApprox(ra.correlation_difference.transpose(), 1e-12));

    CHECK(ra.input_chart.in_control >= 0.0);
    CHECK(ra.input_chart.in_control <= 1.0);
    CHECK(ra.output_chart.attack >= 0.0);
    CHECK(ra.output_chart.attack <= 1.0);

    REQUIRE(ra.files.size() == 6);
    for (const auto& f : ra.files) CHECK(fs::exists(f));
    CHECK(fs::path(ra.files[3]).filename() == "figure1_series.csv");
    CHECK(fs::path(ra.files[4]).filename() == "figure2_series.csv");

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("attack2 variant emits its own figure series") {
    ScenarioConfig cfg = small_config();
    cfg.variant = ScenarioConfig::Variant::attack2;
    cfg.lambda1_corr = 1.0;  // exercise the correlation stealth path

    const fs::path dir = fs::temp_directory_path() / "sage_scn_a2";
    fs::remove_all(dir);
    const ScenarioReport r = run_scenario(cfg, dir.string());

    CHECK(r.variant == ScenarioConfig::Variant::attack2);
    CHECK(r.lambda1_corr == doctest::Approx(1.0));
    CHECK(fs::path(r.files[3]).filename() == "figure3_series.csv");
    CHECK(fs::path(r.files[4]).filename() == "figure4_series.csv");
    CHECK(fs::exists(dir / "report.json"));

    fs::remove_all(dir);
}
