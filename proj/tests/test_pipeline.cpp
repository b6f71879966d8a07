#include <doctest.h>

#include <nlohmann/json.hpp>

#include "sonarmatch/pipeline.hpp"

using namespace sonarmatch;
using nlohmann::json;

namespace {

pipeline::PipelineConfig fast_identity_config(uint64_t scenario_seed) {
    pipeline::PipelineConfig cfg;
    synth::ScenarioParams p;
    p.seed = scenario_seed;
    p.height = 128;
    p.width = 128;
    p.shadow_count = 4;
    cfg.scenario = p;
    cfg.transfer_cfg.num_iterations = 5;
    cfg.transfer_cfg.step_size = 0.1;
    cfg.transfer_cfg.beta = 10.0;
    cfg.repeats = 1;
    return cfg;
}

} // namespace

TEST_CASE("map_correspondences is an identity passthrough with a dimension gate") {
    std::vector<match::Correspondence> corrs{{0, 1, 0.5, true}, {2, 3, 0.7, false}};
    auto out = pipeline::map_correspondences(corrs, {256, 256}, {256, 256});
    REQUIRE(out.size() == 2);
    CHECK(out[0].index_a == 0);
    CHECK(out[1].index_b == 3);

    CHECK(pipeline::map_correspondences({}, {64, 64}, {64, 64}).empty());

    try {
        pipeline::map_correspondences(corrs, {256, 256}, {255, 256});
        FAIL("expected DimensionMismatchError");
    } catch (const DimensionMismatchError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("256") != std::string::npos);
        CHECK(msg.find("255") != std::string::npos);
    }
}

TEST_CASE("config parsing applies defaults and validates enums") {
    auto cfg = pipeline::config_from_json(json::object());
    CHECK(cfg.repeats == 10);
    CHECK(cfg.match_cfg.ransac_threshold == doctest::Approx(3.0));
    CHECK(cfg.transfer_cfg.num_iterations == 300);
    CHECK_FALSE(cfg.match_cfg.ratio_test.has_value());

    json j;
    j["detector"] = "pigeon";
    CHECK_THROWS_AS(pipeline::config_from_json(j), ConfigError);
    json j2;
    j2["transfer"] = {{"mode", "sideways"}};
    CHECK_THROWS_AS(pipeline::config_from_json(j2), ConfigError);
    json j3;
    j3["repeats"] = 0;
    CHECK_THROWS_AS(pipeline::config_from_json(j3), ConfigError);
}

TEST_CASE("scenario JSON round trips including the homography") {
    json j;
    j["seed"] = 9;
    j["height"] = 128;
    j["width"] = 96;
    j["speckle_strength"] = 0.2;
    j["homography"] = "translate";
    auto p = pipeline::scenario_from_json(j);
    CHECK(p.homography(0, 2) == doctest::Approx(10.0));
    auto j2 = pipeline::scenario_to_json(p);
    auto p2 = pipeline::scenario_from_json(j2);
    CHECK((p.homography - p2.homography).norm() == doctest::Approx(0.0));
    CHECK(p2.speckle_strength == doctest::Approx(0.2));

    json bad = j;
    bad["homography"] = json::array({1, 2, 3});
    CHECK_THROWS_AS(pipeline::scenario_from_json(bad), ConfigError);
}

TEST_CASE("zero-step transfer makes the ours row equal a raw tfeat match") {
    auto cfg = fast_identity_config(21);
    cfg.transfer_cfg.step_size = 0.0;
    cfg.transfer_cfg.num_iterations = 1;
    auto report = pipeline::usme(cfg);
    REQUIRE(report.rows.size() == 1);
    const auto& ours = report.rows[0].report;

    // Reference: match the raw pair directly with the same seeded descriptor.
    auto pair = synth::gen_sonar_pair(*cfg.scenario);
    descriptor::DescriptorNet net(descriptor::NetShape{}, cfg.descriptor_seed);
    auto describe = [&net](const Patch& p) {
        const auto v = net.describe(p);
        Eigen::VectorXd out(v.size());
        for (long i = 0; i < v.size(); ++i) out(i) = static_cast<double>(v(i));
        return out;
    };
    auto ref = match::match_images(pair.image_a, pair.image_b, cfg.detector, describe,
                                   cfg.match_cfg, 1);
    CHECK(ours.n_inliers == ref.n_inliers);
    CHECK(ours.n_matches == ref.n_matches);
    CHECK(ours.pocm == doctest::Approx(ref.pocm));
}

TEST_CASE("usme emits traces, quality rows, and schema-complete JSON") {
    auto cfg = fast_identity_config(22);
    auto report = pipeline::usme(cfg);
    CHECK(!report.trace_a.empty());
    CHECK(!report.trace_b.empty());
    CHECK(report.quality_table.size() == 1);
    CHECK(report.selected_style == "synthetic");

    auto j = pipeline::experiment_report_to_json(report);
    for (const char* key : {"version", "config", "rows", "quality_table", "loss_trace_a",
                            "loss_trace_b", "selected_style"})
        CHECK(j.contains(key));
    REQUIRE(j["rows"].size() == 1);
    for (const char* key : {"pair_id", "detector", "descriptor", "preprocessing", "n_inliers",
                            "n_matches", "pocm", "runtime_seconds_mean", "runtime_seconds_runs",
                            "homography", "correspondences"})
        CHECK(j["rows"][0].contains(key));
}

TEST_CASE("compare_methods runs the full six-condition grid") {
    auto cfg = fast_identity_config(23);
    auto report = pipeline::compare_methods(cfg);
    REQUIRE(report.rows.size() == 6);
    CHECK(report.rows[0].condition == "raw+dog");
    CHECK(report.rows[5].condition == "ours2");

    // Identity pair, no degradation: both images equal, so every condition
    // that finds matches at all matches them perfectly.
    for (const auto& row : report.rows) {
        INFO("condition ", row.condition);
        REQUIRE(row.report.n_matches > 0);
        CHECK(row.report.pocm >= 0.99);
    }
}

TEST_CASE("usme is deterministic across runs (runtimes excluded)") {
    auto cfg = fast_identity_config(24);
    cfg.scenario->speckle_strength = 0.15;
    cfg.scenario->blur_sigma = 0.5;
    cfg.scenario->homography = synth::preset_homography("translate", 128, 128);
    auto r1 = pipeline::usme(cfg);
    auto r2 = pipeline::usme(cfg);
    REQUIRE(r1.rows.size() == r2.rows.size());
    for (size_t i = 0; i < r1.rows.size(); ++i) {
        CHECK(r1.rows[i].report.n_inliers == r2.rows[i].report.n_inliers);
        CHECK(r1.rows[i].report.n_matches == r2.rows[i].report.n_matches);
        CHECK(r1.rows[i].report.pocm == r2.rows[i].report.pocm);
    }
}

TEST_CASE("unknown extractor types are rejected") {
    pipeline::ExtractorConfig e;
    e.type = "resnet";
    CHECK_THROWS_AS(pipeline::make_extractor(e), ConfigError);
}

TEST_CASE("missing inputs surface as a stage error") {
    pipeline::PipelineConfig cfg; // no scenario, no paths
    CHECK_THROWS_AS(pipeline::usme(cfg), StageError);
}
