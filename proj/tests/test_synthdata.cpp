#include <doctest.h>

#include <cmath>

#include "sonarmatch/quality.hpp"
#include "sonarmatch/synthdata.hpp"

using namespace sonarmatch;

TEST_CASE("identity scenario with no degradation reproduces image_a exactly") {
    synth::ScenarioParams p;
    p.seed = 1;
    p.height = 96;
    p.width = 96;
    auto pair = synth::gen_sonar_pair(p);
    CHECK(pair.image_b.pixels == pair.image_a.pixels);
}

TEST_CASE("generation is bit-identical for a repeated seed") {
    synth::ScenarioParams p;
    p.seed = 2;
    p.height = 96;
    p.width = 96;
    p.speckle_strength = 0.2;
    p.shadow_count = 3;
    p.blur_sigma = 0.7;
    p.brightness_shift = 0.05;
    p.homography = synth::preset_homography("rotate_scale", 96, 96);
    auto a = synth::gen_sonar_pair(p);
    auto b = synth::gen_sonar_pair(p);
    CHECK(a.image_a.pixels == b.image_a.pixels);
    CHECK(a.image_b.pixels == b.image_b.pixels);
}

TEST_CASE("pure translation warps pixels exactly in the overlap") {
    synth::ScenarioParams p;
    p.seed = 3;
    p.height = 96;
    p.width = 96;
    p.shadow_count = 4;
    p.homography = synth::preset_homography("translate", 96, 96);
    auto pair = synth::gen_sonar_pair(p);
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x + 10 < 96; ++x)
            CHECK(std::abs(pair.image_b.at(y, x + 10, 0) - pair.image_a.at(y, x, 0)) <= 1e-6);
}

TEST_CASE("non-invertible homography is rejected") {
    synth::ScenarioParams p;
    p.height = 96;
    p.width = 96;
    p.homography.setZero();
    CHECK_THROWS_AS(synth::gen_sonar_pair(p), ConfigError);
    Image img(8, 8, 1, Colorspace::GRAY, 0.5);
    CHECK_THROWS_AS(synth::warp_image(img, Eigen::Matrix3d::Zero()), ConfigError);
}

TEST_CASE("undersized scenarios are rejected") {
    synth::ScenarioParams p;
    p.height = 32;
    p.width = 96;
    CHECK_THROWS_AS(synth::gen_sonar_pair(p), ConfigError);
}

TEST_CASE("identity-pair triplets have pixel-identical anchors and positives") {
    synth::ScenarioParams p;
    p.seed = 4;
    p.height = 128;
    p.width = 128;
    p.shadow_count = 3;
    auto pair = synth::gen_sonar_pair(p);
    synth::TripletGenParams tg;
    tg.seed = 5;
    auto triplets = synth::gen_patch_triplets({pair}, 10, tg);
    REQUIRE(triplets.size() == 10);
    for (const auto& t : triplets) {
        REQUIRE(t.a.pixels.size() == t.p.pixels.size());
        for (size_t i = 0; i < t.a.pixels.size(); ++i)
            CHECK(t.a.pixels[i] == doctest::Approx(t.p.pixels[i]).epsilon(1e-12));
        CHECK(t.n.pixels != t.a.pixels);
    }
}

TEST_CASE("oversized negative separation triggers an insufficient-locations error") {
    synth::ScenarioParams p;
    p.seed = 6;
    p.height = 96;
    p.width = 96;
    auto pair = synth::gen_sonar_pair(p);
    synth::TripletGenParams tg;
    tg.min_separation = 500.0;
    CHECK_THROWS_AS(synth::gen_patch_triplets({pair}, 5, tg), InsufficientDataError);
    CHECK_THROWS_AS(synth::gen_patch_triplets({}, 5, tg), InsufficientDataError);
}

TEST_CASE("triplet generation yields the requested count across multiple pairs") {
    std::vector<synth::GroundTruthPair> pairs;
    for (uint64_t s = 7; s < 9; ++s) {
        synth::ScenarioParams p;
        p.seed = s;
        p.height = 160;
        p.width = 160;
        p.shadow_count = 2;
        p.homography = synth::preset_homography("rotate_scale", 160, 160);
        pairs.push_back(synth::gen_sonar_pair(p));
    }
    synth::TripletGenParams tg;
    tg.seed = 10;
    auto triplets = synth::gen_patch_triplets(pairs, 100, tg);
    CHECK(triplets.size() == 100);
    for (const auto& t : triplets) {
        CHECK(t.a.side == tg.patch_side);
        CHECK(t.p.side == tg.patch_side);
        CHECK(t.n.side == tg.patch_side);
    }
}

TEST_CASE("triplet generation is deterministic per seed") {
    synth::ScenarioParams p;
    p.seed = 11;
    p.height = 128;
    p.width = 128;
    p.shadow_count = 2;
    auto pair = synth::gen_sonar_pair(p);
    synth::TripletGenParams tg;
    tg.seed = 12;
    auto t1 = synth::gen_patch_triplets({pair}, 20, tg);
    auto t2 = synth::gen_patch_triplets({pair}, 20, tg);
    REQUIRE(t1.size() == t2.size());
    for (size_t i = 0; i < t1.size(); ++i) {
        CHECK(t1[i].a.pixels == t2[i].a.pixels);
        CHECK(t1[i].p.pixels == t2[i].p.pixels);
        CHECK(t1[i].n.pixels == t2[i].n.pixels);
    }
}

TEST_CASE("increasing speckle strictly lowers the PSNR against the clean warp") {
    synth::ScenarioParams base;
    base.seed = 13;
    base.height = 96;
    base.width = 96;
    base.shadow_count = 3;
    auto clean = synth::gen_sonar_pair(base); // identity, no degradation

    double prev = quality::kPsnrCapDb + 1;
    for (double s : {0.05, 0.15, 0.3}) {
        synth::ScenarioParams p = base;
        p.speckle_strength = s;
        auto noisy = synth::gen_sonar_pair(p);
        const double v = quality::psnr(clean.image_b, noisy.image_b);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("preset homographies") {
    auto id = synth::preset_homography("identity", 100, 100);
    CHECK((id - Eigen::Matrix3d::Identity()).norm() == doctest::Approx(0.0));
    auto tr = synth::preset_homography("translate", 100, 100);
    CHECK(tr(0, 2) == doctest::Approx(10.0));
    auto rs = synth::preset_homography("rotate_scale", 100, 100);
    CHECK(std::abs(rs.determinant()) > 0.1);
    CHECK_THROWS_AS(synth::preset_homography("bogus", 100, 100), ConfigError);
}
