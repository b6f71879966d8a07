#include <doctest.h>

#include <cmath>

#include "sonarmatch/image.hpp"
#include "sonarmatch/rng.hpp"

using namespace sonarmatch;

namespace {

Image single_rgb(double r, double g, double b) {
    Image img(1, 1, 3, Colorspace::RGB);
    img.at(0, 0, 0) = r;
    img.at(0, 0, 1) = g;
    img.at(0, 0, 2) = b;
    return img;
}

Image random_rgb(int h, int w, uint64_t seed) {
    Image img(h, w, 3, Colorspace::RGB);
    Rng rng(seed);
    for (double& v : img.pixels) v = rng.uniform();
    return img;
}

} // namespace

TEST_CASE("rgb_to_yiq maps primaries and extremes per the NTSC matrix") {
    auto white = rgb_to_yiq(single_rgb(1, 1, 1));
    CHECK(white.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(white.at(0, 0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(white.at(0, 0, 2) == doctest::Approx(0.0).epsilon(1e-12));

    auto black = rgb_to_yiq(single_rgb(0, 0, 0));
    for (double v : black.pixels) CHECK(v == doctest::Approx(0.0));

    auto red = rgb_to_yiq(single_rgb(1, 0, 0));
    CHECK(red.at(0, 0, 0) == doctest::Approx(0.299));
    CHECK(red.at(0, 0, 1) == doctest::Approx(0.596));
    CHECK(red.at(0, 0, 2) == doctest::Approx(0.211));
    CHECK(red.colorspace == Colorspace::YIQ);
}

TEST_CASE("rgb_to_yiq rejects non-RGB input") {
    Image gray(2, 2, 1, Colorspace::GRAY, 0.5);
    CHECK_THROWS_AS(rgb_to_yiq(gray), InvalidColorspaceError);
}

TEST_CASE("yiq_to_rgb inverts the white point and zero") {
    Image wp(1, 1, 3, Colorspace::YIQ);
    wp.at(0, 0, 0) = 1.0;
    auto rgb = yiq_to_rgb(wp);
    for (double v : rgb.pixels) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));

    Image zero(1, 1, 3, Colorspace::YIQ);
    auto rgb0 = yiq_to_rgb(zero);
    for (double v : rgb0.pixels) CHECK(v == doctest::Approx(0.0));
    CHECK_THROWS_AS(yiq_to_rgb(single_rgb(0.5, 0.5, 0.5)), InvalidColorspaceError);
}

TEST_CASE("YIQ round trip is the identity within 1e-5 on random images") {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        Image img = random_rgb(7, 9, seed);
        Image back = yiq_to_rgb(rgb_to_yiq(img));
        REQUIRE(back.same_dims(img));
        for (size_t i = 0; i < img.pixels.size(); ++i)
            CHECK(back.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-5));
    }
}

TEST_CASE("to_gray weights and passthrough") {
    auto mid = to_gray(single_rgb(0.5, 0.5, 0.5));
    CHECK(mid.at(0, 0, 0) == doctest::Approx(0.5));

    auto green = to_gray(single_rgb(0, 1, 0));
    CHECK(green.at(0, 0, 0) == doctest::Approx(0.587));

    Image gray(3, 4, 1, Colorspace::GRAY, 0.25);
    auto same = to_gray(gray);
    CHECK(same.pixels == gray.pixels);

    Image yiq(1, 1, 3, Colorspace::YIQ);
    CHECK_THROWS_AS(to_gray(yiq), InvalidColorspaceError);
}

TEST_CASE("gray_to_rgb replicates the channel") {
    Image gray(2, 2, 1, Colorspace::GRAY, 0.3);
    auto rgb = gray_to_rgb(gray);
    CHECK(rgb.channels == 3);
    for (int c = 0; c < 3; ++c) CHECK(rgb.at(1, 1, c) == doctest::Approx(0.3));
}

TEST_CASE("histogram counts every pixel") {
    Image img(2, 2, 1, Colorspace::GRAY);
    img.pixels = {0.0, 0.5, 0.5, 1.0};
    auto h = histogram(img, 4);
    CHECK(h.total == 4);
    CHECK(h.counts[0] == 1);
    CHECK(h.counts[2] == 2);
    CHECK(h.counts[3] == 1); // 1.0 clamps into the top bin
}

TEST_CASE("extract_patch of a constant image is constant") {
    Image img(32, 32, 1, Colorspace::GRAY, 0.42);
    Keypoint kp{15.5, 15.5, 1.0, 0.7, 0.0};
    auto p = extract_patch(img, kp, 8);
    for (double v : p.pixels) CHECK(v == doctest::Approx(0.42));
}

TEST_CASE("axis-aligned unit-scale patch at integer center is a direct crop") {
    Image img(16, 16, 1, Colorspace::GRAY);
    Rng rng(5);
    for (double& v : img.pixels) v = rng.uniform();
    Keypoint kp{8.0, 8.0, 1.0, 0.0, 0.0};
    const int side = 5; // odd side keeps all samples on the integer grid
    auto p = extract_patch(img, kp, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            CHECK(p.at(y, x) == doctest::Approx(img.at(8 - side / 2 + y, 8 - side / 2 + x, 0)));
}

TEST_CASE("90-degree-orientation patch equals the axis-aligned patch rotated back") {
    Image img(21, 21, 1, Colorspace::GRAY);
    Rng rng(9);
    for (double& v : img.pixels) v = rng.uniform();
    Keypoint k0{10.0, 10.0, 1.0, 0.0, 0.0};
    Keypoint k90{10.0, 10.0, 1.0, M_PI / 2.0, 0.0};
    const int side = 5;
    auto p0 = extract_patch(img, k0, side);
    auto p90 = extract_patch(img, k90, side);
    // Sampling axes rotated by +90 deg: p90(y, x) = p0(x, side-1-y).
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            CHECK(p90.at(y, x) == doctest::Approx(p0.at(x, side - 1 - y)).epsilon(1e-9));
}

TEST_CASE("extract_patch is translation-equivariant for integer shifts") {
    Image img(24, 24, 1, Colorspace::GRAY);
    Rng rng(11);
    for (double& v : img.pixels) v = rng.uniform();
    Image shifted(24, 24, 1, Colorspace::GRAY);
    const int dx = 3, dy = 2;
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x)
            shifted.at(y, x, 0) = img.at((y - dy + 24) % 24, (x - dx + 24) % 24, 0);
    Keypoint kp{10.2, 9.7, 1.0, 0.3, 0.0};
    Keypoint kps{10.2 + dx, 9.7 + dy, 1.0, 0.3, 0.0};
    auto p1 = extract_patch(img, kp, 6);
    auto p2 = extract_patch(shifted, kps, 6);
    for (size_t i = 0; i < p1.pixels.size(); ++i)
        CHECK(p1.pixels[i] == doctest::Approx(p2.pixels[i]).epsilon(1e-12));
}

TEST_CASE("extract_patch rejects out-of-bounds support") {
    Image img(16, 16, 1, Colorspace::GRAY, 0.5);
    Keypoint edge{1.0, 1.0, 1.0, 0.0, 0.0};
    CHECK_FALSE(patch_in_bounds(img, edge, 8));
    CHECK_THROWS_AS(extract_patch(img, edge, 8), OutOfBoundsError);
    Keypoint center{8.0, 8.0, 1.0, 0.0, 0.0};
    CHECK(patch_in_bounds(img, center, 8));
    CHECK_NOTHROW(extract_patch(img, center, 8));
}

TEST_CASE("gaussian_blur preserves constants and handles sigma <= 0") {
    Image img(10, 10, 1, Colorspace::GRAY, 0.6);
    auto blurred = gaussian_blur(img, 1.5);
    for (double v : blurred.pixels) CHECK(v == doctest::Approx(0.6));
    auto same = gaussian_blur(img, 0.0);
    CHECK(same.pixels == img.pixels);
}
