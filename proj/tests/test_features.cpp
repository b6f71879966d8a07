#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "sonarmatch/features.hpp"
#include "sonarmatch/rng.hpp"

using namespace sonarmatch;
using features::MatD;

namespace {

Image random_gray(int h, int w, uint64_t seed) {
    Image img(h, w, 1, Colorspace::GRAY);
    Rng rng(seed);
    for (double& v : img.pixels) v = rng.uniform();
    return img;
}

} // namespace

TEST_CASE("gram on hand-computable inputs") {
    MatD f(1, 2);
    f << 1, 2;
    MatD g = features::gram(f);
    REQUIRE(g.rows() == 1);
    CHECK(g(0, 0) == doctest::Approx(5.0));

    MatD zero = MatD::Zero(3, 4);
    CHECK(features::gram(zero).norm() == doctest::Approx(0.0));

    MatD eye(2, 2);
    eye << 1, 0, 0, 1;
    MatD ge = features::gram(eye);
    CHECK(ge(0, 0) == doctest::Approx(1.0));
    CHECK(ge(0, 1) == doctest::Approx(0.0));
    CHECK(ge(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("gram equals the brute-force double loop on small matrices") {
    Rng rng(51);
    for (int n = 1; n <= 4; ++n) {
        for (int m = 1; m <= 4; ++m) {
            MatD f(n, m);
            for (long i = 0; i < f.size(); ++i) f.data()[i] = rng.normal();
            MatD g = features::gram(f);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = 0;
                    for (int k = 0; k < m; ++k) s += f(i, k) * f(j, k);
                    CHECK(g(i, j) == doctest::Approx(s).epsilon(1e-12));
                }
        }
    }
}

TEST_CASE("gram is symmetric and positive semi-definite") {
    Rng rng(52);
    MatD f(5, 9);
    for (long i = 0; i < f.size(); ++i) f.data()[i] = rng.normal();
    MatD g = features::gram(f);
    CHECK((g - g.transpose()).norm() == doctest::Approx(0.0));
    Eigen::SelfAdjointEigenSolver<MatD> es(g);
    for (long i = 0; i < es.eigenvalues().size(); ++i) CHECK(es.eigenvalues()(i) >= -1e-8);
}

TEST_CASE("zero image through the bias-free tiny extractor gives zero activations") {
    auto ex = features::ConvNetExtractor::tiny(1, 7);
    Image zero(12, 12, 1, Colorspace::GRAY, 0.0);
    auto acts = ex.extract(zero, ex.layer_names());
    for (const auto& [name, f] : acts.maps) CHECK(f.norm() == doctest::Approx(0.0));
}

TEST_CASE("extraction is deterministic") {
    auto ex = features::ConvNetExtractor::tiny(1, 7);
    Image img = random_gray(16, 16, 53);
    auto a1 = ex.extract(img, {"conv2"});
    auto a2 = ex.extract(img, {"conv2"});
    CHECK((a1.maps.at("conv2") - a2.maps.at("conv2")).norm() == doctest::Approx(0.0));
}

TEST_CASE("unknown layer names are rejected") {
    auto ex = features::ConvNetExtractor::tiny(1, 7);
    Image img = random_gray(12, 12, 54);
    CHECK_THROWS_AS(ex.extract(img, {"no_such_layer"}), Error);
}

TEST_CASE("single known 3x3 convolution matches a hand-convolved oracle") {
    // Build a one-layer extractor and overwrite its weights via the TFW1 file.
    features::ConvLayerSpec spec;
    spec.name = "c1";
    spec.out_channels = 1;
    spec.kernel = 3;
    spec.activation = features::Activation::Tanh;
    spec.pool_after = features::Pool::None;
    features::ConvNetExtractor ex(1, {spec}, 0);

    const double kernel[3][3] = {{0.5, -1, 0.25}, {2, 0, -0.75}, {1, 1, -2}};
    std::vector<nn::NamedTensor> tensors(2);
    tensors[0].name = "c1.weight";
    tensors[0].dims = {1, 1, 3, 3};
    for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx)
            tensors[0].data.push_back(static_cast<float>(kernel[ky][kx]));
    tensors[1].name = "c1.bias";
    tensors[1].dims = {1};
    tensors[1].data = {0.0f};
    const std::string path = "/tmp/sonarmatch_test_known_conv.tfw";
    nn::save_tensors(path, tensors);
    ex.load_weights(path);
    std::remove(path.c_str());

    Image img = random_gray(4, 4, 55);
    auto acts = ex.extract(img, {"c1"});
    const MatD& f = acts.maps.at("c1");
    REQUIRE(f.cols() == 16);
    // Same padding (pad 1), tanh after the convolution; float weights, so the
    // comparison tolerance reflects float32 kernel storage.
    for (int oy = 0; oy < 4; ++oy)
        for (int ox = 0; ox < 4; ++ox) {
            double s = 0;
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx) {
                    const int iy = oy + ky - 1, ix = ox + kx - 1;
                    if (iy < 0 || iy >= 4 || ix < 0 || ix >= 4) continue;
                    s += kernel[ky][kx] * img.at(iy, ix, 0);
                }
            CHECK(f(0, oy * 4 + ox) == doctest::Approx(std::tanh(s)).epsilon(1e-6));
        }
}

TEST_CASE("input_gradient is the exact adjoint of extract") {
    auto ex = features::ConvNetExtractor::tiny(1, 7);
    Image img = random_gray(10, 10, 56);

    // Scalar functional: sum of <W_l, F_l> for random W_l.
    const auto layers = ex.layer_names();
    auto acts = ex.extract(img, layers);
    std::map<std::string, MatD> w;
    Rng rng(57);
    for (const auto& name : layers) {
        MatD m(acts.maps.at(name).rows(), acts.maps.at(name).cols());
        for (long i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
        w[name] = m;
    }
    auto value = [&](const Image& x) {
        auto a = ex.extract(x, layers);
        double s = 0;
        for (const auto& name : layers) s += (a.maps.at(name).array() * w.at(name).array()).sum();
        return s;
    };

    Image grad = ex.input_gradient(img, w);
    REQUIRE(grad.same_dims(img));

    Rng pick(58);
    const double eps = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
        const size_t i = static_cast<size_t>(
            pick.uniform_int(0, static_cast<int>(img.pixels.size()) - 1));
        Image xp = img, xm = img;
        xp.pixels[i] += eps;
        xm.pixels[i] -= eps;
        const double fd = (value(xp) - value(xm)) / (2 * eps);
        const double an = grad.pixels[i];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
        CHECK(std::abs(fd - an) / denom <= 1e-3);
    }
}

TEST_CASE("extractor weight save/load round trips") {
    auto ex = features::ConvNetExtractor::tiny(1, 99);
    Image img = random_gray(12, 12, 60);
    auto before = ex.extract(img, {"conv2"});
    const std::string path = "/tmp/sonarmatch_test_extractor.tfw";
    ex.save_weights(path);
    auto ex2 = features::ConvNetExtractor::tiny(1, 1); // different seed, then overwritten
    ex2.load_weights(path);
    std::remove(path.c_str());
    auto after = ex2.extract(img, {"conv2"});
    // Weights travel through float32 storage, so allow float truncation.
    const double diff = (before.maps.at("conv2") - after.maps.at("conv2")).norm();
    CHECK(diff <= 1e-5 * (1.0 + before.maps.at("conv2").norm()));
}

TEST_CASE("image/mat layout helpers invert each other") {
    Image img = random_gray(6, 5, 61);
    MatD m = features::image_to_mat(img);
    REQUIRE(m.rows() == 1);
    REQUIRE(m.cols() == 30);
    Image back = features::mat_to_image(m, 6, 5, Colorspace::GRAY);
    CHECK(back.pixels == img.pixels);
}
