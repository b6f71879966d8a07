#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "sonarmatch/descriptor.hpp"
#include "sonarmatch/rng.hpp"

using namespace sonarmatch;
using descriptor::TripletDistances;

namespace {

Patch random_patch(int side, uint64_t seed) {
    Patch p(side);
    Rng rng(seed);
    for (double& v : p.pixels) v = rng.uniform();
    return p;
}

descriptor::NetShape small_shape() {
    descriptor::NetShape s;
    s.input_side = 8;
    s.conv1_kernel = 3;
    s.conv1_channels = 4;
    s.pool = true;
    s.conv2_kernel = 2;
    s.conv2_channels = 6;
    s.output_dim = 5;
    return s;
}

} // namespace

TEST_CASE("margin ranking loss on worked examples") {
    CHECK(descriptor::margin_ranking_loss({0.2, 1.5}, 1.0) == doctest::Approx(0.0));
    CHECK(descriptor::margin_ranking_loss({0.5, 0.8}, 1.0) == doctest::Approx(0.7));
    CHECK(descriptor::margin_ranking_loss({0.9, 0.9}, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(descriptor::margin_ranking_loss({0.1, 0.2}, 0.0), ConfigError);
    CHECK_THROWS_AS(descriptor::margin_ranking_loss({0.1, 0.2}, -1.0), ConfigError);
}

TEST_CASE("ratio loss on worked examples") {
    CHECK(descriptor::ratio_loss({0.7, 0.7}) == doctest::Approx(0.5));
    CHECK(descriptor::ratio_loss({0.0, 60.0}) == doctest::Approx(0.0).epsilon(1e-12));
    const double e = std::exp(1.0);
    CHECK(descriptor::ratio_loss({1.0, 0.0}) ==
          doctest::Approx(2.0 * (e / (e + 1.0)) * (e / (e + 1.0))).epsilon(1e-12));
}

TEST_CASE("ratio loss equals 2*softmax_plus^2 within 1e-12 on 1000 random pairs") {
    Rng rng(101);
    for (int i = 0; i < 1000; ++i) {
        const double dp = rng.uniform(0.0, 10.0);
        const double dm = rng.uniform(0.0, 10.0);
        const double m = std::max(dp, dm);
        const double ep = std::exp(dp - m), en = std::exp(dm - m);
        const double sp = ep / (ep + en);
        const double expect = 2.0 * sp * sp;
        CHECK(std::abs(descriptor::ratio_loss({dp, dm}) - expect) <= 1e-12);
    }
}

TEST_CASE("ratio loss range and monotonicity") {
    Rng rng(102);
    double prev = 2.0;
    // Strictly decreasing in (delta_minus - delta_plus).
    for (double gap = -3.0; gap <= 3.0; gap += 0.25) {
        const double v = descriptor::ratio_loss({1.0, 1.0 + gap});
        CHECK(v > 0.0);
        CHECK(v < 2.0);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(descriptor::ratio_loss({2.3, 2.3}) == doctest::Approx(0.5));
}

TEST_CASE("fpr_at_95 basics") {
    CHECK(descriptor::fpr_at_95({0.1, 0.2, 0.3}, {0.5, 0.6, 0.7}) == doctest::Approx(0.0));
    CHECK(descriptor::fpr_at_95({0.1}, {0.9}) == doctest::Approx(0.0));
}

TEST_CASE("fpr_at_95 on label-shuffled distances approaches 0.95") {
    Rng rng(103);
    std::vector<double> pos, neg;
    for (int i = 0; i < 4000; ++i) {
        const double d = rng.uniform();
        (rng.uniform() < 0.5 ? pos : neg).push_back(d);
    }
    const double fpr = descriptor::fpr_at_95(pos, neg);
    CHECK(fpr > 0.90);
    CHECK(fpr < 1.0);
    CHECK(fpr == doctest::Approx(0.95).epsilon(0.06));
}

TEST_CASE("describe is deterministic and rejects mismatched patch sizes") {
    descriptor::DescriptorNet net(descriptor::NetShape{}, 5);
    Patch p = random_patch(32, 104);
    auto f1 = net.describe(p);
    auto f2 = net.describe(p);
    CHECK((f1 - f2).norm() == doctest::Approx(0.0));
    CHECK(f1.size() == 128);
    for (long i = 0; i < f1.size(); ++i) {
        CHECK(f1(i) > -1.0);
        CHECK(f1(i) < 1.0);
    }
    Patch wrong = random_patch(16, 105);
    CHECK_THROWS_AS(net.describe(wrong), DimensionMismatchError);
}

TEST_CASE("constant patch through the bias-free net embeds to zero") {
    descriptor::DescriptorNet net(descriptor::NetShape{}, 6);
    Patch zero(32, 0.0);
    auto f = net.describe(zero); // normalization maps a constant patch to zeros
    CHECK(f.norm() == doctest::Approx(0.0));
}

TEST_CASE("describe matches an independent layer-by-layer forward pass") {
    const auto shape = small_shape();
    descriptor::BasicDescriptorNet<double> net(shape, 7);
    Patch patch = random_patch(shape.input_side, 106);

    // Independent reference: plain loops over the same stored weights.
    const auto& c1 = net.conv1();
    const auto& c2 = net.conv2();
    const auto& fc = net.fc();
    const int s = shape.input_side;
    const int h1 = s - shape.conv1_kernel + 1;
    const int hp = h1 / 2;
    const int h2 = hp - shape.conv2_kernel + 1;

    // Patch normalization.
    double mu = 0;
    for (double v : patch.pixels) mu += v;
    mu /= patch.pixels.size();
    double var = 0;
    for (double v : patch.pixels) var += (v - mu) * (v - mu);
    const double sd = std::sqrt(var / patch.pixels.size());
    std::vector<double> x(patch.pixels.size());
    for (size_t i = 0; i < x.size(); ++i) x[i] = (patch.pixels[i] - mu) / sd;

    // conv1 (valid) + tanh.
    std::vector<double> a1(static_cast<size_t>(shape.conv1_channels) * h1 * h1);
    for (int oc = 0; oc < shape.conv1_channels; ++oc)
        for (int oy = 0; oy < h1; ++oy)
            for (int ox = 0; ox < h1; ++ox) {
                double acc = c1.bias(oc);
                for (int ky = 0; ky < shape.conv1_kernel; ++ky)
                    for (int kx = 0; kx < shape.conv1_kernel; ++kx)
                        acc += c1.weight(oc, ky * shape.conv1_kernel + kx) *
                               x[static_cast<size_t>(oy + ky) * s + ox + kx];
                a1[(static_cast<size_t>(oc) * h1 + oy) * h1 + ox] = std::tanh(acc);
            }

    // 2x2 max pool.
    std::vector<double> ap(static_cast<size_t>(shape.conv1_channels) * hp * hp);
    for (int oc = 0; oc < shape.conv1_channels; ++oc)
        for (int oy = 0; oy < hp; ++oy)
            for (int ox = 0; ox < hp; ++ox) {
                double best = -1e300;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        best = std::max(
                            best, a1[(static_cast<size_t>(oc) * h1 + 2 * oy + dy) * h1 + 2 * ox + dx]);
                ap[(static_cast<size_t>(oc) * hp + oy) * hp + ox] = best;
            }

    // conv2 (valid) + tanh.
    std::vector<double> a2(static_cast<size_t>(shape.conv2_channels) * h2 * h2);
    for (int oc = 0; oc < shape.conv2_channels; ++oc)
        for (int oy = 0; oy < h2; ++oy)
            for (int ox = 0; ox < h2; ++ox) {
                double acc = c2.bias(oc);
                for (int ic = 0; ic < shape.conv1_channels; ++ic)
                    for (int ky = 0; ky < shape.conv2_kernel; ++ky)
                        for (int kx = 0; kx < shape.conv2_kernel; ++kx)
                            acc += c2.weight(oc, (static_cast<long>(ic) * shape.conv2_kernel + ky) *
                                                     shape.conv2_kernel +
                                                 kx) *
                                   ap[(static_cast<size_t>(ic) * hp + oy + ky) * hp + ox + kx];
                a2[(static_cast<size_t>(oc) * h2 + oy) * h2 + ox] = std::tanh(acc);
            }

    // Fully connected + tanh.
    std::vector<double> ref(shape.output_dim);
    for (int o = 0; o < shape.output_dim; ++o) {
        double acc = fc.bias(o);
        for (size_t i = 0; i < a2.size(); ++i) acc += fc.weight(o, static_cast<long>(i)) * a2[i];
        ref[o] = std::tanh(acc);
    }

    auto got = net.describe(patch);
    REQUIRE(got.size() == shape.output_dim);
    for (int o = 0; o < shape.output_dim; ++o)
        CHECK(got(o) == doctest::Approx(ref[o]).epsilon(1e-10));
}

TEST_CASE("triplet distances reduce to zero for repeated patches") {
    descriptor::DescriptorNet net(descriptor::NetShape{}, 8);
    Patch a = random_patch(32, 107);
    Patch other = random_patch(32, 108);
    auto d1 = descriptor::triplet_distances(net, {a, a, other});
    CHECK(d1.delta_plus == doctest::Approx(0.0));
    CHECK(d1.delta_minus > 0.0);
    auto d2 = descriptor::triplet_distances(net, {a, other, a});
    CHECK(d2.delta_minus == doctest::Approx(0.0));
}

TEST_CASE("triplet distances equal the Euclidean norms of embedding differences") {
    descriptor::DescriptorNet net(descriptor::NetShape{}, 9);
    Patch a = random_patch(32, 109), p = random_patch(32, 110), n = random_patch(32, 111);
    const auto fa = net.describe(a), fp = net.describe(p), fn = net.describe(n);
    auto d = descriptor::triplet_distances(net, {a, p, n});
    CHECK(d.delta_plus == doctest::Approx((fa - fp).norm()).epsilon(1e-12));
    CHECK(d.delta_minus == doctest::Approx((fa - fn).norm()).epsilon(1e-12));
}

TEST_CASE("triplet loss gradients match finite differences on a scaled-down net") {
    const auto shape = small_shape();
    for (auto kind : {descriptor::LossKind::Margin, descriptor::LossKind::Ratio}) {
        descriptor::BasicDescriptorNet<double> net(shape, 10);
        descriptor::Triplet t{random_patch(8, 112), random_patch(8, 113), random_patch(8, 114)};
        // Margin loss must be in its active region for a two-sided check.
        auto g = net.zero_grads();
        const double mu = 5.0;
        descriptor::triplet_loss_backward(net, t, kind, mu, g);

        auto loss_at = [&](descriptor::BasicDescriptorNet<double>& n2) {
            auto d = descriptor::triplet_distances(n2, t);
            return kind == descriptor::LossKind::Margin ? descriptor::margin_ranking_loss(d, mu)
                                                        : descriptor::ratio_loss(d);
        };

        const double eps = 1e-6;
        Rng pick(115);
        auto check_param = [&](auto getter, const auto& analytic) {
            for (int trial = 0; trial < 5; ++trial) {
                const long i = pick.uniform_int(0, static_cast<int>(analytic.size()) - 1);
                auto np = net, nm = net;
                getter(np).data()[i] += eps;
                getter(nm).data()[i] -= eps;
                const double fd = (loss_at(np) - loss_at(nm)) / (2 * eps);
                const double an = analytic.data()[i];
                const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
                CHECK(std::abs(fd - an) / denom <= 1e-3);
            }
        };
        check_param([](auto& n) -> auto& { return n.conv1().weight; }, g.dw1);
        check_param([](auto& n) -> auto& { return n.conv2().weight; }, g.dw2);
        check_param([](auto& n) -> auto& { return n.fc().weight; }, g.dwfc);
        check_param([](auto& n) -> auto& { return n.fc().bias; }, g.dbfc);
    }
}

TEST_CASE("zero learning rate leaves weights unchanged and history flat") {
    descriptor::BasicDescriptorNet<double> net(small_shape(), 11);
    Patch probe = random_patch(8, 116);
    const auto before = net.describe(probe);
    std::vector<descriptor::Triplet> data;
    for (int i = 0; i < 8; ++i)
        data.push_back({random_patch(8, 200 + i), random_patch(8, 300 + i),
                        random_patch(8, 400 + i)});
    descriptor::TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    auto hist = descriptor::train(net, data, cfg);
    CHECK((net.describe(probe) - before).norm() == doctest::Approx(0.0));
    REQUIRE(hist.epoch_mean_loss.size() == 3);
    CHECK(hist.epoch_mean_loss[0] == doctest::Approx(hist.epoch_mean_loss[1]));
    CHECK(hist.epoch_mean_loss[1] == doctest::Approx(hist.epoch_mean_loss[2]));
}

TEST_CASE("repeated full-batch steps do not increase the loss early on") {
    descriptor::BasicDescriptorNet<double> net(small_shape(), 12);
    std::vector<descriptor::Triplet> data;
    for (int i = 0; i < 6; ++i)
        data.push_back({random_patch(8, 500 + i), random_patch(8, 600 + i),
                        random_patch(8, 700 + i)});
    descriptor::TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.batch_size = static_cast<int>(data.size());
    cfg.epochs = 10;
    auto hist = descriptor::train(net, data, cfg);
    for (size_t e = 1; e < hist.epoch_mean_loss.size(); ++e)
        CHECK(hist.epoch_mean_loss[e] <= hist.epoch_mean_loss[e - 1] + 1e-9);
}

TEST_CASE("training is reproducible for a fixed seed") {
    std::vector<descriptor::Triplet> data;
    for (int i = 0; i < 10; ++i)
        data.push_back({random_patch(8, 800 + i), random_patch(8, 900 + i),
                        random_patch(8, 1000 + i)});
    descriptor::TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 3;
    cfg.seed = 42;
    descriptor::BasicDescriptorNet<double> n1(small_shape(), 13), n2(small_shape(), 13);
    auto h1 = descriptor::train(n1, data, cfg);
    auto h2 = descriptor::train(n2, data, cfg);
    CHECK(h1.epoch_mean_loss == h2.epoch_mean_loss);
    Patch probe = random_patch(8, 117);
    CHECK((n1.describe(probe) - n2.describe(probe)).norm() == doctest::Approx(0.0));
}

TEST_CASE("train rejects empty data and negative learning rates") {
    descriptor::BasicDescriptorNet<double> net(small_shape(), 14);
    descriptor::TrainConfig cfg;
    CHECK_THROWS_AS(descriptor::train(net, {}, cfg), InsufficientDataError);
    cfg.learning_rate = -0.5;
    std::vector<descriptor::Triplet> data{
        {random_patch(8, 1), random_patch(8, 2), random_patch(8, 3)}};
    CHECK_THROWS_AS(descriptor::train(net, data, cfg), ConfigError);
}

TEST_CASE("evaluate_descriptor separates stats and validates input") {
    descriptor::DescriptorNet net(descriptor::NetShape{}, 15);
    std::vector<descriptor::PairSample> pairs;
    Patch a = random_patch(32, 118);
    pairs.push_back({a, a, true}); // identical pair -> distance 0
    pairs.push_back({random_patch(32, 119), random_patch(32, 120), false});
    auto m = descriptor::evaluate_descriptor(net, pairs);
    CHECK(m.fpr95 == doctest::Approx(0.0));
    CHECK(m.mean_delta_plus == doctest::Approx(0.0));
    CHECK(m.mean_delta_minus > 0.0);

    std::vector<descriptor::PairSample> no_pos{
        {random_patch(32, 121), random_patch(32, 122), false}};
    CHECK_THROWS_AS(descriptor::evaluate_descriptor(net, no_pos), InsufficientDataError);
}

TEST_CASE("descriptor weight files round trip and validate") {
    descriptor::DescriptorNet net(descriptor::NetShape{}, 16);
    const std::string path = "/tmp/sonarmatch_test_descriptor.tfw";
    descriptor::save_weights(net, path);
    auto loaded = descriptor::load_weights(path);
    Patch probe = random_patch(32, 123);
    CHECK((net.describe(probe) - loaded.describe(probe)).norm() == doctest::Approx(0.0));

    SUBCASE("bad magic") {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        bytes[1] = 'Z';
        std::ofstream(path, std::ios::binary) << bytes;
        CHECK_THROWS_AS(descriptor::load_weights(path), BadMagicError);
    }
    SUBCASE("shape mismatch names the tensor") {
        auto tensors = nn::load_tensors(path);
        bool edited = false;
        for (auto& t : tensors)
            if (t.name == "fc.bias") {
                t.dims = {static_cast<uint32_t>(t.data.size() - 1)};
                t.data.pop_back();
                edited = true;
            }
        REQUIRE(edited);
        nn::save_tensors(path, tensors);
        try {
            descriptor::load_weights(path);
            FAIL("expected TensorShapeError");
        } catch (const TensorShapeError& e) {
            CHECK(std::string(e.what()).find("fc.bias") != std::string::npos);
        }
    }
    std::remove(path.c_str());
}
