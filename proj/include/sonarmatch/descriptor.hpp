#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sonarmatch/image.hpp"
#include "sonarmatch/nn.hpp"

namespace sonarmatch::descriptor {

struct Triplet {
    Patch a; // anchor
    Patch p; // positive: same physical point, different view
    Patch n; // negative: different keypoint
};

struct TripletDistances {
    double delta_plus = 0.0;
    double delta_minus = 0.0;
};

enum class LossKind { Margin, Ratio };

struct TrainConfig {
    LossKind loss = LossKind::Margin;
    double mu = 1.0; // margin (margin loss only)
    double learning_rate = 0.01;
    int batch_size = 32;
    int epochs = 10;
    uint64_t seed = 0;
};

struct PairSample {
    Patch a;
    Patch b;
    bool same = false;
};

struct EvalMetrics {
    double fpr95 = 0.0;
    double mean_delta_plus = 0.0;
    double mean_delta_minus = 0.0;
};

/// max(0, mu + d+ - d-).
double margin_ranking_loss(const TripletDistances& d, double mu);

/// (e^{d+}/(e^{d+}+e^{d-}))^2 + (1 - e^{d-}/(e^{d+}+e^{d-}))^2, shift-stabilized.
double ratio_loss(const TripletDistances& d);

/// FPR at 95% true-positive recall from labeled pair distances.
double fpr_at_95(const std::vector<double>& pos_dist, const std::vector<double>& neg_dist);

struct NetShape {
    int input_side = 32;
    int conv1_kernel = 7;
    int conv1_channels = 32;
    bool pool = true; // 2x2 max pool after conv1
    int conv2_kernel = 6;
    int conv2_channels = 64;
    int output_dim = 128;
};

/// Shallow triplet-trained patch descriptor: conv-tanh-pool-conv-tanh-fc-tanh.
/// Patches are mean/std normalized before the first layer.
template <class T>
class BasicDescriptorNet {
public:
    using Mat = nn::Mat<T>;
    using Vec = nn::Vec<T>;

    struct Grads {
        Mat dw1, dw2, dwfc;
        Vec db1, db2, dbfc;
    };

    struct Tape {
        Mat x, col1, y1, x2, col2, y2;
        std::vector<long> argmax;
        Vec flat, out;
    };

    BasicDescriptorNet() : BasicDescriptorNet(NetShape{}, 0) {}

    BasicDescriptorNet(const NetShape& shape, uint64_t seed) : shape_(shape) {
        h1_ = shape.input_side - shape.conv1_kernel + 1;
        hp_ = shape.pool ? h1_ / 2 : h1_;
        h2_ = hp_ - shape.conv2_kernel + 1;
        if (h1_ < 1 || hp_ < 1 || h2_ < 1)
            throw ConfigError("descriptor net: kernel sizes exceed input side");
        conv1_ = nn::Conv2D<T>(1, shape.conv1_channels, shape.conv1_kernel, 0);
        conv2_ = nn::Conv2D<T>(shape.conv1_channels, shape.conv2_channels, shape.conv2_kernel, 0);
        fc_ = nn::Linear<T>(shape.conv2_channels * h2_ * h2_, shape.output_dim);
        Rng rng(seed);
        conv1_.init_random(rng);
        conv2_.init_random(rng);
        fc_.init_random(rng);
    }

    const NetShape& shape() const { return shape_; }
    int input_side() const { return shape_.input_side; }
    int output_dim() const { return shape_.output_dim; }

    /// Mean/std normalized patch as a 1 x S*S activation matrix.
    Mat normalize(const Patch& patch) const {
        if (patch.side != shape_.input_side)
            throw DimensionMismatchError("describe: patch side does not match net input side");
        const size_t n = patch.pixels.size();
        double mu = 0;
        for (double v : patch.pixels) mu += v;
        mu /= static_cast<double>(n);
        double var = 0;
        for (double v : patch.pixels) var += (v - mu) * (v - mu);
        const double sd = std::sqrt(var / static_cast<double>(n));
        Mat x(1, static_cast<long>(n));
        if (sd < 1e-12) {
            for (size_t i = 0; i < n; ++i) x(0, static_cast<long>(i)) = static_cast<T>(patch.pixels[i] - mu);
        } else {
            for (size_t i = 0; i < n; ++i)
                x(0, static_cast<long>(i)) = static_cast<T>((patch.pixels[i] - mu) / sd);
        }
        return x;
    }

    Vec forward(const Mat& x, Tape& tape) const {
        tape.x = x;
        Mat a1 = conv1_.forward(x, shape_.input_side, shape_.input_side, &tape.col1);
        tape.y1 = nn::tanh_forward(a1);
        tape.x2 = shape_.pool ? nn::maxpool2_forward(tape.y1, h1_, h1_, &tape.argmax) : tape.y1;
        Mat a2 = conv2_.forward(tape.x2, hp_, hp_, &tape.col2);
        tape.y2 = nn::tanh_forward(a2);
        tape.flat.resize(fc_.weight.cols());
        const long hw = static_cast<long>(h2_) * h2_;
        for (long ch = 0; ch < tape.y2.rows(); ++ch)
            for (long p = 0; p < hw; ++p) tape.flat(ch * hw + p) = tape.y2(ch, p);
        Vec f = fc_.forward(tape.flat);
        tape.out = f.array().tanh().matrix();
        return tape.out;
    }

    Vec describe(const Patch& patch) const {
        Tape tape;
        return forward(normalize(patch), tape);
    }

    /// Backprop d(loss)/d(descriptor) through the net, accumulating weight grads.
    void backward(const Vec& dout, const Tape& tape, Grads& g) const {
        Vec df = (dout.array() * (T(1) - tape.out.array().square())).matrix();
        Vec dflat = fc_.backward(df, tape.flat, &g.dwfc, &g.dbfc);
        Mat dy2(tape.y2.rows(), tape.y2.cols());
        const long hw = static_cast<long>(h2_) * h2_;
        for (long ch = 0; ch < dy2.rows(); ++ch)
            for (long p = 0; p < hw; ++p) dy2(ch, p) = dflat(ch * hw + p);
        Mat da2 = nn::tanh_backward(dy2, tape.y2);
        Mat dx2 = conv2_.backward(da2, tape.col2, hp_, hp_, &g.dw2, &g.db2);
        Mat dy1 = shape_.pool
                      ? nn::maxpool2_backward(dx2, tape.argmax, shape_.conv1_channels, h1_, h1_)
                      : dx2;
        Mat da1 = nn::tanh_backward(dy1, tape.y1);
        conv1_.backward(da1, tape.col1, shape_.input_side, shape_.input_side, &g.dw1, &g.db1);
    }

    Grads zero_grads() const {
        Grads g;
        g.dw1 = Mat::Zero(conv1_.weight.rows(), conv1_.weight.cols());
        g.db1 = Vec::Zero(conv1_.bias.size());
        g.dw2 = Mat::Zero(conv2_.weight.rows(), conv2_.weight.cols());
        g.db2 = Vec::Zero(conv2_.bias.size());
        g.dwfc = Mat::Zero(fc_.weight.rows(), fc_.weight.cols());
        g.dbfc = Vec::Zero(fc_.bias.size());
        return g;
    }

    void apply_update(const Grads& g, T step) {
        conv1_.weight -= step * g.dw1;
        conv1_.bias -= step * g.db1;
        conv2_.weight -= step * g.dw2;
        conv2_.bias -= step * g.db2;
        fc_.weight -= step * g.dwfc;
        fc_.bias -= step * g.dbfc;
    }

    nn::Conv2D<T>& conv1() { return conv1_; }
    nn::Conv2D<T>& conv2() { return conv2_; }
    nn::Linear<T>& fc() { return fc_; }
    const nn::Conv2D<T>& conv1() const { return conv1_; }
    const nn::Conv2D<T>& conv2() const { return conv2_; }
    const nn::Linear<T>& fc() const { return fc_; }

private:
    NetShape shape_;
    int h1_ = 0, hp_ = 0, h2_ = 0;
    nn::Conv2D<T> conv1_, conv2_;
    nn::Linear<T> fc_;
};

using DescriptorNet = BasicDescriptorNet<float>;

template <class T>
TripletDistances triplet_distances(const BasicDescriptorNet<T>& net, const Triplet& t) {
    const auto fa = net.describe(t.a);
    const auto fp = net.describe(t.p);
    const auto fn = net.describe(t.n);
    TripletDistances d;
    d.delta_plus = static_cast<double>((fa - fp).norm());
    d.delta_minus = static_cast<double>((fa - fn).norm());
    return d;
}

/// Triplet loss value with weight-gradient accumulation (shared by the
/// training loop and the finite-difference checks).
template <class T>
double triplet_loss_backward(const BasicDescriptorNet<T>& net, const Triplet& t, LossKind kind,
                             double mu, typename BasicDescriptorNet<T>::Grads& grads) {
    using Vec = typename BasicDescriptorNet<T>::Vec;
    typename BasicDescriptorNet<T>::Tape ta, tp, tn;
    const Vec fa = net.forward(net.normalize(t.a), ta);
    const Vec fp = net.forward(net.normalize(t.p), tp);
    const Vec fn = net.forward(net.normalize(t.n), tn);

    const Vec dap = fa - fp;
    const Vec dan = fa - fn;
    const double delta_plus = static_cast<double>(dap.norm());
    const double delta_minus = static_cast<double>(dan.norm());

    double loss, dl_dplus, dl_dminus;
    if (kind == LossKind::Margin) {
        const double v = mu + delta_plus - delta_minus;
        loss = std::max(0.0, v);
        dl_dplus = v > 0 ? 1.0 : 0.0;
        dl_dminus = v > 0 ? -1.0 : 0.0;
    } else {
        const double m = std::max(delta_plus, delta_minus);
        const double ep = std::exp(delta_plus - m);
        const double en = std::exp(delta_minus - m);
        const double sp = ep / (ep + en);
        loss = 2.0 * sp * sp;
        const double d = 4.0 * sp * sp * (1.0 - sp);
        dl_dplus = d;
        dl_dminus = -d;
    }

    constexpr double kEps = 1e-12;
    const Vec gplus = dap * static_cast<T>(dl_dplus / std::max(delta_plus, kEps));
    const Vec gminus = dan * static_cast<T>(dl_dminus / std::max(delta_minus, kEps));

    net.backward(gplus + gminus, ta, grads);
    net.backward(-gplus, tp, grads);
    net.backward(-gminus, tn, grads);
    return loss;
}

struct TrainHistory {
    std::vector<double> epoch_mean_loss;
};

template <class T>
TrainHistory train(BasicDescriptorNet<T>& net, const std::vector<Triplet>& triplets,
                   const TrainConfig& cfg) {
    if (triplets.empty()) throw InsufficientDataError("train: empty triplet dataset");
    if (cfg.learning_rate < 0) throw ConfigError("train: learning_rate must be non-negative");

    Rng rng(cfg.seed);
    std::vector<size_t> order(triplets.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainHistory history;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Seeded Fisher-Yates shuffle per epoch.
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        size_t pos = 0;
        while (pos < order.size()) {
            const size_t batch_end = std::min(pos + static_cast<size_t>(cfg.batch_size), order.size());
            auto grads = net.zero_grads();
            double batch_loss = 0.0;
            for (size_t i = pos; i < batch_end; ++i)
                batch_loss += triplet_loss_backward(net, triplets[order[i]], cfg.loss, cfg.mu, grads);
            const size_t bsz = batch_end - pos;
            net.apply_update(grads, static_cast<T>(cfg.learning_rate / static_cast<double>(bsz)));
            epoch_loss += batch_loss;
            pos = batch_end;
        }
        epoch_loss /= static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss))
            throw TrainingDivergedError("train: non-finite loss at epoch " + std::to_string(epoch),
                                        epoch);
        history.epoch_mean_loss.push_back(epoch_loss);
    }
    return history;
}

template <class T>
EvalMetrics evaluate_descriptor(const BasicDescriptorNet<T>& net,
                                const std::vector<PairSample>& pairs) {
    std::vector<double> pos, neg;
    for (const auto& s : pairs) {
        const auto fa = net.describe(s.a);
        const auto fb = net.describe(s.b);
        const double d = static_cast<double>((fa - fb).norm());
        (s.same ? pos : neg).push_back(d);
    }
    if (pos.empty()) throw InsufficientDataError("evaluate_descriptor: no positive pairs");
    EvalMetrics m;
    m.fpr95 = fpr_at_95(pos, neg);
    double sp = 0, sn = 0;
    for (double d : pos) sp += d;
    for (double d : neg) sn += d;
    m.mean_delta_plus = sp / static_cast<double>(pos.size());
    m.mean_delta_minus = neg.empty() ? 0.0 : sn / static_cast<double>(neg.size());
    return m;
}

// Weight persistence (TFW1 container), float32 on disk.
void save_weights(const DescriptorNet& net, const std::string& path);
DescriptorNet load_weights(const std::string& path);

} // namespace sonarmatch::descriptor
