#include "sonarmatch/features.hpp"

#include <algorithm>

namespace sonarmatch::features {

MatD gram(const MatD& f) {
    if (f.rows() < 1 || f.cols() < 1)
        throw DimensionMismatchError("gram: empty feature matrix");
    return f * f.transpose();
}

MatD image_to_mat(const Image& img) {
    MatD m(img.channels, static_cast<long>(img.height) * img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                m(c, static_cast<long>(y) * img.width + x) = img.at(y, x, c);
    return m;
}

Image mat_to_image(const MatD& m, int h, int w, Colorspace cs) {
    Image img(h, w, static_cast<int>(m.rows()), cs);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < img.channels; ++c)
                img.at(y, x, c) = m(c, static_cast<long>(y) * w + x);
    return img;
}

struct ConvNetExtractor::Tape {
    // Per layer: im2col cache, post-activation output, input dims, output dims,
    // and pooling argmax (max pool only).
    std::vector<MatD> cols;
    std::vector<MatD> activations;
    std::vector<std::pair<int, int>> in_dims;
    std::vector<std::pair<int, int>> act_dims;
    std::vector<std::vector<long>> pool_argmax;
    MatD input;
    int input_h = 0, input_w = 0;
};

ConvNetExtractor::ConvNetExtractor(int in_channels, std::vector<ConvLayerSpec> specs, uint64_t seed)
    : in_channels_(in_channels), specs_(std::move(specs)) {
    Rng rng(seed);
    int ch = in_channels_;
    for (const auto& s : specs_) {
        nn::Conv2D<double> conv(ch, s.out_channels, s.kernel, s.kernel / 2);
        conv.init_random(rng);
        convs_.push_back(std::move(conv));
        ch = s.out_channels;
    }
}

std::vector<std::string> ConvNetExtractor::layer_names() const {
    std::vector<std::string> names;
    names.reserve(specs_.size());
    for (const auto& s : specs_) names.push_back(s.name);
    return names;
}

void ConvNetExtractor::forward(const Image& img, Tape& tape) const {
    if (img.channels != in_channels_)
        throw DimensionMismatchError("extractor: input channel count mismatch");
    tape.input = image_to_mat(img);
    tape.input_h = img.height;
    tape.input_w = img.width;

    MatD x = tape.input;
    int h = img.height, w = img.width;
    for (size_t i = 0; i < specs_.size(); ++i) {
        const auto& s = specs_[i];
        tape.in_dims.emplace_back(h, w);
        MatD col;
        MatD a = convs_[i].forward(x, h, w, &col);
        tape.cols.push_back(std::move(col));
        h = nn::conv_out_dim(h, s.kernel, s.kernel / 2);
        w = nn::conv_out_dim(w, s.kernel, s.kernel / 2);
        MatD y = s.activation == Activation::Tanh ? nn::tanh_forward(a) : nn::relu_forward(a);
        tape.act_dims.emplace_back(h, w);
        tape.activations.push_back(y);
        tape.pool_argmax.emplace_back();
        switch (s.pool_after) {
            case Pool::None:
                x = std::move(y);
                break;
            case Pool::Avg2:
                x = nn::avgpool2_forward(y, h, w);
                h /= 2;
                w /= 2;
                break;
            case Pool::Max2:
                x = nn::maxpool2_forward(y, h, w, &tape.pool_argmax.back());
                h /= 2;
                w /= 2;
                break;
        }
    }
}

LayerActivations ConvNetExtractor::extract(const Image& img,
                                           const std::vector<std::string>& layers) const {
    Tape tape;
    forward(img, tape);
    LayerActivations out;
    for (const auto& name : layers) {
        auto it = std::find_if(specs_.begin(), specs_.end(),
                               [&](const ConvLayerSpec& s) { return s.name == name; });
        if (it == specs_.end()) throw Error("extractor: unknown layer name '" + name + "'");
        const size_t idx = static_cast<size_t>(it - specs_.begin());
        out.maps[name] = tape.activations[idx];
        out.spatial[name] = tape.act_dims[idx];
    }
    return out;
}

Image ConvNetExtractor::input_gradient(const Image& img,
                                       const std::map<std::string, MatD>& layer_grads) const {
    for (const auto& [name, g] : layer_grads) {
        (void)g;
        auto it = std::find_if(specs_.begin(), specs_.end(),
                               [&](const ConvLayerSpec& s) { return s.name == name; });
        if (it == specs_.end()) throw Error("extractor: unknown layer name '" + name + "'");
    }

    Tape tape;
    forward(img, tape);

    const size_t n = specs_.size();
    // Gradient w.r.t. the input of the layer following i (post-pool output of i).
    MatD gx; // empty until first contribution
    for (size_t ri = 0; ri < n; ++ri) {
        const size_t i = n - 1 - ri;
        const auto& s = specs_[i];
        const auto [ah, aw] = tape.act_dims[i];

        MatD gy = MatD::Zero(tape.activations[i].rows(), tape.activations[i].cols());
        if (gx.size() > 0) {
            switch (s.pool_after) {
                case Pool::None:
                    gy = gx;
                    break;
                case Pool::Avg2:
                    gy = nn::avgpool2_backward(gx, static_cast<int>(gy.rows()), ah, aw);
                    break;
                case Pool::Max2:
                    gy = nn::maxpool2_backward(gx, tape.pool_argmax[i], static_cast<int>(gy.rows()),
                                               ah, aw);
                    break;
            }
        }
        auto it = layer_grads.find(s.name);
        if (it != layer_grads.end()) {
            if (it->second.rows() != gy.rows() || it->second.cols() != gy.cols())
                throw DimensionMismatchError("extractor: layer gradient shape mismatch at '" +
                                             s.name + "'");
            gy += it->second;
        }
        MatD ga = s.activation == Activation::Tanh
                      ? nn::tanh_backward(gy, tape.activations[i])
                      : nn::relu_backward(gy, tape.activations[i]);
        const auto [ih, iw] = tape.in_dims[i];
        gx = convs_[i].backward(ga, tape.cols[i], ih, iw, nullptr, nullptr);
    }
    return mat_to_image(gx, tape.input_h, tape.input_w, img.colorspace);
}

void ConvNetExtractor::save_weights(const std::string& path) const {
    std::vector<nn::NamedTensor> tensors;
    for (size_t i = 0; i < specs_.size(); ++i) {
        const auto& c = convs_[i];
        nn::NamedTensor w;
        w.name = specs_[i].name + ".weight";
        w.dims = {static_cast<uint32_t>(c.out_ch), static_cast<uint32_t>(c.in_ch),
                  static_cast<uint32_t>(c.k), static_cast<uint32_t>(c.k)};
        w.data.resize(c.weight.size());
        for (long r = 0; r < c.weight.rows(); ++r)
            for (long col = 0; col < c.weight.cols(); ++col)
                w.data[static_cast<size_t>(r) * c.weight.cols() + col] =
                    static_cast<float>(c.weight(r, col));
        tensors.push_back(std::move(w));

        nn::NamedTensor b;
        b.name = specs_[i].name + ".bias";
        b.dims = {static_cast<uint32_t>(c.out_ch)};
        b.data.resize(c.bias.size());
        for (long r = 0; r < c.bias.size(); ++r) b.data[r] = static_cast<float>(c.bias(r));
        tensors.push_back(std::move(b));
    }
    nn::save_tensors(path, tensors);
}

void ConvNetExtractor::load_weights(const std::string& path) {
    const auto tensors = nn::load_tensors(path);
    std::map<std::string, const nn::NamedTensor*> by_name;
    for (const auto& t : tensors) by_name[t.name] = &t;

    for (size_t i = 0; i < specs_.size(); ++i) {
        auto& c = convs_[i];
        const auto wit = by_name.find(specs_[i].name + ".weight");
        const auto bit = by_name.find(specs_[i].name + ".bias");
        if (wit == by_name.end() || bit == by_name.end())
            throw TensorShapeError("extractor weights: missing tensors for layer " + specs_[i].name);
        const auto& w = *wit->second;
        if (w.dims.size() != 4 || static_cast<int>(w.dims[0]) != c.out_ch ||
            static_cast<int>(w.dims[1]) != c.in_ch || static_cast<int>(w.dims[2]) != c.k ||
            static_cast<int>(w.dims[3]) != c.k)
            throw TensorShapeError("extractor weights: shape mismatch for " + w.name);
        for (long r = 0; r < c.weight.rows(); ++r)
            for (long col = 0; col < c.weight.cols(); ++col)
                c.weight(r, col) = w.data[static_cast<size_t>(r) * c.weight.cols() + col];
        const auto& b = *bit->second;
        if (b.dims.size() != 1 || static_cast<int>(b.dims[0]) != c.out_ch)
            throw TensorShapeError("extractor weights: shape mismatch for " + b.name);
        for (long r = 0; r < c.bias.size(); ++r) c.bias(r) = b.data[r];
    }
}

ConvNetExtractor ConvNetExtractor::tiny(int in_channels, uint64_t seed) {
    std::vector<ConvLayerSpec> specs = {
        {"conv1", 8, 3, Activation::Tanh, Pool::Avg2},
        {"conv2", 12, 3, Activation::Tanh, Pool::None},
    };
    return ConvNetExtractor(in_channels, std::move(specs), seed);
}

std::vector<ConvLayerSpec> ConvNetExtractor::vgg19_specs() {
    std::vector<ConvLayerSpec> specs;
    const int block_convs[5] = {2, 2, 4, 4, 4};
    const int block_channels[5] = {64, 128, 256, 512, 512};
    for (int b = 0; b < 5; ++b) {
        for (int c = 0; c < block_convs[b]; ++c) {
            ConvLayerSpec s;
            s.name = "conv" + std::to_string(b + 1) + "_" + std::to_string(c + 1);
            s.out_channels = block_channels[b];
            s.kernel = 3;
            s.activation = Activation::ReLU;
            s.pool_after = (c == block_convs[b] - 1) ? Pool::Max2 : Pool::None;
            specs.push_back(std::move(s));
        }
    }
    return specs;
}

} // namespace sonarmatch::features
