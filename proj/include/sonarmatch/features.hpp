#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sonarmatch/image.hpp"
#include "sonarmatch/nn.hpp"

namespace sonarmatch::features {

using MatD = nn::Mat<double>;

/// Per-layer feature matrices, N_l filters x M_l spatial positions
/// (positions flattened row-major).
struct LayerActivations {
    std::map<std::string, MatD> maps;
    std::map<std::string, std::pair<int, int>> spatial; // layer -> (H, W)
};

/// Gram matrix G = F * F^T of a layer's activations; symmetric PSD.
MatD gram(const MatD& f);

/// Deep feature extractor with named layers. Forward is deterministic for
/// fixed weights; input_gradient is the exact adjoint of forward.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;

    virtual std::vector<std::string> layer_names() const = 0;
    virtual int input_channels() const = 0;

    virtual LayerActivations extract(const Image& img,
                                     const std::vector<std::string>& layers) const = 0;

    /// Gradient w.r.t. input pixels of sum_l <layer_grads[l], F^l>.
    virtual Image input_gradient(const Image& img,
                                 const std::map<std::string, MatD>& layer_grads) const = 0;
};

enum class Activation { Tanh, ReLU };
enum class Pool { None, Avg2, Max2 };

struct ConvLayerSpec {
    std::string name;
    int out_channels = 0;
    int kernel = 3; // same padding (kernel/2)
    Activation activation = Activation::ReLU;
    Pool pool_after = Pool::None;
};

/// Plain convolutional stack: per layer conv (same padding) + nonlinearity,
/// exposed under the layer name, optionally followed by a 2x2 pool.
class ConvNetExtractor : public FeatureExtractor {
public:
    ConvNetExtractor(int in_channels, std::vector<ConvLayerSpec> specs, uint64_t seed);

    std::vector<std::string> layer_names() const override;
    int input_channels() const override { return in_channels_; }

    LayerActivations extract(const Image& img,
                             const std::vector<std::string>& layers) const override;
    Image input_gradient(const Image& img,
                         const std::map<std::string, MatD>& layer_grads) const override;

    void save_weights(const std::string& path) const;
    void load_weights(const std::string& path);

    /// Two-layer tanh/avg-pool net with seeded random weights; the offline
    /// stand-in used by the test and tiny-profile configurations.
    static ConvNetExtractor tiny(int in_channels, uint64_t seed);

    /// VGG-19 convolutional stack (conv1_1 .. conv5_4); pretrained weights
    /// must be supplied through load_weights from a local file.
    static std::vector<ConvLayerSpec> vgg19_specs();

private:
    struct Tape; // per-call forward intermediates

    void forward(const Image& img, Tape& tape) const;

    int in_channels_;
    std::vector<ConvLayerSpec> specs_;
    std::vector<nn::Conv2D<double>> convs_;
};

/// Image <-> activation-layout helpers (channels x H*W).
MatD image_to_mat(const Image& img);
Image mat_to_image(const MatD& m, int h, int w, Colorspace cs);

} // namespace sonarmatch::features
