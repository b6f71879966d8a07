#pragma once

#include <map>
#include <string>
#include <vector>

#include "sonarmatch/features.hpp"
#include "sonarmatch/image.hpp"

namespace sonarmatch::transfer {

using MatD = features::MatD;

/// Activations of the content image at the configured content layers.
struct ContentTarget {
    std::map<std::string, MatD> activations;
};

/// Gram matrices of the style image plus per-layer weights (sum 1 by default).
struct StyleTarget {
    std::map<std::string, MatD> grams;
    std::map<std::string, double> weights;
    std::map<std::string, std::pair<long, long>> shape; // layer -> (N_l, M_l)
};

enum class Mode { Full, LuminanceOnly };

struct TransferConfig {
    double alpha = 1.0;
    double beta = 1e3;
    std::vector<std::string> content_layers = {"conv2"};
    std::vector<std::string> style_layers = {"conv1", "conv2"};
    int num_iterations = 300;
    double step_size = 1.0;
    Mode mode = Mode::Full;
    bool color_prematch = false;
    uint64_t seed = 0;
    /// Statistic-matching direction for luminance mode: style stats are mapped
    /// onto the content's by default.
    bool match_style_to_content = true;
};

struct LossTracePoint {
    int iteration = 0;
    double content = 0.0;
    double style = 0.0;
    double total = 0.0;
};

struct TransferResult {
    Image image;
    std::vector<LossTracePoint> trace;
};

double content_loss(const features::LayerActivations& f, const ContentTarget& p);

/// E_l = 1/(4 N^2 M^2) sum (G - A)^2.
double style_layer_loss(const MatD& g, const MatD& a, long n_filters, long m_positions);

double style_loss(const std::map<std::string, MatD>& grams, const StyleTarget& target);

double total_loss(double content, double style, double alpha, double beta);

/// Build targets from images (used by run_transfer, exposed for tests).
ContentTarget make_content_target(const features::FeatureExtractor& extractor, const Image& img,
                                  const std::vector<std::string>& layers);
StyleTarget make_style_target(const features::FeatureExtractor& extractor, const Image& img,
                              const std::vector<std::string>& layers);

/// Gradient of alpha*L_content + beta*L_style w.r.t. the pixels of x.
/// Also reports the current losses.
Image total_loss_gradient(const features::FeatureExtractor& extractor, const Image& x,
                          const ContentTarget& content_target, const StyleTarget& style_target,
                          double alpha, double beta, double* content_out = nullptr,
                          double* style_out = nullptr);

/// Map the style luminance onto target mean/std: L' = (sigma_C/sigma_S)(L - mu_S) + mu_C.
/// Uses population statistics; no clamping.
Image luminance_match(const Image& style_lum, double mu_c, double sigma_c);

/// Linear color transform P' = A p + b with A = chol(Sigma_C) chol(Sigma_S)^-1,
/// matching the style's RGB mean/covariance to the content's.
Image color_match(const Image& style, const Image& content);

TransferResult run_transfer(const Image& content, const Image& style,
                            const features::FeatureExtractor& extractor,
                            const TransferConfig& cfg);

} // namespace sonarmatch::transfer
