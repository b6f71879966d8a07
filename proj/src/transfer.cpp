#include "sonarmatch/transfer.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <iostream>

namespace sonarmatch::transfer {

double content_loss(const features::LayerActivations& f, const ContentTarget& p) {
    double loss = 0.0;
    for (const auto& [name, target] : p.activations) {
        const auto it = f.maps.find(name);
        if (it == f.maps.end())
            throw DimensionMismatchError("content_loss: missing layer '" + name + "'");
        if (it->second.rows() != target.rows() || it->second.cols() != target.cols())
            throw DimensionMismatchError("content_loss: shape mismatch at '" + name + "'");
        loss += 0.5 * (it->second - target).squaredNorm();
    }
    return loss;
}

double style_layer_loss(const MatD& g, const MatD& a, long n_filters, long m_positions) {
    if (g.rows() != a.rows() || g.cols() != a.cols())
        throw DimensionMismatchError("style_layer_loss: Gram shape mismatch");
    const double denom = 4.0 * static_cast<double>(n_filters) * n_filters *
                         static_cast<double>(m_positions) * m_positions;
    return (g - a).squaredNorm() / denom;
}

double style_loss(const std::map<std::string, MatD>& grams, const StyleTarget& target) {
    double loss = 0.0;
    for (const auto& [name, a] : target.grams) {
        const auto it = grams.find(name);
        if (it == grams.end()) throw DimensionMismatchError("style_loss: missing layer '" + name + "'");
        const auto [n, m] = target.shape.at(name);
        loss += target.weights.at(name) * style_layer_loss(it->second, a, n, m);
    }
    return loss;
}

double total_loss(double content, double style, double alpha, double beta) {
    return alpha * content + beta * style;
}

ContentTarget make_content_target(const features::FeatureExtractor& extractor, const Image& img,
                                  const std::vector<std::string>& layers) {
    ContentTarget t;
    auto acts = extractor.extract(img, layers);
    t.activations = std::move(acts.maps);
    return t;
}

StyleTarget make_style_target(const features::FeatureExtractor& extractor, const Image& img,
                              const std::vector<std::string>& layers) {
    StyleTarget t;
    auto acts = extractor.extract(img, layers);
    const double w = 1.0 / static_cast<double>(layers.size());
    for (const auto& name : layers) {
        const MatD& f = acts.maps.at(name);
        t.grams[name] = features::gram(f);
        t.weights[name] = w;
        t.shape[name] = {f.rows(), f.cols()};
    }
    return t;
}

Image total_loss_gradient(const features::FeatureExtractor& extractor, const Image& x,
                          const ContentTarget& content_target, const StyleTarget& style_target,
                          double alpha, double beta, double* content_out, double* style_out) {
    std::vector<std::string> layers;
    for (const auto& [name, m] : content_target.activations) {
        (void)m;
        layers.push_back(name);
    }
    for (const auto& [name, m] : style_target.grams) {
        (void)m;
        if (std::find(layers.begin(), layers.end(), name) == layers.end()) layers.push_back(name);
    }

    const auto acts = extractor.extract(x, layers);

    double c_loss = 0.0, s_loss = 0.0;
    std::map<std::string, MatD> layer_grads;

    for (const auto& [name, p] : content_target.activations) {
        const MatD& f = acts.maps.at(name);
        if (f.rows() != p.rows() || f.cols() != p.cols())
            throw DimensionMismatchError("total_loss_gradient: content shape mismatch at '" + name +
                                         "'");
        c_loss += 0.5 * (f - p).squaredNorm();
        MatD g = alpha * (f - p);
        auto it = layer_grads.find(name);
        if (it == layer_grads.end())
            layer_grads.emplace(name, std::move(g));
        else
            it->second += g;
    }

    for (const auto& [name, a] : style_target.grams) {
        const MatD& f = acts.maps.at(name);
        const auto [n, m] = style_target.shape.at(name);
        const MatD g = features::gram(f);
        const double w = style_target.weights.at(name);
        s_loss += w * style_layer_loss(g, a, n, m);
        // dE_l/dF = (G - A) F / (N^2 M^2); Gram symmetry folds the factor 4.
        const double denom = static_cast<double>(n) * n * static_cast<double>(m) * m;
        MatD gf = (beta * w / denom) * ((g - a) * f);
        auto it = layer_grads.find(name);
        if (it == layer_grads.end())
            layer_grads.emplace(name, std::move(gf));
        else
            it->second += gf;
    }

    if (content_out) *content_out = c_loss;
    if (style_out) *style_out = s_loss;
    return extractor.input_gradient(x, layer_grads);
}

namespace {

void mean_std(const std::vector<double>& v, double& mu, double& sigma) {
    mu = 0.0;
    for (double x : v) mu += x;
    mu /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mu) * (x - mu);
    sigma = std::sqrt(var / static_cast<double>(v.size()));
}

} // namespace

Image luminance_match(const Image& style_lum, double mu_c, double sigma_c) {
    if (style_lum.colorspace != Colorspace::GRAY)
        throw InvalidColorspaceError("luminance_match: style luminance must be GRAY");
    double mu_s, sigma_s;
    mean_std(style_lum.pixels, mu_s, sigma_s);
    if (sigma_s <= 0.0)
        throw DegenerateStyleError("luminance_match: style luminance has zero variance");
    Image out = style_lum;
    const double scale = sigma_c / sigma_s;
    for (double& v : out.pixels) v = scale * (v - mu_s) + mu_c;
    return out;
}

namespace {

void channel_stats(const Image& img, Eigen::Vector3d& mu, Eigen::Matrix3d& cov) {
    const size_t n = static_cast<size_t>(img.height) * img.width;
    mu.setZero();
    for (size_t p = 0; p < n; ++p)
        for (int c = 0; c < 3; ++c) mu(c) += img.pixels[p * 3 + c];
    mu /= static_cast<double>(n);
    cov.setZero();
    for (size_t p = 0; p < n; ++p) {
        Eigen::Vector3d d;
        for (int c = 0; c < 3; ++c) d(c) = img.pixels[p * 3 + c] - mu(c);
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(n);
}

} // namespace

Image color_match(const Image& style, const Image& content) {
    if (style.colorspace != Colorspace::RGB || content.colorspace != Colorspace::RGB)
        throw InvalidColorspaceError("color_match: both images must be RGB");

    Eigen::Vector3d mu_s, mu_c;
    Eigen::Matrix3d cov_s, cov_c;
    channel_stats(style, mu_s, cov_s);
    channel_stats(content, mu_c, cov_c);

    Eigen::LLT<Eigen::Matrix3d> llt_s(cov_s);
    Eigen::LLT<Eigen::Matrix3d> llt_c(cov_c);
    if (llt_s.info() != Eigen::Success || llt_c.info() != Eigen::Success) {
        std::cerr << "color_match: singular channel covariance, regularizing with 1e-6 I\n";
        const Eigen::Matrix3d eps = 1e-6 * Eigen::Matrix3d::Identity();
        llt_s.compute(cov_s + eps);
        llt_c.compute(cov_c + eps);
        if (llt_s.info() != Eigen::Success || llt_c.info() != Eigen::Success)
            throw DegenerateStyleError("color_match: channel covariance not positive definite");
    }

    const Eigen::Matrix3d l_s = llt_s.matrixL();
    const Eigen::Matrix3d l_c = llt_c.matrixL();
    const Eigen::Matrix3d a = l_c * l_s.inverse();
    const Eigen::Vector3d b = mu_c - a * mu_s;

    Image out = style;
    const size_t n = static_cast<size_t>(style.height) * style.width;
    for (size_t p = 0; p < n; ++p) {
        Eigen::Vector3d v;
        for (int c = 0; c < 3; ++c) v(c) = style.pixels[p * 3 + c];
        const Eigen::Vector3d w = a * v + b;
        for (int c = 0; c < 3; ++c) out.pixels[p * 3 + c] = w(c);
    }
    return out;
}

namespace {

Image adapt_channels(const Image& img, int want_channels) {
    if (img.channels == want_channels) return img;
    if (want_channels == 1) return to_gray(img);
    if (want_channels == 3 && img.colorspace == Colorspace::GRAY) return gray_to_rgb(img);
    throw InvalidColorspaceError("run_transfer: cannot adapt image to extractor channel count");
}

} // namespace

TransferResult run_transfer(const Image& content, const Image& style,
                            const features::FeatureExtractor& extractor,
                            const TransferConfig& cfg) {
    if (cfg.alpha < 0 || cfg.beta < 0 || (cfg.alpha == 0 && cfg.beta == 0))
        throw ConfigError("run_transfer: alpha/beta must be non-negative and not both zero");
    if (cfg.num_iterations < 1) throw ConfigError("run_transfer: num_iterations must be >= 1");

    Image style_img = style;
    if (cfg.color_prematch) {
        const Image style_rgb = style.colorspace == Colorspace::GRAY ? gray_to_rgb(style) : style;
        const Image content_rgb =
            content.colorspace == Colorspace::GRAY ? gray_to_rgb(content) : content;
        style_img = color_match(style_rgb, content_rgb);
    }

    Image opt_content;   // image whose pixels are optimized (init value)
    Image opt_style;     // style image in the optimized space
    Image content_yiq;   // kept for luminance-only reassembly

    if (cfg.mode == Mode::LuminanceOnly) {
        const Image content_rgb =
            content.colorspace == Colorspace::GRAY ? gray_to_rgb(content) : content;
        content_yiq = rgb_to_yiq(content_rgb);
        // Y channel of the content as a GRAY image.
        Image content_y(content.height, content.width, 1, Colorspace::GRAY);
        for (int y = 0; y < content.height; ++y)
            for (int x = 0; x < content.width; ++x) content_y.at(y, x, 0) = content_yiq.at(y, x, 0);

        Image style_lum = to_gray(style_img.colorspace == Colorspace::YIQ ? yiq_to_rgb(style_img)
                                                                          : style_img);
        if (cfg.match_style_to_content) {
            double mu_c, sigma_c;
            mean_std(content_y.pixels, mu_c, sigma_c);
            style_lum = luminance_match(style_lum, mu_c, sigma_c);
        } else {
            // Reverse direction: map the content's luminance onto the style's stats.
            double mu_s, sigma_s;
            mean_std(style_lum.pixels, mu_s, sigma_s);
            content_y = luminance_match(content_y, mu_s, sigma_s);
        }
        opt_content = adapt_channels(content_y, extractor.input_channels());
        opt_style = adapt_channels(style_lum, extractor.input_channels());
    } else {
        opt_content = adapt_channels(content, extractor.input_channels());
        opt_style = adapt_channels(style_img, extractor.input_channels());
    }

    const ContentTarget content_target =
        make_content_target(extractor, opt_content, cfg.content_layers);
    const StyleTarget style_target = make_style_target(extractor, opt_style, cfg.style_layers);

    Image x = opt_content; // content initialization preserves sonar geometry
    TransferResult result;
    double c_loss = 0.0, s_loss = 0.0;
    for (int it = 0; it < cfg.num_iterations; ++it) {
        const Image grad =
            total_loss_gradient(extractor, x, content_target, style_target, cfg.alpha, cfg.beta,
                                &c_loss, &s_loss);
        const double t_loss = total_loss(c_loss, s_loss, cfg.alpha, cfg.beta);
        if (!std::isfinite(t_loss))
            throw OptimizationDivergedError("run_transfer: non-finite loss at iteration " +
                                            std::to_string(it));
        result.trace.push_back({it, c_loss, s_loss, t_loss});
        for (size_t i = 0; i < x.pixels.size(); ++i)
            x.pixels[i] -= cfg.step_size * grad.pixels[i];
    }
    {
        // Final loss after the last update.
        std::vector<std::string> all_layers = cfg.content_layers;
        for (const auto& l : cfg.style_layers)
            if (std::find(all_layers.begin(), all_layers.end(), l) == all_layers.end())
                all_layers.push_back(l);
        const auto acts = extractor.extract(x, all_layers);
        std::map<std::string, MatD> grams;
        for (const auto& l : cfg.style_layers) grams[l] = features::gram(acts.maps.at(l));
        ContentTarget ct_view;
        ct_view.activations = content_target.activations;
        c_loss = content_loss(acts, ct_view);
        s_loss = style_loss(grams, style_target);
        const double t_loss = total_loss(c_loss, s_loss, cfg.alpha, cfg.beta);
        if (!std::isfinite(t_loss))
            throw OptimizationDivergedError("run_transfer: non-finite final loss");
        result.trace.push_back({cfg.num_iterations, c_loss, s_loss, t_loss});
    }

    if (cfg.mode == Mode::LuminanceOnly) {
        // Reassemble: optimized (clamped) Y with the content's I/Q, kept bit-exact.
        const Image y_gray = to_gray(x);
        Image out = content_yiq;
        for (int yy = 0; yy < out.height; ++yy)
            for (int xx = 0; xx < out.width; ++xx)
                out.at(yy, xx, 0) = std::clamp(y_gray.at(yy, xx, 0), 0.0, 1.0);
        result.image = std::move(out);
    } else {
        for (double& v : x.pixels) v = std::clamp(v, 0.0, 1.0);
        result.image = std::move(x);
    }
    return result;
}

} // namespace sonarmatch::transfer
