#pragma once

#include <cstdint>
#include <vector>

#include "sonarmatch/errors.hpp"

namespace sonarmatch {

enum class Colorspace { RGB, GRAY, YIQ };

/// Dense H x W x C image, row-major, channel-interleaved.
/// RGB/GRAY components live in [0,1]; YIQ carries the NTSC chroma ranges.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    Colorspace colorspace = Colorspace::GRAY;
    std::vector<double> pixels; // size = height * width * channels

    Image() = default;
    Image(int h, int w, int c, Colorspace cs, double fill = 0.0);

    double& at(int y, int x, int c) { return pixels[(static_cast<size_t>(y) * width + x) * channels + c]; }
    double at(int y, int x, int c) const { return pixels[(static_cast<size_t>(y) * width + x) * channels + c]; }

    size_t size() const { return pixels.size(); }
    bool same_dims(const Image& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }
};

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double scale = 1.0;
    double orientation = 0.0; // radians
    double response = 0.0;
};

/// Square grayscale patch, values in [0,1].
struct Patch {
    int side = 0;
    std::vector<double> pixels; // side * side, row-major

    Patch() = default;
    explicit Patch(int s, double fill = 0.0) : side(s), pixels(static_cast<size_t>(s) * s, fill) {}

    double& at(int y, int x) { return pixels[static_cast<size_t>(y) * side + x]; }
    double at(int y, int x) const { return pixels[static_cast<size_t>(y) * side + x]; }
};

struct Histogram {
    int bins = 256;
    std::vector<uint64_t> counts;
    uint64_t total = 0;
};

Image rgb_to_yiq(const Image& img);
Image yiq_to_rgb(const Image& img);
Image to_gray(const Image& img);

/// Replicate a GRAY image into three identical RGB channels.
Image gray_to_rgb(const Image& img);

/// Intensity histogram of a GRAY image; value v falls into bin min(bins-1, floor(v*bins)).
Histogram histogram(const Image& img, int bins = 256);

/// Bilinear sample at sub-pixel (x, y); caller guarantees in-bounds support.
double bilinear_sample(const Image& img, double x, double y, int channel = 0);

/// Canonically oriented patch around a keypoint: samples along axes rotated by
/// kp.orientation and spaced by kp.scale. Border policy is reject: any sample
/// outside the image throws OutOfBoundsError.
Patch extract_patch(const Image& img, const Keypoint& kp, int side);

/// True when the full support region of extract_patch lies inside the image.
bool patch_in_bounds(const Image& img, const Keypoint& kp, int side);

/// Separable Gaussian blur (per channel, edge-clamped); sigma <= 0 is a no-op.
Image gaussian_blur(const Image& img, double sigma);

} // namespace sonarmatch
