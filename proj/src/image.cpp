#include "sonarmatch/image.hpp"

#include <algorithm>
#include <cmath>

namespace sonarmatch {

namespace {

// NTSC RGB -> YIQ matrix, row-major.
constexpr double kRgbToYiq[9] = {
    0.299,  0.587,  0.114,
    0.596, -0.274, -0.322,
    0.211, -0.523,  0.312,
};

// Exact inverse of kRgbToYiq, computed once.
struct YiqInverse {
    double m[9];
    YiqInverse() {
        const double* a = kRgbToYiq;
        double det = a[0] * (a[4] * a[8] - a[5] * a[7]) -
                     a[1] * (a[3] * a[8] - a[5] * a[6]) +
                     a[2] * (a[3] * a[7] - a[4] * a[6]);
        m[0] = (a[4] * a[8] - a[5] * a[7]) / det;
        m[1] = (a[2] * a[7] - a[1] * a[8]) / det;
        m[2] = (a[1] * a[5] - a[2] * a[4]) / det;
        m[3] = (a[5] * a[6] - a[3] * a[8]) / det;
        m[4] = (a[0] * a[8] - a[2] * a[6]) / det;
        m[5] = (a[2] * a[3] - a[0] * a[5]) / det;
        m[6] = (a[3] * a[7] - a[4] * a[6]) / det;
        m[7] = (a[1] * a[6] - a[0] * a[7]) / det;
        m[8] = (a[0] * a[4] - a[1] * a[3]) / det;
    }
};

const YiqInverse kYiqToRgb;

} // namespace

Image::Image(int h, int w, int c, Colorspace cs, double fill)
    : height(h), width(w), channels(c), colorspace(cs),
      pixels(static_cast<size_t>(h) * w * c, fill) {
    if (h < 1 || w < 1 || c < 1)
        throw DimensionMismatchError("Image dimensions must be positive");
}

Image rgb_to_yiq(const Image& img) {
    if (img.colorspace != Colorspace::RGB)
        throw InvalidColorspaceError("rgb_to_yiq: input must be RGB");
    Image out(img.height, img.width, 3, Colorspace::YIQ);
    const size_t n = static_cast<size_t>(img.height) * img.width;
    for (size_t p = 0; p < n; ++p) {
        const double r = img.pixels[p * 3 + 0];
        const double g = img.pixels[p * 3 + 1];
        const double b = img.pixels[p * 3 + 2];
        for (int row = 0; row < 3; ++row) {
            out.pixels[p * 3 + row] =
                kRgbToYiq[row * 3 + 0] * r + kRgbToYiq[row * 3 + 1] * g + kRgbToYiq[row * 3 + 2] * b;
        }
    }
    return out;
}

Image yiq_to_rgb(const Image& img) {
    if (img.colorspace != Colorspace::YIQ)
        throw InvalidColorspaceError("yiq_to_rgb: input must be YIQ");
    Image out(img.height, img.width, 3, Colorspace::RGB);
    const size_t n = static_cast<size_t>(img.height) * img.width;
    for (size_t p = 0; p < n; ++p) {
        const double y = img.pixels[p * 3 + 0];
        const double i = img.pixels[p * 3 + 1];
        const double q = img.pixels[p * 3 + 2];
        for (int row = 0; row < 3; ++row) {
            double v = kYiqToRgb.m[row * 3 + 0] * y + kYiqToRgb.m[row * 3 + 1] * i +
                       kYiqToRgb.m[row * 3 + 2] * q;
            out.pixels[p * 3 + row] = std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

Image to_gray(const Image& img) {
    if (img.colorspace == Colorspace::GRAY) return img;
    if (img.colorspace != Colorspace::RGB)
        throw InvalidColorspaceError("to_gray: YIQ input must be converted explicitly");
    Image out(img.height, img.width, 1, Colorspace::GRAY);
    const size_t n = static_cast<size_t>(img.height) * img.width;
    for (size_t p = 0; p < n; ++p) {
        out.pixels[p] = kRgbToYiq[0] * img.pixels[p * 3 + 0] +
                        kRgbToYiq[1] * img.pixels[p * 3 + 1] +
                        kRgbToYiq[2] * img.pixels[p * 3 + 2];
    }
    return out;
}

Image gray_to_rgb(const Image& img) {
    if (img.colorspace != Colorspace::GRAY)
        throw InvalidColorspaceError("gray_to_rgb: input must be GRAY");
    Image out(img.height, img.width, 3, Colorspace::RGB);
    const size_t n = static_cast<size_t>(img.height) * img.width;
    for (size_t p = 0; p < n; ++p)
        for (int c = 0; c < 3; ++c) out.pixels[p * 3 + c] = img.pixels[p];
    return out;
}

Histogram histogram(const Image& img, int bins) {
    if (img.colorspace != Colorspace::GRAY)
        throw InvalidColorspaceError("histogram: input must be GRAY");
    Histogram h;
    h.bins = bins;
    h.counts.assign(bins, 0);
    for (double v : img.pixels) {
        int b = static_cast<int>(std::floor(v * bins));
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[b];
    }
    h.total = img.pixels.size();
    return h;
}

double bilinear_sample(const Image& img, double x, double y, int channel) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double v00 = img.at(y0, x0, channel);
    const double v01 = img.at(y0, x1, channel);
    const double v10 = img.at(y1, x0, channel);
    const double v11 = img.at(y1, x1, channel);
    return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
}

namespace {

// Image-space sample location for patch coordinate (u, v).
inline void patch_sample_point(const Keypoint& kp, double u, double v, double& sx, double& sy) {
    const double c = std::cos(kp.orientation);
    const double s = std::sin(kp.orientation);
    sx = kp.x + kp.scale * (c * u - s * v);
    sy = kp.y + kp.scale * (s * u + c * v);
}

} // namespace

bool patch_in_bounds(const Image& img, const Keypoint& kp, int side) {
    const double half = (side - 1) / 2.0;
    // Corners bound the rotated square support.
    for (double u : {-half, half}) {
        for (double v : {-half, half}) {
            double sx, sy;
            patch_sample_point(kp, u, v, sx, sy);
            if (sx < 0.0 || sy < 0.0 || sx > img.width - 1.0 || sy > img.height - 1.0) return false;
        }
    }
    return true;
}

Patch extract_patch(const Image& img, const Keypoint& kp, int side) {
    if (img.colorspace != Colorspace::GRAY)
        throw InvalidColorspaceError("extract_patch: input must be GRAY");
    if (!patch_in_bounds(img, kp, side))
        throw OutOfBoundsError("extract_patch: support region outside image");
    Patch p(side);
    const double half = (side - 1) / 2.0;
    for (int py = 0; py < side; ++py) {
        for (int px = 0; px < side; ++px) {
            double sx, sy;
            patch_sample_point(kp, px - half, py - half, sx, sy);
            p.at(py, px) = bilinear_sample(img, sx, sy);
        }
    }
    return p;
}

Image gaussian_blur(const Image& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;

    Image tmp = img, out = img;
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += k[i + radius] * img.at(y, std::clamp(x + i, 0, img.width - 1), c);
                tmp.at(y, x, c) = acc;
            }
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += k[i + radius] * tmp.at(std::clamp(y + i, 0, img.height - 1), x, c);
                out.at(y, x, c) = acc;
            }
    }
    return out;
}

} // namespace sonarmatch
