#pragma once

#include <vector>

#include "sonarmatch/image.hpp"

namespace sonarmatch::quality {

/// The four generated-image quality indexes.
struct QualityIndexes {
    double psnr = 0.0;    // decibels
    double ssim = 0.0;    // [-1, 1]
    double cosin = 0.0;   // [-1, 1]
    double entropy = 0.0; // bits
};

struct StyleScore {
    int per_index_points[4] = {0, 0, 0, 0}; // PSNR, SSIM, COSIN, entropy
    int total = 0;
    bool tie = false;
};

/// PSNR cap returned for identical images (zero MSE).
inline constexpr double kPsnrCapDb = 100.0;

double psnr(const Image& reference, const Image& test);

/// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), C1=0.01^2, C2=0.03^2.
/// RGB inputs are converted to grayscale first.
double ssim(const Image& reference, const Image& test);

double cosine_similarity(const Image& reference, const Image& test);

/// Shannon entropy (bits) of the intensity histogram.
double entropy(const Image& img, int bins = 256);

QualityIndexes evaluate(const Image& reference, const Image& test);

/// Per-index 10-point scoring: for each index the strictly-highest style
/// gets 10 points; exact ties award 10 to every tied style and set the flag.
std::vector<StyleScore> score_styles(const std::vector<QualityIndexes>& indexes_per_style);

} // namespace sonarmatch::quality
