#include "sonarmatch/quality.hpp"

#include <algorithm>
#include <cmath>

namespace sonarmatch::quality {

double psnr(const Image& reference, const Image& test) {
    if (!reference.same_dims(test))
        throw DimensionMismatchError("psnr: image dimensions differ");
    double mse = 0.0;
    for (size_t i = 0; i < reference.size(); ++i) {
        const double d = reference.pixels[i] - test.pixels[i];
        mse += d * d;
    }
    mse /= static_cast<double>(reference.size());
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

namespace {

std::vector<double> gaussian_window_11(double sigma) {
    std::vector<double> w(11 * 11);
    double sum = 0.0;
    for (int y = 0; y < 11; ++y) {
        for (int x = 0; x < 11; ++x) {
            const double dy = y - 5.0, dx = x - 5.0;
            w[y * 11 + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            sum += w[y * 11 + x];
        }
    }
    for (double& v : w) v /= sum;
    return w;
}

} // namespace

double ssim(const Image& reference, const Image& test) {
    if (reference.height != test.height || reference.width != test.width)
        throw DimensionMismatchError("ssim: image dimensions differ");
    const Image a = to_gray(reference);
    const Image b = to_gray(test);
    if (a.height < 11 || a.width < 11)
        throw DimensionMismatchError("ssim: image smaller than 11x11 window");

    static const std::vector<double> win = gaussian_window_11(1.5);
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;

    double acc = 0.0;
    size_t count = 0;
    for (int y = 0; y + 11 <= a.height; ++y) {
        for (int x = 0; x + 11 <= a.width; ++x) {
            double mu_a = 0, mu_b = 0;
            for (int wy = 0; wy < 11; ++wy)
                for (int wx = 0; wx < 11; ++wx) {
                    const double wgt = win[wy * 11 + wx];
                    mu_a += wgt * a.at(y + wy, x + wx, 0);
                    mu_b += wgt * b.at(y + wy, x + wx, 0);
                }
            double var_a = 0, var_b = 0, cov = 0;
            for (int wy = 0; wy < 11; ++wy)
                for (int wx = 0; wx < 11; ++wx) {
                    const double wgt = win[wy * 11 + wx];
                    const double da = a.at(y + wy, x + wx, 0) - mu_a;
                    const double db = b.at(y + wy, x + wx, 0) - mu_b;
                    var_a += wgt * da * da;
                    var_b += wgt * db * db;
                    cov += wgt * da * db;
                }
            const double num = (2 * mu_a * mu_b + c1) * (2 * cov + c2);
            const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            acc += num / den;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

double cosine_similarity(const Image& reference, const Image& test) {
    if (!reference.same_dims(test))
        throw DimensionMismatchError("cosine_similarity: image dimensions differ");
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < reference.size(); ++i) {
        dot += reference.pixels[i] * test.pixels[i];
        na += reference.pixels[i] * reference.pixels[i];
        nb += test.pixels[i] * test.pixels[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double entropy(const Image& img, int bins) {
    const Histogram h = histogram(img, bins);
    double e = 0.0;
    for (uint64_t c : h.counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(h.total);
        e -= p * std::log2(p);
    }
    return e;
}

QualityIndexes evaluate(const Image& reference, const Image& test) {
    QualityIndexes q;
    q.psnr = psnr(reference, test);
    q.ssim = ssim(reference, test);
    q.cosin = cosine_similarity(reference, test);
    q.entropy = entropy(to_gray(test));
    return q;
}

std::vector<StyleScore> score_styles(const std::vector<QualityIndexes>& indexes_per_style) {
    const size_t n = indexes_per_style.size();
    if (n < 2) throw InsufficientDataError("score_styles: need at least two styles");

    auto value = [](const QualityIndexes& q, int idx) {
        switch (idx) {
            case 0: return q.psnr;
            case 1: return q.ssim;
            case 2: return q.cosin;
            default: return q.entropy;
        }
    };

    std::vector<StyleScore> scores(n);
    for (int idx = 0; idx < 4; ++idx) {
        double best = value(indexes_per_style[0], idx);
        for (size_t s = 1; s < n; ++s) best = std::max(best, value(indexes_per_style[s], idx));
        size_t winners = 0;
        for (size_t s = 0; s < n; ++s)
            if (value(indexes_per_style[s], idx) == best) ++winners;
        for (size_t s = 0; s < n; ++s) {
            if (value(indexes_per_style[s], idx) == best) {
                scores[s].per_index_points[idx] = 10;
                if (winners > 1) scores[s].tie = true;
            }
        }
    }
    for (auto& sc : scores)
        sc.total = sc.per_index_points[0] + sc.per_index_points[1] + sc.per_index_points[2] +
                   sc.per_index_points[3];
    return scores;
}

} // namespace sonarmatch::quality
