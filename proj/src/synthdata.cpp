#include "sonarmatch/synthdata.hpp"

#include <algorithm>
#include <cmath>

#include "sonarmatch/rng.hpp"

namespace sonarmatch::synth {

Eigen::Matrix3d preset_homography(const std::string& name, int width, int height) {
    Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
    if (name == "identity") return h;
    if (name == "translate") {
        h(0, 2) = 10.0;
        return h;
    }
    if (name == "rotate_scale") {
        const double angle = 8.0 * M_PI / 180.0;
        const double s = 1.1;
        const double cx = width / 2.0, cy = height / 2.0;
        Eigen::Matrix3d t1 = Eigen::Matrix3d::Identity(), r = Eigen::Matrix3d::Identity(),
                        t2 = Eigen::Matrix3d::Identity();
        t1(0, 2) = -cx;
        t1(1, 2) = -cy;
        r(0, 0) = s * std::cos(angle);
        r(0, 1) = -s * std::sin(angle);
        r(1, 0) = s * std::sin(angle);
        r(1, 1) = s * std::cos(angle);
        t2(0, 2) = cx;
        t2(1, 2) = cy;
        return t2 * r * t1;
    }
    if (name == "perspective") {
        h(0, 2) = 5.0;
        h(1, 2) = -3.0;
        h(2, 0) = 2e-4;
        h(2, 1) = -1e-4;
        return h;
    }
    throw ConfigError("preset_homography: unknown preset '" + name + "'");
}

Image warp_image(const Image& img, const Eigen::Matrix3d& h) {
    if (std::abs(h.determinant()) < 1e-12)
        throw ConfigError("warp_image: homography not invertible");
    const Eigen::Matrix3d h_inv = h.inverse();
    Image out(img.height, img.width, img.channels, img.colorspace, 0.0);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Eigen::Vector3d p = h_inv * Eigen::Vector3d(x, y, 1.0);
            if (std::abs(p.z()) < 1e-12) continue;
            const double sx = p.x() / p.z();
            const double sy = p.y() / p.z();
            if (sx < 0 || sy < 0 || sx > img.width - 1 || sy > img.height - 1) continue;
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = bilinear_sample(img, sx, sy, c);
        }
    }
    return out;
}

Image value_noise_terrain(int height, int width, uint64_t seed) {
    Rng rng(seed);
    Image out(height, width, 1, Colorspace::GRAY, 0.0);
    double amplitude = 1.0, total_amp = 0.0;
    auto smoothstep = [](double t) { return t * t * (3.0 - 2.0 * t); };
    for (int octave = 0; octave < 5; ++octave) {
        const int cells = 4 << octave; // grid resolution per octave
        std::vector<double> grid(static_cast<size_t>(cells + 1) * (cells + 1));
        for (double& v : grid) v = rng.uniform();
        for (int y = 0; y < height; ++y) {
            const double gy = static_cast<double>(y) / (height - 1) * cells;
            const int y0 = std::min(static_cast<int>(gy), cells - 1);
            const double fy = smoothstep(gy - y0);
            for (int x = 0; x < width; ++x) {
                const double gx = static_cast<double>(x) / (width - 1) * cells;
                const int x0 = std::min(static_cast<int>(gx), cells - 1);
                const double fx = smoothstep(gx - x0);
                const double v00 = grid[static_cast<size_t>(y0) * (cells + 1) + x0];
                const double v01 = grid[static_cast<size_t>(y0) * (cells + 1) + x0 + 1];
                const double v10 = grid[static_cast<size_t>(y0 + 1) * (cells + 1) + x0];
                const double v11 = grid[static_cast<size_t>(y0 + 1) * (cells + 1) + x0 + 1];
                out.at(y, x, 0) += amplitude * ((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                                fy * ((1 - fx) * v10 + fx * v11));
            }
        }
        total_amp += amplitude;
        amplitude *= 0.5;
    }
    for (double& v : out.pixels) v = std::clamp(v / total_amp, 0.0, 1.0);
    return out;
}

namespace {

// Bright ridge with a dark capsule shadow trailing behind it.
void paint_ridge_and_shadow(Image& img, Rng& rng) {
    const double cx = rng.uniform(0.15, 0.85) * img.width;
    const double cy = rng.uniform(0.15, 0.85) * img.height;
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    const double len = rng.uniform(0.08, 0.22) * std::min(img.width, img.height);
    const double ridge_w = rng.uniform(1.5, 4.0);
    const double shadow_w = ridge_w * rng.uniform(2.0, 4.0);
    const double shadow_len = len * rng.uniform(1.2, 2.0);
    const double ux = std::cos(angle), uy = std::sin(angle);
    const double nx = -uy, ny = ux; // shadow falls along the normal

    auto capsule_dist = [](double px, double py, double ax, double ay, double bx, double by) {
        const double abx = bx - ax, aby = by - ay;
        const double t = std::clamp(((px - ax) * abx + (py - ay) * aby) /
                                        std::max(abx * abx + aby * aby, 1e-12),
                                    0.0, 1.0);
        return std::hypot(px - (ax + t * abx), py - (ay + t * aby));
    };

    const double sx0 = cx + nx * shadow_w, sy0 = cy + ny * shadow_w;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double dr = capsule_dist(x, y, cx - ux * len, cy - uy * len, cx + ux * len,
                                           cy + uy * len);
            const double ds = capsule_dist(x, y, sx0 - ux * shadow_len, sy0 - uy * shadow_len,
                                           sx0 + ux * shadow_len, sy0 + uy * shadow_len);
            double v = img.at(y, x, 0);
            if (dr < ridge_w * 3.0) v += 0.5 * std::exp(-dr * dr / (2.0 * ridge_w * ridge_w));
            if (ds < shadow_w * 3.0)
                v *= 1.0 - 0.85 * std::exp(-ds * ds / (2.0 * shadow_w * shadow_w));
            img.at(y, x, 0) = std::clamp(v, 0.0, 1.0);
        }
    }
}

} // namespace

GroundTruthPair gen_sonar_pair(const ScenarioParams& params) {
    if (params.height < 64 || params.width < 64)
        throw ConfigError("gen_sonar_pair: size must be at least 64x64");
    if (std::abs(params.homography.determinant()) < 1e-12)
        throw ConfigError("gen_sonar_pair: homography not invertible");

    Rng rng(params.seed);
    Image terrain = value_noise_terrain(params.height, params.width, rng.raw());
    for (int i = 0; i < params.shadow_count; ++i) paint_ridge_and_shadow(terrain, rng);

    GroundTruthPair pair;
    pair.h_true = params.homography;
    pair.image_a = terrain;
    Image b = warp_image(terrain, params.homography);

    if (params.speckle_strength > 0.0) {
        for (double& v : b.pixels) {
            const double z = rng.normal();
            v *= std::max(0.0, 1.0 + params.speckle_strength * (z * z - 1.0));
        }
    }
    if (params.blur_sigma > 0.0) b = gaussian_blur(b, params.blur_sigma);
    if (params.brightness_shift != 0.0)
        for (double& v : b.pixels) v += params.brightness_shift;
    if (params.speckle_strength > 0.0 || params.blur_sigma > 0.0 ||
        params.brightness_shift != 0.0)
        for (double& v : b.pixels) v = std::clamp(v, 0.0, 1.0);

    pair.image_b = std::move(b);
    return pair;
}

std::vector<descriptor::Triplet> gen_patch_triplets(const std::vector<GroundTruthPair>& pairs,
                                                    int n, const TripletGenParams& params) {
    if (pairs.empty()) throw InsufficientDataError("gen_patch_triplets: no pairs");

    Rng rng(params.seed);
    const double margin = params.patch_side; // generous: covers rotation-free support
    std::vector<descriptor::Triplet> triplets;
    triplets.reserve(n);

    int attempts_left = n * 200;
    while (static_cast<int>(triplets.size()) < n) {
        if (--attempts_left < 0)
            throw InsufficientDataError("gen_patch_triplets: not enough valid locations");
        const auto& pair = pairs[triplets.size() % pairs.size()];
        const Image& a = pair.image_a;
        const Image& b = pair.image_b;
        if (a.width - 2 * margin < 1 || a.height - 2 * margin < 1)
            throw InsufficientDataError("gen_patch_triplets: images too small for patch margin");
        const double max_sep = std::hypot(a.width - 2 * margin, a.height - 2 * margin);
        if (params.min_separation >= max_sep)
            throw InsufficientDataError(
                "gen_patch_triplets: min_separation exceeds the usable image extent");

        const double ax = rng.uniform(margin, a.width - 1.0 - margin);
        const double ay = rng.uniform(margin, a.height - 1.0 - margin);
        const Eigen::Vector3d mapped = pair.h_true * Eigen::Vector3d(ax, ay, 1.0);
        if (std::abs(mapped.z()) < 1e-12) continue;
        const double px = mapped.x() / mapped.z();
        const double py = mapped.y() / mapped.z();
        if (px < margin || py < margin || px > b.width - 1.0 - margin ||
            py > b.height - 1.0 - margin)
            continue;

        // Negative: a different physical point, min_separation away in a-coords.
        double nx_a = 0, ny_a = 0, nx_b = 0, ny_b = 0;
        bool found = false;
        for (int tries = 0; tries < 100; ++tries) {
            nx_a = rng.uniform(margin, a.width - 1.0 - margin);
            ny_a = rng.uniform(margin, a.height - 1.0 - margin);
            if (std::hypot(nx_a - ax, ny_a - ay) < params.min_separation) continue;
            const Eigen::Vector3d nm = pair.h_true * Eigen::Vector3d(nx_a, ny_a, 1.0);
            if (std::abs(nm.z()) < 1e-12) continue;
            nx_b = nm.x() / nm.z();
            ny_b = nm.y() / nm.z();
            if (nx_b < margin || ny_b < margin || nx_b > b.width - 1.0 - margin ||
                ny_b > b.height - 1.0 - margin)
                continue;
            found = true;
            break;
        }
        if (!found) continue;

        descriptor::Triplet t;
        Keypoint ka{ax, ay, 1.0, 0.0, 0.0};
        Keypoint kp{px, py, 1.0, 0.0, 0.0};
        Keypoint kn{nx_b, ny_b, 1.0, 0.0, 0.0};
        t.a = extract_patch(a, ka, params.patch_side);
        t.p = extract_patch(b, kp, params.patch_side);
        t.n = extract_patch(b, kn, params.patch_side);
        triplets.push_back(std::move(t));
    }
    return triplets;
}

} // namespace sonarmatch::synth
