#include "sonarmatch/detect_match.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "sonarmatch/rng.hpp"

namespace sonarmatch::match {

namespace {

Image downsample2(const Image& img) {
    Image out(img.height / 2, img.width / 2, 1, Colorspace::GRAY);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(y, x, 0) = img.at(2 * y, 2 * x, 0);
    return out;
}

// Dominant gradient-histogram orientation around (x, y) at the given scale.
double dominant_orientation(const Image& img, double cx, double cy, double scale) {
    constexpr int kBins = 36;
    double hist[kBins] = {0};
    const double sigma = 1.5 * scale;
    const int radius = std::max(2, static_cast<int>(std::lround(3.0 * sigma)));
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const int x = static_cast<int>(std::lround(cx)) + dx;
            const int y = static_cast<int>(std::lround(cy)) + dy;
            if (x < 1 || y < 1 || x >= img.width - 1 || y >= img.height - 1) continue;
            const double gx = img.at(y, x + 1, 0) - img.at(y, x - 1, 0);
            const double gy = img.at(y + 1, x, 0) - img.at(y - 1, x, 0);
            const double mag = std::sqrt(gx * gx + gy * gy);
            const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            double angle = std::atan2(gy, gx);
            if (angle < 0) angle += 2.0 * M_PI;
            int bin = static_cast<int>(angle / (2.0 * M_PI) * kBins) % kBins;
            hist[bin] += w * mag;
        }
    }
    int best = 0;
    for (int b = 1; b < kBins; ++b)
        if (hist[b] > hist[best]) best = b;
    // Parabolic refinement over the circular histogram.
    const double l = hist[(best + kBins - 1) % kBins];
    const double c = hist[best];
    const double r = hist[(best + 1) % kBins];
    double offset = 0.0;
    const double denom = l - 2 * c + r;
    if (std::abs(denom) > 1e-12) offset = std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
    return (best + 0.5 + offset) * 2.0 * M_PI / kBins;
}

void cap_keypoints(std::vector<Keypoint>& kps, int max_keypoints) {
    std::stable_sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
        return std::abs(a.response) > std::abs(b.response);
    });
    if (max_keypoints > 0 && static_cast<int>(kps.size()) > max_keypoints)
        kps.resize(max_keypoints);
}

} // namespace

std::vector<Keypoint> detect_dog(const Image& img_in, const DogParams& params) {
    const Image img = img_in.colorspace == Colorspace::GRAY ? img_in : to_gray(img_in);
    if (img.height < 32 || img.width < 32)
        throw DimensionMismatchError("detect_dog: image must be at least 32x32");

    const int s = params.scales_per_octave;
    const double k = std::pow(2.0, 1.0 / s);
    std::vector<Keypoint> keypoints;

    Image base = gaussian_blur(img, params.base_sigma);
    int octave = 0;
    while (base.height >= 16 && base.width >= 16) {
        // Gaussian stack: s+3 levels, incremental blurs.
        std::vector<Image> gauss;
        gauss.push_back(base);
        double sigma_prev = params.base_sigma;
        for (int i = 1; i < s + 3; ++i) {
            const double sigma_total = params.base_sigma * std::pow(k, i);
            const double sigma_inc =
                std::sqrt(sigma_total * sigma_total - sigma_prev * sigma_prev);
            gauss.push_back(gaussian_blur(gauss.back(), sigma_inc));
            sigma_prev = sigma_total;
        }
        std::vector<Image> dog;
        for (int i = 0; i + 1 < static_cast<int>(gauss.size()); ++i) {
            Image d = gauss[i];
            for (size_t p = 0; p < d.pixels.size(); ++p)
                d.pixels[p] = gauss[i + 1].pixels[p] - gauss[i].pixels[p];
            dog.push_back(std::move(d));
        }

        const double scale_mult = std::pow(2.0, octave);
        for (int level = 1; level + 1 < static_cast<int>(dog.size()); ++level) {
            const Image& d = dog[level];
            for (int y = 1; y < d.height - 1; ++y) {
                for (int x = 1; x < d.width - 1; ++x) {
                    const double v = d.at(y, x, 0);
                    if (std::abs(v) < params.contrast_threshold) continue;
                    bool is_max = true, is_min = true;
                    for (int dl = -1; dl <= 1 && (is_max || is_min); ++dl)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx) {
                                if (dl == 0 && dy == 0 && dx == 0) continue;
                                const double n = dog[level + dl].at(y + dy, x + dx, 0);
                                if (n >= v) is_max = false;
                                if (n <= v) is_min = false;
                            }
                    if (!is_max && !is_min) continue;
                    // Edge response rejection on the 2x2 spatial Hessian.
                    const double dxx = d.at(y, x + 1, 0) + d.at(y, x - 1, 0) - 2 * v;
                    const double dyy = d.at(y + 1, x, 0) + d.at(y - 1, x, 0) - 2 * v;
                    const double dxy = 0.25 * (d.at(y + 1, x + 1, 0) - d.at(y + 1, x - 1, 0) -
                                               d.at(y - 1, x + 1, 0) + d.at(y - 1, x - 1, 0));
                    const double tr = dxx + dyy;
                    const double det = dxx * dyy - dxy * dxy;
                    const double r = params.edge_ratio;
                    if (det <= 0 || tr * tr * r >= (r + 1) * (r + 1) * det) continue;
                    // Sub-pixel refinement by 1-D parabolas along x and y.
                    double ox = 0.0, oy = 0.0;
                    const double denx = d.at(y, x - 1, 0) - 2 * v + d.at(y, x + 1, 0);
                    if (std::abs(denx) > 1e-12)
                        ox = std::clamp(0.5 * (d.at(y, x - 1, 0) - d.at(y, x + 1, 0)) / denx, -0.5,
                                        0.5);
                    const double deny = d.at(y - 1, x, 0) - 2 * v + d.at(y + 1, x, 0);
                    if (std::abs(deny) > 1e-12)
                        oy = std::clamp(0.5 * (d.at(y - 1, x, 0) - d.at(y + 1, x, 0)) / deny, -0.5,
                                        0.5);

                    Keypoint kp;
                    kp.x = (x + ox) * scale_mult;
                    kp.y = (y + oy) * scale_mult;
                    kp.scale = params.base_sigma * std::pow(k, level) * scale_mult;
                    kp.response = v;
                    kp.orientation = dominant_orientation(gauss[level], x + ox, y + oy,
                                                          params.base_sigma * std::pow(k, level));
                    if (kp.x >= 0 && kp.x < img.width && kp.y >= 0 && kp.y < img.height)
                        keypoints.push_back(kp);
                }
            }
        }
        base = downsample2(gauss[s]);
        ++octave;
    }
    cap_keypoints(keypoints, params.max_keypoints);
    return keypoints;
}

std::vector<Keypoint> detect_corner(const Image& img_in, const CornerParams& params) {
    const Image img = img_in.colorspace == Colorspace::GRAY ? img_in : to_gray(img_in);
    if (img.height < 16 || img.width < 16)
        throw DimensionMismatchError("detect_corner: image must be at least 16x16");

    const int h = img.height, w = img.width;
    std::vector<double> ixx(static_cast<size_t>(h) * w, 0.0), iyy(ixx), ixy(ixx);
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            const double gx = 0.5 * (img.at(y, x + 1, 0) - img.at(y, x - 1, 0));
            const double gy = 0.5 * (img.at(y + 1, x, 0) - img.at(y - 1, x, 0));
            const size_t i = static_cast<size_t>(y) * w + x;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }

    auto smooth = [&](std::vector<double>& v) {
        Image tmp(h, w, 1, Colorspace::GRAY);
        tmp.pixels = v;
        v = gaussian_blur(tmp, 2.0).pixels;
    };
    smooth(ixx);
    smooth(iyy);
    smooth(ixy);

    std::vector<double> response(static_cast<size_t>(h) * w, 0.0);
    double max_r = 0.0;
    for (size_t i = 0; i < response.size(); ++i) {
        const double det = ixx[i] * iyy[i] - ixy[i] * ixy[i];
        const double tr = ixx[i] + iyy[i];
        response[i] = det - params.harris_k * tr * tr;
        max_r = std::max(max_r, response[i]);
    }
    if (max_r <= 0.0) return {};
    const double threshold = params.threshold_rel * max_r;

    std::vector<Keypoint> keypoints;
    const int nr = params.nms_radius;
    for (int y = nr; y < h - nr; ++y) {
        for (int x = nr; x < w - nr; ++x) {
            const double r = response[static_cast<size_t>(y) * w + x];
            if (r < threshold) continue;
            bool is_max = true;
            for (int dy = -nr; dy <= nr && is_max; ++dy)
                for (int dx = -nr; dx <= nr; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (response[static_cast<size_t>(y + dy) * w + x + dx] > r) {
                        is_max = false;
                        break;
                    }
                }
            if (!is_max) continue;

            // Intensity-centroid orientation over a centered disc.
            double m10 = 0, m01 = 0;
            const int cr = params.centroid_radius;
            for (int dy = -cr; dy <= cr; ++dy)
                for (int dx = -cr; dx <= cr; ++dx) {
                    if (dx * dx + dy * dy > cr * cr) continue;
                    const int yy = std::clamp(y + dy, 0, h - 1);
                    const int xx = std::clamp(x + dx, 0, w - 1);
                    m10 += dx * img.at(yy, xx, 0);
                    m01 += dy * img.at(yy, xx, 0);
                }
            Keypoint kp;
            kp.x = x;
            kp.y = y;
            kp.scale = params.patch_scale;
            kp.orientation = std::atan2(m01, m10);
            kp.response = r;
            keypoints.push_back(kp);
        }
    }
    cap_keypoints(keypoints, params.max_keypoints);
    return keypoints;
}

std::vector<Correspondence> match_crosscheck(const std::vector<Eigen::VectorXd>& desc_a,
                                             const std::vector<Eigen::VectorXd>& desc_b) {
    std::vector<Correspondence> out;
    if (desc_a.empty() || desc_b.empty()) return out;

    const int na = static_cast<int>(desc_a.size());
    const int nb = static_cast<int>(desc_b.size());
    std::vector<int> best_ab(na, -1), best_ba(nb, -1);
    std::vector<double> dist_ab(na, 0.0);

    for (int i = 0; i < na; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < nb; ++j) {
            const double d = (desc_a[i] - desc_b[j]).norm();
            if (d < best) {
                best = d;
                best_ab[i] = j;
            }
        }
        dist_ab[i] = best;
    }
    for (int j = 0; j < nb; ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < na; ++i) {
            const double d = (desc_a[i] - desc_b[j]).norm();
            if (d < best) {
                best = d;
                best_ba[j] = i;
            }
        }
    }
    for (int i = 0; i < na; ++i) {
        const int j = best_ab[i];
        if (j >= 0 && best_ba[j] == i) out.push_back({i, j, dist_ab[i], false});
    }
    return out;
}

Eigen::Matrix3d fit_homography_dlt(const std::vector<Eigen::Vector2d>& from,
                                   const std::vector<Eigen::Vector2d>& to) {
    const size_t n = from.size();
    if (n < 4 || to.size() != n)
        throw InsufficientDataError("fit_homography_dlt: need >= 4 point pairs");

    // Hartley normalization of both point sets.
    auto normalize = [](const std::vector<Eigen::Vector2d>& pts) {
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (const auto& p : pts) mean += p;
        mean /= static_cast<double>(pts.size());
        double dist = 0.0;
        for (const auto& p : pts) dist += (p - mean).norm();
        dist /= static_cast<double>(pts.size());
        const double s = dist > 1e-12 ? std::sqrt(2.0) / dist : 1.0;
        Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
        t(0, 0) = s;
        t(1, 1) = s;
        t(0, 2) = -s * mean.x();
        t(1, 2) = -s * mean.y();
        return t;
    };
    const Eigen::Matrix3d ta = normalize(from);
    const Eigen::Matrix3d tb = normalize(to);

    Eigen::MatrixXd a(2 * n, 9);
    for (size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d p = ta * from[i].homogeneous();
        const Eigen::Vector3d q = tb * to[i].homogeneous();
        a.row(2 * i) << -p.x(), -p.y(), -1, 0, 0, 0, q.x() * p.x(), q.x() * p.y(), q.x();
        a.row(2 * i + 1) << 0, 0, 0, -p.x(), -p.y(), -1, q.y() * p.x(), q.y() * p.y(), q.y();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd hv = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
    Eigen::Matrix3d h = tb.inverse() * hn * ta;
    if (std::abs(h(2, 2)) > 1e-12) h /= h(2, 2);
    return h;
}

double symmetric_transfer_error(const Eigen::Matrix3d& h, const Eigen::Matrix3d& h_inv,
                                const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const Eigen::Vector3d fa = h * a.homogeneous();
    const Eigen::Vector3d fb = h_inv * b.homogeneous();
    if (std::abs(fa.z()) < 1e-12 || std::abs(fb.z()) < 1e-12)
        return std::numeric_limits<double>::infinity();
    const double d_fwd = (fa.hnormalized() - b).norm();
    const double d_bwd = (fb.hnormalized() - a).norm();
    return std::max(d_fwd, d_bwd);
}

namespace {

bool sample_degenerate(const std::vector<Eigen::Vector2d>& pts) {
    // Any 3 collinear points make the 4-point sample degenerate.
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k) {
                const Eigen::Vector2d u = pts[j] - pts[i];
                const Eigen::Vector2d v = pts[k] - pts[i];
                if (std::abs(u.x() * v.y() - u.y() * v.x()) < 1e-9) return true;
            }
    return false;
}

} // namespace

RansacResult ransac_homography(const std::vector<Correspondence>& corrs,
                               const std::vector<Keypoint>& kps_a,
                               const std::vector<Keypoint>& kps_b, const MatchConfig& cfg) {
    const int n = static_cast<int>(corrs.size());
    if (n < 4) throw InsufficientDataError("ransac_homography: need >= 4 correspondences");

    std::vector<Eigen::Vector2d> pa(n), pb(n);
    for (int i = 0; i < n; ++i) {
        pa[i] = {kps_a[corrs[i].index_a].x, kps_a[corrs[i].index_a].y};
        pb[i] = {kps_b[corrs[i].index_b].x, kps_b[corrs[i].index_b].y};
    }

    Rng rng(cfg.seed);
    RansacResult best;
    best.inlier.assign(n, false);
    double best_err = std::numeric_limits<double>::infinity();
    long max_iters = cfg.ransac_max_iters;

    for (long iter = 0; iter < max_iters; ++iter) {
        // 4 distinct indices.
        int idx[4];
        for (int s = 0; s < 4; ++s) {
            bool fresh;
            do {
                idx[s] = rng.uniform_int(0, n - 1);
                fresh = true;
                for (int t = 0; t < s; ++t)
                    if (idx[t] == idx[s]) fresh = false;
            } while (!fresh);
        }
        std::vector<Eigen::Vector2d> sa = {pa[idx[0]], pa[idx[1]], pa[idx[2]], pa[idx[3]]};
        std::vector<Eigen::Vector2d> sb = {pb[idx[0]], pb[idx[1]], pb[idx[2]], pb[idx[3]]};
        if (sample_degenerate(sa) || sample_degenerate(sb)) continue;

        Eigen::Matrix3d h;
        try {
            h = fit_homography_dlt(sa, sb);
        } catch (const Error&) {
            continue;
        }
        if (!h.allFinite() || std::abs(h.determinant()) < 1e-12) continue;
        const Eigen::Matrix3d h_inv = h.inverse();

        int count = 0;
        double err_sum = 0.0;
        std::vector<bool> flags(n, false);
        for (int i = 0; i < n; ++i) {
            const double e = symmetric_transfer_error(h, h_inv, pa[i], pb[i]);
            if (e < cfg.ransac_threshold) {
                flags[i] = true;
                ++count;
                err_sum += e;
            }
        }
        if (count > best.n_inliers ||
            (count == best.n_inliers && count > 0 && err_sum < best_err)) {
            best.n_inliers = count;
            best.inlier = flags;
            best.homography = h;
            best_err = err_sum;
            // Adaptive iteration bound from the current inlier ratio.
            const double w = static_cast<double>(count) / n;
            const double p_outlier = 1.0 - w * w * w * w;
            if (p_outlier > 1e-12 && p_outlier < 1.0) {
                const long needed = static_cast<long>(
                    std::ceil(std::log(1.0 - cfg.ransac_confidence) / std::log(p_outlier)));
                max_iters = std::min<long>(cfg.ransac_max_iters, std::max<long>(iter + 1, needed));
            } else if (p_outlier <= 1e-12) {
                max_iters = iter + 1; // all inliers, stop
            }
        }
    }

    if (best.n_inliers >= 4) {
        // Least-squares refit on the consensus set.
        std::vector<Eigen::Vector2d> fa, fb;
        for (int i = 0; i < n; ++i)
            if (best.inlier[i]) {
                fa.push_back(pa[i]);
                fb.push_back(pb[i]);
            }
        const Eigen::Matrix3d h = fit_homography_dlt(fa, fb);
        if (h.allFinite() && std::abs(h.determinant()) > 1e-12) {
            const Eigen::Matrix3d h_inv = h.inverse();
            int count = 0;
            std::vector<bool> flags(n, false);
            for (int i = 0; i < n; ++i) {
                const double e = symmetric_transfer_error(h, h_inv, pa[i], pb[i]);
                if (e < cfg.ransac_threshold) {
                    flags[i] = true;
                    ++count;
                }
            }
            if (count >= best.n_inliers) {
                best.homography = h;
                best.inlier = flags;
                best.n_inliers = count;
            }
        }
    }
    best.consensus = best.n_inliers > 4;
    return best;
}

double pocm(int n_inliers, int n_matches) {
    if (n_inliers > n_matches)
        throw Error("pocm: inlier count exceeds match count (contract violation)");
    if (n_matches == 0) return 0.0;
    return static_cast<double>(n_inliers) / static_cast<double>(n_matches);
}

Eigen::VectorXd normalized_patch_descriptor(const Patch& patch) {
    const size_t n = patch.pixels.size();
    Eigen::VectorXd v(n);
    double mu = 0;
    for (size_t i = 0; i < n; ++i) mu += patch.pixels[i];
    mu /= static_cast<double>(n);
    double var = 0;
    for (size_t i = 0; i < n; ++i) var += (patch.pixels[i] - mu) * (patch.pixels[i] - mu);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (size_t i = 0; i < n; ++i)
        v(static_cast<long>(i)) = sd < 1e-12 ? patch.pixels[i] - mu : (patch.pixels[i] - mu) / sd;
    return v;
}

MatchReport match_images(const Image& img_a, const Image& img_b, DetectorKind detector,
                         const DescribeFn& describe, const MatchConfig& cfg, int repeats) {
    const Image gray_a = img_a.colorspace == Colorspace::GRAY ? img_a : to_gray(img_a);
    const Image gray_b = img_b.colorspace == Colorspace::GRAY ? img_b : to_gray(img_b);

    MatchReport report;
    for (int run = 0; run < std::max(1, repeats); ++run) {
        const auto t0 = std::chrono::steady_clock::now();

        auto detect = [&](const Image& g) {
            if (detector == DetectorKind::Dog) {
                DogParams p;
                p.max_keypoints = cfg.max_keypoints;
                return detect_dog(g, p);
            }
            CornerParams p;
            p.max_keypoints = cfg.max_keypoints;
            return detect_corner(g, p);
        };
        std::vector<Keypoint> kps_a = detect(gray_a);
        std::vector<Keypoint> kps_b = detect(gray_b);

        // The descriptor window spans patch_support_sigmas * scale pixels, so
        // sample at that spacing rather than one patch pixel per scale unit.
        auto sampling_kp = [&](const Keypoint& kp) {
            Keypoint s = kp;
            s.scale = std::max(kp.scale * cfg.patch_support_sigmas / cfg.patch_side, 1e-3);
            return s;
        };
        // Border-reject keypoints whose descriptor support leaves the image.
        auto filter = [&](std::vector<Keypoint>& kps, const Image& g) {
            std::vector<Keypoint> kept;
            for (const auto& kp : kps)
                if (patch_in_bounds(g, sampling_kp(kp), cfg.patch_side)) kept.push_back(kp);
            kps = std::move(kept);
        };
        filter(kps_a, gray_a);
        filter(kps_b, gray_b);

        std::vector<Correspondence> corrs;
        RansacResult ransac;
        std::string reason;
        if (kps_a.empty() || kps_b.empty()) {
            reason = "too few keypoints";
        } else {
            std::vector<Eigen::VectorXd> desc_a, desc_b;
            desc_a.reserve(kps_a.size());
            desc_b.reserve(kps_b.size());
            for (const auto& kp : kps_a)
                desc_a.push_back(describe(extract_patch(gray_a, sampling_kp(kp), cfg.patch_side)));
            for (const auto& kp : kps_b)
                desc_b.push_back(describe(extract_patch(gray_b, sampling_kp(kp), cfg.patch_side)));
            corrs = match_crosscheck(desc_a, desc_b);
            if (static_cast<int>(corrs.size()) < 4) {
                reason = "too few matches for RANSAC";
            } else {
                ransac = ransac_homography(corrs, kps_a, kps_b, cfg);
                for (size_t i = 0; i < corrs.size(); ++i) corrs[i].inlier = ransac.inlier[i];
            }
        }

        const auto t1 = std::chrono::steady_clock::now();
        report.runtime_seconds_runs.push_back(std::chrono::duration<double>(t1 - t0).count());

        if (run == 0) {
            report.keypoints_a = std::move(kps_a);
            report.keypoints_b = std::move(kps_b);
            report.correspondences = std::move(corrs);
            report.n_matches = static_cast<int>(report.correspondences.size());
            report.n_inliers = ransac.n_inliers;
            report.pocm = pocm(report.n_inliers, report.n_matches);
            if (reason.empty() && ransac.n_inliers >= 4)
                report.homography = ransac.homography;
            report.reason = reason;
        }
    }
    report.runtime_seconds_mean =
        std::accumulate(report.runtime_seconds_runs.begin(), report.runtime_seconds_runs.end(),
                        0.0) /
        static_cast<double>(report.runtime_seconds_runs.size());
    return report;
}

Image render_match_overlay(const Image& img_a, const Image& img_b,
                           const std::vector<Keypoint>& kps_a, const std::vector<Keypoint>& kps_b,
                           const std::vector<Correspondence>& corrs) {
    const Image a = img_a.colorspace == Colorspace::GRAY ? gray_to_rgb(img_a)
                                                         : (img_a.colorspace == Colorspace::YIQ
                                                                ? yiq_to_rgb(img_a)
                                                                : img_a);
    const Image b = img_b.colorspace == Colorspace::GRAY ? gray_to_rgb(img_b)
                                                         : (img_b.colorspace == Colorspace::YIQ
                                                                ? yiq_to_rgb(img_b)
                                                                : img_b);
    const int h = std::max(a.height, b.height);
    Image canvas(h, a.width + b.width, 3, Colorspace::RGB, 0.0);
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x)
            for (int c = 0; c < 3; ++c) canvas.at(y, x, c) = a.at(y, x, c);
    for (int y = 0; y < b.height; ++y)
        for (int x = 0; x < b.width; ++x)
            for (int c = 0; c < 3; ++c) canvas.at(y, a.width + x, c) = b.at(y, x, c);

    auto draw_line = [&](double x0, double y0, double x1, double y1, double r, double g,
                         double bl) {
        const int steps = static_cast<int>(std::hypot(x1 - x0, y1 - y0)) + 1;
        for (int i = 0; i <= steps; ++i) {
            const double t = static_cast<double>(i) / steps;
            const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
            const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
            if (x < 0 || y < 0 || x >= canvas.width || y >= canvas.height) continue;
            canvas.at(y, x, 0) = r;
            canvas.at(y, x, 1) = g;
            canvas.at(y, x, 2) = bl;
        }
    };
    for (const auto& c : corrs) {
        if (!c.inlier) continue;
        const auto& ka = kps_a[c.index_a];
        const auto& kb = kps_b[c.index_b];
        draw_line(ka.x, ka.y, a.width + kb.x, kb.y, 0.1, 0.9, 0.1);
    }
    return canvas;
}

} // namespace sonarmatch::match
