#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sonarmatch/image.hpp"

namespace sonarmatch::match {

struct Correspondence {
    int index_a = -1;
    int index_b = -1;
    double distance = 0.0;
    bool inlier = false;
};

struct MatchConfig {
    bool cross_check = true;
    std::optional<double> ratio_test;  // absent by default
    double ransac_threshold = 3.0;     // pixels, symmetric transfer error
    int ransac_max_iters = 2000;
    double ransac_confidence = 0.995;
    uint64_t seed = 0;
    int max_keypoints = 500;
    int patch_side = 32;
    double patch_support_sigmas = 12.0; // descriptor window size in units of keypoint scale
};

struct MatchReport {
    int n_inliers = 0;
    int n_matches = 0;
    double pocm = 0.0;
    double runtime_seconds_mean = 0.0;
    std::vector<double> runtime_seconds_runs;
    std::optional<Eigen::Matrix3d> homography;
    std::vector<Correspondence> correspondences;
    std::vector<Keypoint> keypoints_a, keypoints_b;
    std::string reason; // non-empty when the pipeline bailed early
};

struct DogParams {
    int scales_per_octave = 3;
    double base_sigma = 1.6;
    double contrast_threshold = 0.02;
    double edge_ratio = 10.0;
    int max_keypoints = 500;
};

struct CornerParams {
    double harris_k = 0.04;
    double threshold_rel = 0.01; // of the max response
    int nms_radius = 5;
    double patch_scale = 1.0;
    int centroid_radius = 7;
    int max_keypoints = 500;
};

/// Difference-of-Gaussians scale-space detector (SIFT-detector stand-in).
std::vector<Keypoint> detect_dog(const Image& img, const DogParams& params = {});

/// Harris corner detector with intensity-centroid orientation (BRISK-detector stand-in).
std::vector<Keypoint> detect_corner(const Image& img, const CornerParams& params = {});

/// Mutual nearest neighbors under L2; ties broken toward the lowest index.
std::vector<Correspondence> match_crosscheck(const std::vector<Eigen::VectorXd>& desc_a,
                                             const std::vector<Eigen::VectorXd>& desc_b);

struct RansacResult {
    Eigen::Matrix3d homography = Eigen::Matrix3d::Identity();
    std::vector<bool> inlier;
    int n_inliers = 0;
    bool consensus = false; // false when inlier support never exceeded a minimal sample
};

/// Normalized-DLT homography fit (least squares for > 4 points). Exposed for tests.
Eigen::Matrix3d fit_homography_dlt(const std::vector<Eigen::Vector2d>& from,
                                   const std::vector<Eigen::Vector2d>& to);

/// max of forward/backward transfer distances under h.
double symmetric_transfer_error(const Eigen::Matrix3d& h, const Eigen::Matrix3d& h_inv,
                                const Eigen::Vector2d& a, const Eigen::Vector2d& b);

RansacResult ransac_homography(const std::vector<Correspondence>& corrs,
                               const std::vector<Keypoint>& kps_a,
                               const std::vector<Keypoint>& kps_b, const MatchConfig& cfg);

double pocm(int n_inliers, int n_matches);

enum class DetectorKind { Dog, Corner };

/// Descriptor hook: keypoint patch -> feature vector.
using DescribeFn = std::function<Eigen::VectorXd(const Patch&)>;

/// Raw mean/std-normalized patch as a 1024-vector (classical-descriptor stand-in).
Eigen::VectorXd normalized_patch_descriptor(const Patch& patch);

/// detect -> patches -> describe -> cross-check -> RANSAC. Runtime covers
/// detect through RANSAC and is averaged over `repeats` runs.
MatchReport match_images(const Image& img_a, const Image& img_b, DetectorKind detector,
                         const DescribeFn& describe, const MatchConfig& cfg, int repeats = 1);

/// Side-by-side visualization with inlier match lines.
Image render_match_overlay(const Image& img_a, const Image& img_b,
                           const std::vector<Keypoint>& kps_a, const std::vector<Keypoint>& kps_b,
                           const std::vector<Correspondence>& corrs);

} // namespace sonarmatch::match
