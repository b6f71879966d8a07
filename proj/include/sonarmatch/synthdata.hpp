#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "sonarmatch/descriptor.hpp"
#include "sonarmatch/image.hpp"

namespace sonarmatch::synth {

struct ScenarioParams {
    uint64_t seed = 0;
    int height = 256;
    int width = 256;
    double speckle_strength = 0.0; // multiplicative mean-1 noise amplitude
    int shadow_count = 0;
    double brightness_shift = 0.0;
    double blur_sigma = 0.0;
    Eigen::Matrix3d homography = Eigen::Matrix3d::Identity(); // a -> b coordinates
};

struct GroundTruthPair {
    Image image_a;
    Image image_b;
    Eigen::Matrix3d h_true; // maps a-coordinates to b-coordinates
};

/// Named homography presets sized to the image: identity, translate,
/// rotate_scale, perspective.
Eigen::Matrix3d preset_homography(const std::string& name, int width, int height);

/// Inverse-warp with bilinear sampling: out(x) = img(h^-1 x); out-of-source pixels are 0.
Image warp_image(const Image& img, const Eigen::Matrix3d& h);

/// Seeded multi-octave value-noise terrain in [0,1].
Image value_noise_terrain(int height, int width, uint64_t seed);

/// Sonar-like ground-truth pair: shared terrain with bright ridges and dark
/// shadow capsules; image_b = degrade(warp(image_a, h_true)).
GroundTruthPair gen_sonar_pair(const ScenarioParams& params);

struct TripletGenParams {
    uint64_t seed = 0;
    int patch_side = 32;
    double min_separation = 16.0; // in ground-truth (a) coordinates
};

std::vector<descriptor::Triplet> gen_patch_triplets(const std::vector<GroundTruthPair>& pairs,
                                                    int n, const TripletGenParams& params);

} // namespace sonarmatch::synth
