#pragma once

#include <Eigen/Dense>

#include "midframe/flow.hpp"

namespace midframe {

// 3x3 projective transform, normalized so H(2,2) = 1. Maps coordinates of the
// first fitted frame to coordinates of the second.
using Homography = Eigen::Matrix3d;

struct HomographyParams {
    int grid = 32;              // correspondences per axis, from the flow field
    int ransac_iterations = 300;
    double inlier_threshold = 1.5;  // px, forward transfer error
    double max_condition = 1e8;
    uint64_t ransac_seed = 9001;    // fixed: fits are deterministic
};

struct DegenerateHomography : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Least-squares homography over a uniform grid of flow correspondences with a
// random-sample-consensus loop for outlier rejection.
Homography fit_homography(const Frame& a, const Frame& b, const FlowEstimator& est,
                          const HomographyParams& params = {});

// Direct DLT fit from explicit point correspondences (used internally and by
// tests). Throws DegenerateHomography for unusable configurations.
Homography fit_homography_points(const std::vector<Eigen::Vector2d>& from,
                                 const std::vector<Eigen::Vector2d>& to,
                                 double max_condition = 1e8);

// Normalized 2x2 affine block H(0:2,0:2) / H(2,2).
Eigen::Matrix2d affine_block(const Homography& h);

}  // namespace midframe
