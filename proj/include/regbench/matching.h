#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regbench/descriptors.h"
#include "regbench/detectors.h"
#include "regbench/point_cloud.h"
#include "regbench/transform.h"

namespace regbench {

struct Correspondence {
    std::size_t source = 0;  // position in the source keypoint / descriptor list
    std::size_t target = 0;  // position in the target keypoint / descriptor list
    double distance = 0.0;   // descriptor-space L2 distance
};

using CorrespondenceSet = std::vector<Correspondence>;

/// Nearest target descriptor (L2, lowest index on ties) for every valid source
/// descriptor; with `reciprocal`, only mutual nearest pairs survive. Throws
/// InvalidInput on a kind or length mismatch or an empty set.
CorrespondenceSet match_descriptors(const DescriptorSet& source, const DescriptorSet& target,
                                    bool reciprocal = true);

/// Least-squares rigid transform minimizing sum w_i |R p_i + t - q_i|^2 via
/// SVD of the weighted cross-covariance, with the reflection case corrected
/// so det(R) = +1. Throws DegenerateGeometry for fewer than 3 pairs or a
/// collinear / coincident source configuration.
SimilarityTransform estimate_rigid_transform(std::span<const Vec3> source,
                                             std::span<const Vec3> target,
                                             std::span<const double> weights = {});

/// Everything coarse alignment needs from one cloud.
struct FeatureCloud {
    PointCloud cloud;  // with normals
    KeypointSet keypoints;
    DescriptorSet descriptors;
    std::vector<Vec3> keypoint_positions;
};

struct FeatureParams {
    DetectorConfig detector;
    DescriptorKind descriptor = DescriptorKind::Shot;
    double descriptor_radius = 0.04;
    double normal_radius = 0.04;
    Vec3 viewpoint = Vec3::Zero();
};

/// Defaults relative to `resolution`: detector defaults, normal radius
/// 4 * resolution, descriptor radius 4 cm.
FeatureParams default_feature_params(DetectorKind detector, DescriptorKind descriptor,
                                     double resolution);

/// Estimates normals (unless the cloud already has them and
/// `reuse_normals` is set), detects and describes.
FeatureCloud compute_features(const PointCloud& cloud, const FeatureParams& params,
                              bool reuse_normals = false);

struct RansacParams {
    int trials = 1000;
    double inlier_threshold = 0.03;
    int min_inliers = 5;
    std::uint64_t seed = 0;
};

struct CoarseAlignment {
    SimilarityTransform transform;
    CorrespondenceSet correspondences;  // all reciprocal matches
    CorrespondenceSet inliers;
    double rms_residual = 0.0;
};

/// Sample consensus over 3-correspondence minimal sets, then a least-squares
/// refit on the inliers. Each trial draws from its own generator seeded by
/// (seed, trial), so the result does not depend on scheduling. Throws
/// AlignmentFailed when fewer than 3 matches exist or the best consensus is
/// below min_inliers.
CoarseAlignment estimate_coarse(const FeatureCloud& source, const FeatureCloud& target,
                                const RansacParams& params);

struct CoarseParams {
    FeatureParams features;
    RansacParams ransac;
};

CoarseParams default_coarse_params(DetectorKind detector, DescriptorKind descriptor,
                                   double resolution, std::uint64_t seed = 0);

/// detect -> describe -> reciprocal match -> sample consensus.
CoarseAlignment coarse_align(const PointCloud& source, const PointCloud& target,
                             const CoarseParams& params);

}  // namespace regbench
