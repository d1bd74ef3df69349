#pragma once

#include <Eigen/Core>
#include <optional>
#include <string_view>
#include <vector>

#include "regbench/detectors.h"
#include "regbench/kdtree.h"
#include "regbench/point_cloud.h"

namespace regbench {

enum class DescriptorKind { Shot, Fpfh };

std::string_view to_string(DescriptorKind kind);
std::optional<DescriptorKind> parse_descriptor(std::string_view name);
const std::vector<DescriptorKind>& all_descriptors();

/// SHOT layout: 8 azimuth x 2 elevation x 2 radial sectors, 11 cosine bins.
inline constexpr int kShotAzimuthBins = 8;
inline constexpr int kShotElevationBins = 2;
inline constexpr int kShotRadialBins = 2;
inline constexpr int kShotCosineBins = 11;
inline constexpr int kShotLength =
    kShotAzimuthBins * kShotElevationBins * kShotRadialBins * kShotCosineBins;  // 352

/// FPFH layout: alpha, phi, theta blocks of 11 bins each.
inline constexpr int kFpfhBinsPerFeature = 11;
inline constexpr int kFpfhLength = 3 * kFpfhBinsPerFeature;  // 33

std::size_t descriptor_length(DescriptorKind kind);

/// One vector per keypoint, in keypoint order. Keypoints whose support was
/// degenerate keep a zero vector with valid = 0 and are skipped by matching.
struct DescriptorSet {
    DescriptorKind kind = DescriptorKind::Shot;
    double radius = 0.0;
    std::vector<std::size_t> keypoint_indices;
    std::vector<Eigen::VectorXd> vectors;
    std::vector<std::uint8_t> valid;

    std::size_t size() const { return vectors.size(); }
    std::size_t valid_count() const;
};

/// Rows of `axes` are the x, y, z directions; right-handed.
struct LocalReferenceFrame {
    Vec3 origin = Vec3::Zero();
    Mat3 axes = Mat3::Identity();

    Vec3 to_local(const Vec3& p) const { return axes * (p - origin); }
};

/// Weighted (radius - d) scatter about the keypoint; axes are its
/// eigenvectors by descending eigenvalue, x and z pointing toward the
/// majority of the support, y = z cross x. Needs at least 5 neighbors and a
/// rank >= 2 scatter.
std::optional<LocalReferenceFrame> try_compute_lrf(const PointCloud& cloud, const KdTree& tree,
                                                   std::size_t keypoint, double radius);
/// Throws DegenerateGeometry where try_compute_lrf returns nothing.
LocalReferenceFrame compute_lrf(const PointCloud& cloud, std::size_t keypoint, double radius);

/// Signature of histograms of orientations with quadrilinear interpolation
/// (azimuth circular; elevation, radius and cosine clamped at the ends),
/// L2-normalized.
DescriptorSet compute_shot(const PointCloud& cloud, const KeypointSet& keypoints, double radius);
DescriptorSet compute_shot(const PointCloud& cloud, std::span<const std::size_t> keypoints,
                           double radius);

/// Darboux-frame angular features of one point pair.
struct PairFeatures {
    double alpha = 0.0;  // v . n_t, [-1, 1]
    double phi = 0.0;    // u . (p_t - p_s) / d, [-1, 1]
    double theta = 0.0;  // atan2(w . n_t, u . n_t), (-pi, pi]
};

/// Features for the pair (p, q); the source is whichever endpoint's normal
/// makes the smaller angle with the connecting line; when the angles agree to
/// 1e-12 in cosine, the ordering with the larger phi wins. Returns
/// nothing when the pair is degenerate (coincident points or the source
/// normal parallel to the line).
std::optional<PairFeatures> pair_features(const Vec3& p, const Vec3& np, const Vec3& q,
                                          const Vec3& nq);

/// Simplified point feature histogram over the radius neighborhood, each
/// 11-bin block summing to 100; zero when fewer than 2 valid neighbors.
Eigen::VectorXd compute_spfh(const PointCloud& cloud, const KdTree& tree, std::size_t point,
                             double radius);
Eigen::VectorXd compute_spfh(const PointCloud& cloud, std::size_t point, double radius);

/// FPFH(p) = SPFH(p) + 1/K * sum_k SPFH(p_k) / |p - p_k|, blocks renormalized
/// to 100.
DescriptorSet compute_fpfh(const PointCloud& cloud, const KeypointSet& keypoints, double radius);
DescriptorSet compute_fpfh(const PointCloud& cloud, std::span<const std::size_t> keypoints,
                           double radius);

DescriptorSet describe(DescriptorKind kind, const PointCloud& cloud, const KeypointSet& keypoints,
                       double radius);

}  // namespace regbench
