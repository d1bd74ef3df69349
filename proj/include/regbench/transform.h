#pragma once

#include <Eigen/Core>

#include "regbench/point_cloud.h"

namespace regbench {

/// p -> scale * R * p + t. Rigid when scale == 1.
struct SimilarityTransform {
    double scale = 1.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static SimilarityTransform identity() { return {}; }
    static SimilarityTransform from_translation(const Vec3& t);
    static SimilarityTransform from_rotation(const Mat3& r);
    /// Right-handed rotation about `axis` (need not be unit) by `radians`.
    static SimilarityTransform from_axis_angle(const Vec3& axis, double radians);
    static SimilarityTransform from_scale(double s);

    Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
    Vec3 apply_direction(const Vec3& n) const { return rotation * n; }

    bool is_rigid(double tol = 1e-9) const;
    Eigen::Matrix4d matrix() const;

    /// Throws InvalidInput if scale <= 0 or the rotation is not proper
    /// orthonormal within `tol`.
    void validate(double tol = 1e-9) const;
};

/// apply(compose(a, b), p) == apply(a, apply(b, p)).
SimilarityTransform compose(const SimilarityTransform& a, const SimilarityTransform& b);
SimilarityTransform invert(const SimilarityTransform& t);

/// Nearest proper rotation (polar factor with det = +1).
Mat3 nearest_rotation(const Mat3& m);

/// Geodesic angle between two rotations, radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

PointCloud apply_transform(const PointCloud& cloud, const SimilarityTransform& t);

}  // namespace regbench
