#include "regbench/transform.h"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "regbench/error.h"

namespace regbench {

SimilarityTransform SimilarityTransform::from_translation(const Vec3& t) {
    SimilarityTransform out;
    out.translation = t;
    return out;
}

SimilarityTransform SimilarityTransform::from_rotation(const Mat3& r) {
    SimilarityTransform out;
    out.rotation = r;
    return out;
}

SimilarityTransform SimilarityTransform::from_axis_angle(const Vec3& axis, double radians) {
    return from_rotation(Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix());
}

SimilarityTransform SimilarityTransform::from_scale(double s) {
    SimilarityTransform out;
    out.scale = s;
    return out;
}

bool SimilarityTransform::is_rigid(double tol) const {
    if (std::abs(scale - 1.0) > tol) return false;
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

Eigen::Matrix4d SimilarityTransform::matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = scale * rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
}

void SimilarityTransform::validate(double tol) const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw_invalid("transform scale must be positive");
    if (!rotation.allFinite() || !translation.allFinite())
        throw_invalid("transform has non-finite entries");
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > tol) throw_invalid("transform rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > tol)
        throw_invalid("transform rotation determinant is not +1");
}

SimilarityTransform compose(const SimilarityTransform& a, const SimilarityTransform& b) {
    SimilarityTransform out;
    out.scale = a.scale * b.scale;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.scale * (a.rotation * b.translation) + a.translation;
    return out;
}

SimilarityTransform invert(const SimilarityTransform& t) {
    SimilarityTransform out;
    out.scale = 1.0 / t.scale;
    out.rotation = t.rotation.transpose();
    out.translation = -(out.rotation * t.translation) / t.scale;
    return out;
}

Mat3 nearest_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return u * d * v.transpose();
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
    const Mat3 rel = a.transpose() * b;
    // atan2 form keeps precision near zero where acos((tr-1)/2) loses it.
    const Vec3 axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
    const double s = 0.5 * axis.norm();
    const double c = 0.5 * (rel.trace() - 1.0);
    return std::atan2(s, c);
}

PointCloud apply_transform(const PointCloud& cloud, const SimilarityTransform& t) {
    PointCloud out = cloud;
    for (auto& p : out.points) p = t.apply(p);
    for (std::size_t i = 0; i < out.normals.size(); ++i)
        if (cloud.normal_ok(i)) out.normals[i] = t.apply_direction(out.normals[i]);
    return out;
}

}  // namespace regbench
