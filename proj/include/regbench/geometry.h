#pragma once

#include "regbench/kdtree.h"
#include "regbench/point_cloud.h"
#include "regbench/transform.h"

namespace regbench {

/// Mean distance from each point to its nearest distinct point. Points whose
/// every neighbor coincides with them are skipped.
double compute_resolution(const PointCloud& cloud);
double compute_resolution(const PointCloud& cloud, const KdTree& index);

/// PCA normals over radius neighborhoods (query point included). A normal is
/// the eigenvector of the smallest covariance eigenvalue, oriented so that
/// n . (viewpoint - p) >= 0. Fewer than 3 neighbors or a rank < 2 covariance
/// marks the normal invalid; the point itself is kept.
PointCloud estimate_normals(const PointCloud& cloud, double radius,
                            const Vec3& viewpoint = Vec3::Zero());
PointCloud estimate_normals(const PointCloud& cloud, const KdTree& index, double radius,
                            const Vec3& viewpoint = Vec3::Zero());

/// Eigen-decomposition of a symmetric 3x3 matrix with eigenvalues sorted in
/// descending order; columns of `vectors` match `values`.
struct SymmetricEigen3 {
    Vec3 values;
    Mat3 vectors;
};
SymmetricEigen3 eigen_descending(const Mat3& symmetric);

/// Largest pairwise distance bound: the bounding-box diagonal.
double bounding_diagonal(const PointCloud& cloud);

}  // namespace regbench
