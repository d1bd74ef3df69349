#include "regbench/geometry.h"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "regbench/error.h"
#include "regbench/parallel.h"

namespace regbench {

SymmetricEigen3 eigen_descending(const Mat3& symmetric) {
    Eigen::SelfAdjointEigenSolver<Mat3> solver(symmetric);
    // Eigen sorts ascending.
    SymmetricEigen3 out;
    for (int i = 0; i < 3; ++i) {
        out.values[i] = solver.eigenvalues()[2 - i];
        out.vectors.col(i) = solver.eigenvectors().col(2 - i);
    }
    return out;
}

double compute_resolution(const PointCloud& cloud) {
    if (cloud.size() < 2) throw_invalid("resolution needs at least 2 points");
    const KdTree index(cloud);
    return compute_resolution(cloud, index);
}

double compute_resolution(const PointCloud& cloud, const KdTree& index) {
    if (cloud.size() < 2) throw_invalid("resolution needs at least 2 points");
    std::vector<double> nearest(cloud.size(), -1.0);
    parallel_for(cloud.size(), [&](std::size_t i) {
        // Duplicates report distance 0; widen k until a distinct point shows up.
        for (std::size_t k = 2;; k *= 2) {
            const auto res = index.knn(cloud.points[i], k);
            for (double d : res.distances) {
                if (d > 0.0) {
                    nearest[i] = d;
                    return;
                }
            }
            if (res.size() == cloud.size()) return;
        }
    });
    double sum = 0.0;
    std::size_t count = 0;
    for (double d : nearest) {
        if (d < 0.0) continue;
        sum += d;
        ++count;
    }
    if (count == 0) throw_invalid("all points coincide; resolution undefined");
    return sum / static_cast<double>(count);
}

PointCloud estimate_normals(const PointCloud& cloud, double radius, const Vec3& viewpoint) {
    if (cloud.empty()) {
        PointCloud out = cloud;
        out.normals.clear();
        out.normal_valid.clear();
        return out;
    }
    const KdTree index(cloud);
    return estimate_normals(cloud, index, radius, viewpoint);
}

PointCloud estimate_normals(const PointCloud& cloud, const KdTree& index, double radius,
                            const Vec3& viewpoint) {
    if (!(radius > 0.0)) throw_invalid("normal radius must be positive");
    PointCloud out = cloud;
    out.normals.assign(cloud.size(), Vec3::Zero());
    out.normal_valid.assign(cloud.size(), 0);

    parallel_for(cloud.size(), [&](std::size_t i) {
        const Vec3& p = cloud.points[i];
        std::vector<std::pair<double, std::size_t>> nb;
        index.radius_unsorted(p, radius, nb);
        if (nb.size() < 3) return;
        Vec3 mean = Vec3::Zero();
        for (const auto& [d2, j] : nb) mean += cloud.points[j];
        mean /= static_cast<double>(nb.size());
        Mat3 cov = Mat3::Zero();
        for (const auto& [d2, j] : nb) {
            const Vec3 d = cloud.points[j] - mean;
            cov += d * d.transpose();
        }
        cov /= static_cast<double>(nb.size());
        const auto eig = eigen_descending(cov);
        // Rank < 2 (coincident or collinear support) leaves the plane undefined.
        if (!(eig.values[1] > 1e-12 * eig.values[0]) || !(eig.values[0] > 0.0)) return;
        Vec3 n = eig.vectors.col(2).normalized();
        if (n.dot(viewpoint - p) < 0.0) n = -n;
        out.normals[i] = n;
        out.normal_valid[i] = 1;
    });
    return out;
}

double bounding_diagonal(const PointCloud& cloud) {
    if (cloud.empty()) return 0.0;
    Vec3 lo = cloud.points.front();
    Vec3 hi = lo;
    for (const auto& p : cloud.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

}  // namespace regbench
