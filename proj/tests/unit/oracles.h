#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "regbench/point_cloud.h"

namespace regbench::fixtures {

// Direct transcription of the Darboux-frame pair features.
inline Eigen::VectorXd naive_spfh(const PointCloud& c, std::size_t i, double radius) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(33);
    int pairs = 0;
    auto bin = [](double v, double lo, double hi) {
        int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * 11.0));
        return b < 0 ? 0 : (b > 10 ? 10 : b);
    };
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double d = (c.points[j] - c.points[i]).norm();
        if (j == i || d <= 0.0 || d > radius) continue;
        Vec3 ps = c.points[i], pt = c.points[j], ns = c.normals[i], nt = c.normals[j];
        const Vec3 dir = (pt - ps) / d;
        const double cs = ns.dot(dir), ct = nt.dot(dir);
        const bool tied = std::abs(std::abs(cs) - std::abs(ct)) <= 1e-12;
        if (tied ? -ct > cs : std::acos(std::abs(cs)) > std::acos(std::abs(ct))) {
            std::swap(ps, pt);
            std::swap(ns, nt);
        }
        const Vec3 line = (pt - ps) / d;
        const Vec3 u = ns;
        const Vec3 v = u.cross(line).normalized();
        const Vec3 w = u.cross(v);
        h[bin(v.dot(nt), -1.0, 1.0)] += 1;
        h[11 + bin(u.dot(line), -1.0, 1.0)] += 1;
        h[22 + bin(std::atan2(w.dot(nt), u.dot(nt)), -M_PI, M_PI)] += 1;
        ++pairs;
    }
    return pairs < 2 ? Eigen::VectorXd::Zero(33).eval() : (h * (100.0 / pairs)).eval();
}

inline Eigen::VectorXd naive_fpfh(const PointCloud& c, std::size_t i, double radius) {
    Eigen::VectorXd f = naive_spfh(c, i, radius);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(33);
    int k = 0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double d = (c.points[j] - c.points[i]).norm();
        if (j == i || d <= 0.0 || d > radius) continue;
        acc += naive_spfh(c, j, radius) / d;
        ++k;
    }
    if (k > 0) f += acc / k;
    for (int b = 0; b < 3; ++b) f.segment(b * 11, 11) *= 100.0 / f.segment(b * 11, 11).sum();
    return f;
}

inline void add_patch(PointCloud& c, std::vector<Vec3>& normals, const Vec3& origin, const Vec3& u, const Vec3& v,
               int n, double spacing) {
    const Vec3 normal = u.cross(v).normalized();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            c.points.push_back(origin + i * spacing * u + j * spacing * v);
            normals.push_back(normal);
        }
}

// Three mutually orthogonal plane patches far enough apart that a few
// centimeters of offset never pairs points across patches.
inline PointCloud three_planes() {
    PointCloud c;
    std::vector<Vec3> n;
    add_patch(c, n, Vec3(0, 0, 0), Vec3::UnitX(), Vec3::UnitY(), 40, 0.02);
    add_patch(c, n, Vec3(-0.6, 0, 0.5), Vec3::UnitY(), Vec3::UnitZ(), 40, 0.02);
    add_patch(c, n, Vec3(0, -0.6, 0.5), Vec3::UnitZ(), Vec3::UnitX(), 40, 0.02);
    c.set_normals(n);
    return c;
}

}  // namespace regbench::fixtures
