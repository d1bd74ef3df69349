#include <gtest/gtest.h>

#include "regbench/error.h"
#include "regbench/matching.h"
#include "regbench/transform.h"
#include "test_support.h"

using namespace regbench;

namespace {

std::vector<Vec3> apply_all(const SimilarityTransform& t, const std::vector<Vec3>& pts) {
    std::vector<Vec3> out;
    for (const auto& p : pts) out.push_back(t.apply(p));
    return out;
}

// Residual of the best translation for a fixed rotation: the centroids are
// aligned, which is optimal for any R.
double residual_for(const Mat3& r, const std::vector<Vec3>& src, const std::vector<Vec3>& tgt) {
    Vec3 cs = Vec3::Zero(), ct = Vec3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        cs += src[i];
        ct += tgt[i];
    }
    cs /= static_cast<double>(src.size());
    ct /= static_cast<double>(src.size());
    double s = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) s += (r * (src[i] - cs) - (tgt[i] - ct)).squaredNorm();
    return s;
}

// Rotation search without any decomposition: random restarts, then a
// shrinking local search with axis-angle steps.
double grid_search_min(const std::vector<Vec3>& src, const std::vector<Vec3>& tgt, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Mat3 best = Mat3::Identity();
    double best_r = residual_for(best, src, tgt);
    for (int i = 0; i < 4000; ++i) {
        const Mat3 r = fixtures::random_rigid(rng, M_PI, 0.0).rotation;
        const double v = residual_for(r, src, tgt);
        if (v < best_r) best_r = v, best = r;
    }
    for (double step = 0.3; step > 1e-7; step *= 0.7) {
        for (int it = 0; it < 60; ++it) {
            const Mat3 r = Eigen::AngleAxisd(step, fixtures::random_unit(rng)).toRotationMatrix() * best;
            const double v = residual_for(r, src, tgt);
            if (v < best_r) best_r = v, best = r;
        }
    }
    return best_r;
}

}  // namespace

TEST(Transform, ComposeAndInvert) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        SimilarityTransform a = fixtures::random_rigid(rng), b = fixtures::random_rigid(rng);
        a.scale = 0.5 + i * 0.05;
        const Vec3 p = fixtures::random_unit(rng) * 0.7;
        EXPECT_LT((compose(a, b).apply(p) - a.apply(b.apply(p))).norm(), 1e-12);
        EXPECT_LT((invert(a).apply(a.apply(p)) - p).norm(), 1e-12);
    }
}

TEST(Transform, ValidateRejectsNonRotation) {
    SimilarityTransform t;
    t.rotation(0, 0) = -1.0;  // reflection
    EXPECT_THROW(t.validate(), Error);
    t = SimilarityTransform::from_scale(0.0);
    EXPECT_THROW(t.validate(), Error);
}

TEST(Transform, NearestRotationIsProper) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Mat3 m;
        for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = n(rng);
        const Mat3 r = nearest_rotation(m);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
        EXPECT_LT(fixtures::max_abs_diff(r * r.transpose(), Mat3::Identity()), 1e-12);
    }
}

TEST(Transform, RotationAngleBetween) {
    const Mat3 a = SimilarityTransform::from_axis_angle(Vec3(1, 2, 3), 0.3).rotation;
    const Mat3 b = SimilarityTransform::from_axis_angle(Vec3(1, 2, 3), 1.0).rotation;
    EXPECT_NEAR(rotation_angle_between(a, b), 0.7, 1e-14);
    EXPECT_NEAR(rotation_angle_between(a, a), 0.0, 1e-15);
}

TEST(RigidFit, IdentityForEqualSets) {
    std::mt19937_64 rng(3);
    const auto pts = fixtures::random_cloud(rng, 20).points;
    const auto t = estimate_rigid_transform(pts, pts);
    EXPECT_LT(fixtures::max_abs_diff(t.rotation, Mat3::Identity()), 1e-12);
    EXPECT_LT(t.translation.norm(), 1e-12);
}

TEST(RigidFit, RecoversFourPointGroundTruth) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
        const auto gt = fixtures::random_rigid(rng);
        const auto src = fixtures::random_cloud(rng, 4).points;
        const auto t = estimate_rigid_transform(src, apply_all(gt, src));
        EXPECT_LT(rotation_angle_between(t.rotation, gt.rotation), 1e-9);
        EXPECT_LT((t.translation - gt.translation).norm(), 1e-12);
    }
}

TEST(RigidFit, WeightsSelectTheWeightedSubset) {
    std::mt19937_64 rng(5);
    const auto gt = fixtures::random_rigid(rng);
    const auto src = fixtures::random_cloud(rng, 10).points;
    auto tgt = apply_all(gt, src);
    std::vector<double> w(10, 1.0);
    for (int i = 0; i < 3; ++i) {
        tgt[i] += Vec3(5, -3, 2);
        w[i] = 0.0;
    }
    const auto t = estimate_rigid_transform(src, tgt, w);
    EXPECT_LT(rotation_angle_between(t.rotation, gt.rotation), 1e-9);
}

TEST(RigidFit, ReflectionStillReturnsProperRotationAtGlobalMinimum) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 5; ++i) {
        const auto src = fixtures::random_cloud(rng, 8).points;
        std::vector<Vec3> tgt;
        for (const auto& p : src) tgt.emplace_back(-p.x(), p.y(), p.z());
        const auto t = estimate_rigid_transform(src, tgt);
        EXPECT_NEAR(t.rotation.determinant(), 1.0, 1e-12);
        const double ours = residual_for(t.rotation, src, tgt);
        const double oracle = grid_search_min(src, tgt, 100 + i);
        EXPECT_NEAR(ours, oracle, 1e-3);
        EXPECT_LE(ours, oracle + 1e-9);
    }
}

TEST(RigidFit, ResidualIsGlobalMinimumOverSampledRotations) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int i = 0; i < 5; ++i) {
        const auto gt = fixtures::random_rigid(rng);
        const auto src = fixtures::random_cloud(rng, 12).points;
        auto tgt = apply_all(gt, src);
        for (auto& q : tgt) q += Vec3(noise(rng), noise(rng), noise(rng));
        const auto t = estimate_rigid_transform(src, tgt);
        const double ours = residual_for(t.rotation, src, tgt);
        for (int k = 0; k < 2000; ++k) {
            const Mat3 r = fixtures::random_rigid(rng, 0.2, 0.0).rotation * t.rotation;
            ASSERT_GE(residual_for(r, src, tgt), ours - 1e-9);
        }
    }
}

TEST(RigidFit, DegenerateInputs) {
    const std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    EXPECT_THROW(estimate_rigid_transform(two, two), Error);
    const std::vector<Vec3> line = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
    try {
        estimate_rigid_transform(line, line);
        FAIL() << "collinear input accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.error_class(), ErrorClass::DegenerateGeometry);
    }
    const std::vector<Vec3> same(5, Vec3(1, 1, 1));
    EXPECT_THROW(estimate_rigid_transform(same, same), Error);
}
