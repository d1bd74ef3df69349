#include <gtest/gtest.h>

#include <set>

#include "regbench/error.h"
#include "regbench/geometry.h"
#include "regbench/matching.h"
#include "regbench/parallel.h"
#include "regbench/synthetic.h"
#include "test_support.h"

using namespace regbench;

namespace {

DescriptorSet random_descriptors(std::mt19937_64& rng, std::size_t n, double invalid_fraction = 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DescriptorSet d;
    d.kind = DescriptorKind::Fpfh;
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd v(kFpfhLength);
        for (int k = 0; k < kFpfhLength; ++k) v[k] = u(rng);
        d.vectors.push_back(v);
        d.valid.push_back(u(rng) < invalid_fraction ? 0 : 1);
        d.keypoint_indices.push_back(i);
    }
    return d;
}

std::size_t brute_nearest(const Eigen::VectorXd& q, const DescriptorSet& pool) {
    std::size_t best = pool.size();
    double bd = 0.0;
    for (std::size_t j = 0; j < pool.size(); ++j) {
        if (!pool.valid[j]) continue;
        const double d = (pool.vectors[j] - q).norm();
        if (best == pool.size() || d < bd) best = j, bd = d;
    }
    return best;
}

const PointCloud& structured() {
    static const PointCloud c = [] {
        SceneSpec spec = fixtures::small_scene();
        spec.noise_sigma = 0.0005;
        spec.seed = 3;
        return synthesize_scene(spec);
    }();
    return c;
}

}  // namespace

TEST(Match, OneWayEqualsBruteForce) {
    std::mt19937_64 rng(41);
    const auto s = random_descriptors(rng, 60, 0.1), t = random_descriptors(rng, 80, 0.1);
    const auto m = match_descriptors(s, t, false);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < s.size(); ++i) expected += s.valid[i];
    ASSERT_EQ(m.size(), expected);
    for (const auto& c : m) {
        EXPECT_EQ(c.target, brute_nearest(s.vectors[c.source], t));
        EXPECT_NEAR(c.distance, (s.vectors[c.source] - t.vectors[c.target]).norm(), 1e-12);
    }
}

TEST(Match, ReciprocalIsOneToOneAndMutual) {
    std::mt19937_64 rng(42);
    const auto s = random_descriptors(rng, 100), t = random_descriptors(rng, 70);
    const auto m = match_descriptors(s, t, true);
    std::set<std::size_t> seen_s, seen_t;
    for (const auto& c : m) {
        EXPECT_TRUE(seen_s.insert(c.source).second);
        EXPECT_TRUE(seen_t.insert(c.target).second);
        EXPECT_EQ(brute_nearest(s.vectors[c.source], t), c.target);
        EXPECT_EQ(brute_nearest(t.vectors[c.target], s), c.source);
    }
}

TEST(Match, RejectsMismatchedInputs) {
    std::mt19937_64 rng(43);
    auto s = random_descriptors(rng, 5), t = random_descriptors(rng, 5);
    t.kind = DescriptorKind::Shot;
    EXPECT_THROW(match_descriptors(s, t), Error);
    EXPECT_THROW(match_descriptors(DescriptorSet{}, DescriptorSet{}), Error);
}

TEST(Coarse, IdentityTargetGivesIdentity) {
    const PointCloud& c = structured();
    const auto p = default_coarse_params(DetectorKind::Iss3D, DescriptorKind::Shot, compute_resolution(c), 5);
    const auto r = coarse_align(c, c, p);
    EXPECT_LT(fixtures::max_abs_diff(r.transform.rotation, Mat3::Identity()), 1e-6);
    EXPECT_LT(r.transform.translation.norm(), 1e-6);
    EXPECT_EQ(r.inliers.size(), r.correspondences.size());
}

TEST(Coarse, RecoversRotationAndTranslation) {
    const PointCloud& c = structured();
    const double res = compute_resolution(c);
    SimilarityTransform gt = SimilarityTransform::from_axis_angle(Vec3(0.2, -0.5, 1.0), 40.0 * M_PI / 180.0);
    gt.translation = Vec3(0.3, -0.2, 0.5);
    for (auto desc : all_descriptors()) {
        const auto r = coarse_align(c, apply_transform(c, gt), default_coarse_params(DetectorKind::Sift3D, desc, res, 9));
        EXPECT_LT(rotation_angle_between(r.transform.rotation, gt.rotation), M_PI / 180.0) << to_string(desc);
        EXPECT_LT((r.transform.translation - gt.translation).norm(), 0.01) << to_string(desc);
    }
}

TEST(Coarse, DisjointCloudsNeverSilentlyIdentity) {
    std::mt19937_64 rng(44);
    PointCloud a = fixtures::random_cloud(rng, 3000, 0.3);
    PointCloud b = fixtures::random_cloud(rng, 3000, 0.3);
    for (auto& p : b.points) p += Vec3(5.0, 0.0, 0.0);
    const double res = compute_resolution(a);
    auto p = default_coarse_params(DetectorKind::Iss3D, DescriptorKind::Fpfh, res, 1);
    p.features.detector.iss.min_saliency = 0.0;
    try {
        const auto r = coarse_align(a, b, p);
        const bool identity = fixtures::max_abs_diff(r.transform.rotation, Mat3::Identity()) < 1e-9 &&
                              r.transform.translation.norm() < 1e-9;
        EXPECT_FALSE(identity);
        EXPECT_GT(r.rms_residual, 0.0);
    } catch (const Error& e) {
        EXPECT_EQ(e.error_class(), ErrorClass::AlignmentFailed);
    }
}

TEST(Coarse, TooFewCorrespondencesFailsWithDiagnostics) {
    FeatureCloud a, b;
    a.descriptors.kind = b.descriptors.kind = DescriptorKind::Fpfh;
    try {
        estimate_coarse(a, b, RansacParams{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.error_class(), ErrorClass::AlignmentFailed);
        EXPECT_NE(std::string(e.what()).find("0 correspondences"), std::string::npos);
    }
}

TEST(Coarse, DeterministicAcrossThreadCounts) {
    const PointCloud& c = structured();
    const double res = compute_resolution(c);
    const auto gt = SimilarityTransform::from_axis_angle(Vec3::UnitZ(), 0.3);
    const auto p = default_coarse_params(DetectorKind::Sift3D, DescriptorKind::Fpfh, res, 17);
    set_thread_count(1);
    const auto a = coarse_align(c, apply_transform(c, gt), p);
    set_thread_count(4);
    const auto b = coarse_align(c, apply_transform(c, gt), p);
    set_thread_count(0);
    EXPECT_EQ(a.transform.matrix(), b.transform.matrix());
    EXPECT_EQ(a.inliers.size(), b.inliers.size());
}
