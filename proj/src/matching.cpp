#include "regbench/matching.h"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <random>

#include "regbench/error.h"
#include "regbench/geometry.h"
#include "regbench/parallel.h"

namespace regbench {

namespace {

/// Index of the nearest valid row of `pool` to `query`, or npos if none.
std::size_t nearest_descriptor(const Eigen::VectorXd& query, const DescriptorSet& pool,
                               double& best_d2) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pool.size(); ++j) {
        if (!pool.valid[j]) continue;
        const double d2 = (pool.vectors[j] - query).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = j;
        }
    }
    return best;
}

}  // namespace

CorrespondenceSet match_descriptors(const DescriptorSet& source, const DescriptorSet& target,
                                    bool reciprocal) {
    if (source.kind != target.kind) throw_invalid("cannot match descriptors of different kinds");
    if (source.size() == 0 || target.size() == 0) throw_invalid("descriptor set is empty");
    if (source.vectors.front().size() != target.vectors.front().size())
        throw_invalid("descriptor length mismatch");

    constexpr auto none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> forward(source.size(), none);
    std::vector<double> forward_d2(source.size(), 0.0);
    parallel_for(source.size(), [&](std::size_t i) {
        if (!source.valid[i]) return;
        forward[i] = nearest_descriptor(source.vectors[i], target, forward_d2[i]);
    });

    std::vector<std::size_t> backward(target.size(), none);
    if (reciprocal) {
        parallel_for(target.size(), [&](std::size_t j) {
            if (!target.valid[j]) return;
            double d2 = 0.0;
            backward[j] = nearest_descriptor(target.vectors[j], source, d2);
        });
    }

    CorrespondenceSet out;
    for (std::size_t i = 0; i < source.size(); ++i) {
        const auto j = forward[i];
        if (j == none) continue;
        if (reciprocal && backward[j] != i) continue;
        out.push_back({i, j, std::sqrt(forward_d2[i])});
    }
    return out;
}

SimilarityTransform estimate_rigid_transform(std::span<const Vec3> source,
                                             std::span<const Vec3> target,
                                             std::span<const double> weights) {
    if (source.size() != target.size()) throw_invalid("correspondence lists differ in length");
    if (!weights.empty() && weights.size() != source.size())
        throw_invalid("weight list length mismatch");
    if (source.size() < 3)
        throw_degenerate("rigid fit needs at least 3 correspondences, got " +
                         std::to_string(source.size()));

    double wsum = 0.0;
    Vec3 src_mean = Vec3::Zero();
    Vec3 tgt_mean = Vec3::Zero();
    for (std::size_t i = 0; i < source.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (!(w >= 0.0)) throw_invalid("weights must be non-negative");
        wsum += w;
        src_mean += w * source[i];
        tgt_mean += w * target[i];
    }
    if (!(wsum > 0.0)) throw_degenerate("all correspondence weights are zero");
    src_mean /= wsum;
    tgt_mean /= wsum;

    Mat3 spread = Mat3::Zero();
    Mat3 cross = Mat3::Zero();
    for (std::size_t i = 0; i < source.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const Vec3 ps = source[i] - src_mean;
        const Vec3 pt = target[i] - tgt_mean;
        spread += w * ps * ps.transpose();
        cross += w * ps * pt.transpose();
    }
    const auto eig = eigen_descending(spread);
    if (!(eig.values[0] > 0.0)) throw_degenerate("source correspondences are coincident");
    if (!(eig.values[1] > 1e-12 * eig.values[0]))
        throw_degenerate("source correspondences are collinear");

    Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3& u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;

    SimilarityTransform out;
    out.rotation = v * d * u.transpose();
    out.translation = tgt_mean - out.rotation * src_mean;
    return out;
}

FeatureParams default_feature_params(DetectorKind detector, DescriptorKind descriptor,
                                     double resolution) {
    FeatureParams p;
    p.detector = default_detector_config(detector, resolution);
    p.descriptor = descriptor;
    p.descriptor_radius = 0.04;
    p.normal_radius = 4.0 * resolution;
    return p;
}

FeatureCloud compute_features(const PointCloud& cloud, const FeatureParams& params,
                              bool reuse_normals) {
    FeatureCloud f;
    if (reuse_normals && cloud.has_normals()) {
        f.cloud = cloud;
    } else {
        f.cloud = estimate_normals(cloud, params.normal_radius, params.viewpoint);
    }
    f.keypoints = detect(f.cloud, params.detector);
    f.descriptors = describe(params.descriptor, f.cloud, f.keypoints, params.descriptor_radius);
    f.keypoint_positions = f.keypoints.positions(f.cloud);
    return f;
}

CoarseAlignment estimate_coarse(const FeatureCloud& source, const FeatureCloud& target,
                                const RansacParams& params) {
    if (params.trials < 1) throw_invalid("sample consensus needs at least one trial");
    if (!(params.inlier_threshold > 0.0)) throw_invalid("inlier threshold must be positive");

    CoarseAlignment out;
    if (source.descriptors.size() > 0 && target.descriptors.size() > 0)
        out.correspondences = match_descriptors(source.descriptors, target.descriptors, true);
    const auto& corr = out.correspondences;
    if (corr.size() < 3)
        throw Error(ErrorClass::AlignmentFailed,
                    "coarse alignment found " + std::to_string(corr.size()) +
                        " correspondences (source keypoints " +
                        std::to_string(source.keypoints.size()) + ", target keypoints " +
                        std::to_string(target.keypoints.size()) + "); need at least 3");

    std::vector<Vec3> src(corr.size()), tgt(corr.size());
    for (std::size_t c = 0; c < corr.size(); ++c) {
        src[c] = source.keypoint_positions[corr[c].source];
        tgt[c] = target.keypoint_positions[corr[c].target];
    }
    const double thr2 = params.inlier_threshold * params.inlier_threshold;
    auto count_inliers = [&](const SimilarityTransform& t) {
        int n = 0;
        for (std::size_t c = 0; c < corr.size(); ++c)
            if ((t.apply(src[c]) - tgt[c]).squaredNorm() <= thr2) ++n;
        return n;
    };

    const auto n = static_cast<std::uint64_t>(corr.size());
    std::vector<int> score(params.trials, 0);
    std::vector<SimilarityTransform> hypothesis(params.trials);
    parallel_for(static_cast<std::size_t>(params.trials), [&](std::size_t trial) {
        std::mt19937_64 rng(derive_seed(params.seed, trial));
        std::size_t pick[3];
        pick[0] = rng() % n;
        do pick[1] = rng() % n; while (pick[1] == pick[0]);
        do pick[2] = rng() % n; while (pick[2] == pick[0] || pick[2] == pick[1]);
        const Vec3 s[3] = {src[pick[0]], src[pick[1]], src[pick[2]]};
        const Vec3 t[3] = {tgt[pick[0]], tgt[pick[1]], tgt[pick[2]]};
        try {
            hypothesis[trial] = estimate_rigid_transform(s, t);
        } catch (const Error&) {
            return;
        }
        score[trial] = count_inliers(hypothesis[trial]);
    });

    std::size_t best = 0;
    for (std::size_t trial = 1; trial < score.size(); ++trial)
        if (score[trial] > score[best]) best = trial;
    if (score[best] < std::max(3, params.min_inliers))
        throw Error(ErrorClass::AlignmentFailed,
                    "coarse alignment consensus too small: best trial has " +
                        std::to_string(score[best]) + " inliers of " +
                        std::to_string(corr.size()) + " correspondences (need " +
                        std::to_string(std::max(3, params.min_inliers)) + ")");

    auto inliers_of = [&](const SimilarityTransform& t) {
        std::vector<std::size_t> ids;
        for (std::size_t c = 0; c < corr.size(); ++c)
            if ((t.apply(src[c]) - tgt[c]).squaredNorm() <= thr2) ids.push_back(c);
        return ids;
    };
    auto refit = [&](const std::vector<std::size_t>& ids) {
        std::vector<Vec3> s, t;
        for (auto c : ids) {
            s.push_back(src[c]);
            t.push_back(tgt[c]);
        }
        return estimate_rigid_transform(s, t);
    };

    auto ids = inliers_of(hypothesis[best]);
    SimilarityTransform refined;
    try {
        refined = refit(ids);
    } catch (const Error& e) {
        throw Error(ErrorClass::AlignmentFailed,
                    std::string("coarse alignment refit failed: ") + e.what());
    }
    auto refined_ids = inliers_of(refined);
    if (refined_ids.size() < ids.size()) {
        // The refit lost support; keep the consensus hypothesis.
        refined = hypothesis[best];
        refined_ids = ids;
    }

    out.transform = refined;
    double sum = 0.0;
    for (auto c : refined_ids) {
        out.inliers.push_back(corr[c]);
        sum += (refined.apply(src[c]) - tgt[c]).squaredNorm();
    }
    out.rms_residual = std::sqrt(sum / static_cast<double>(refined_ids.size()));
    return out;
}

CoarseParams default_coarse_params(DetectorKind detector, DescriptorKind descriptor,
                                   double resolution, std::uint64_t seed) {
    CoarseParams p;
    p.features = default_feature_params(detector, descriptor, resolution);
    p.ransac.inlier_threshold = 3.0 * resolution;
    p.ransac.seed = seed;
    return p;
}

CoarseAlignment coarse_align(const PointCloud& source, const PointCloud& target,
                             const CoarseParams& params) {
    if (source.empty() || target.empty()) throw_invalid("coarse alignment needs non-empty clouds");
    const auto src = compute_features(source, params.features);
    const auto tgt = compute_features(target, params.features);
    return estimate_coarse(src, tgt, params.ransac);
}

}  // namespace regbench
