#include "regbench/icp.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cctype>
#include <cmath>

#include "regbench/error.h"
#include "regbench/kdtree.h"
#include "regbench/matching.h"
#include "regbench/parallel.h"

namespace regbench {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

constexpr const char* kParameterNames[6] = {"rx", "ry", "rz", "tx", "ty", "tz"};

Mat3 skew(const Vec3& w) {
    Mat3 m;
    m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return m;
}

}  // namespace

std::string_view to_string(IcpVariant variant) {
    return variant == IcpVariant::PointToPoint ? "point-to-point" : "point-to-plane";
}

std::optional<IcpVariant> parse_icp_variant(std::string_view name) {
    std::string lower(name);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "point-to-point" || lower == "p2p") return IcpVariant::PointToPoint;
    if (lower == "point-to-plane" || lower == "p2l") return IcpVariant::PointToPlane;
    return std::nullopt;
}

IcpParams default_icp_params(IcpVariant variant, double resolution) {
    IcpParams p;
    p.variant = variant;
    p.max_correspondence_distance = 10.0 * resolution;
    return p;
}

SimilarityTransform solve_point_to_point(std::span<const PointPair> pairs) {
    std::vector<Vec3> s, t;
    s.reserve(pairs.size());
    t.reserve(pairs.size());
    for (const auto& p : pairs) {
        s.push_back(p.source);
        t.push_back(p.target);
    }
    return estimate_rigid_transform(s, t);
}

double point_to_plane_objective(std::span<const PlanePair> pairs, const SimilarityTransform& t) {
    double sum = 0.0;
    for (const auto& p : pairs) {
        const double r = (t.apply(p.source) - p.target).dot(p.normal);
        sum += r * r;
    }
    return sum;
}

PlaneSolve solve_point_to_plane_constrained(std::span<const PlanePair> pairs) {
    PlaneSolve out;
    if (pairs.empty()) {
        for (int k = 0; k < 6; ++k) {
            out.unconstrained.push_back(Vec6::Unit(k));
            out.unconstrained_names.emplace_back(kParameterNames[k]);
        }
        return out;
    }
    // Linearize about the source centroid so rotations and translations
    // decouple as far as the geometry allows.
    Vec3 center = Vec3::Zero();
    for (const auto& p : pairs) center += p.source;
    center /= static_cast<double>(pairs.size());

    Mat6 a = Mat6::Zero();
    Vec6 b = Vec6::Zero();
    for (const auto& p : pairs) {
        Vec6 j;
        j.head<3>() = (p.source - center).cross(p.normal);
        j.tail<3>() = p.normal;
        const double r0 = (p.source - p.target).dot(p.normal);
        a += j * j.transpose();
        b -= j * r0;
    }
    Eigen::SelfAdjointEigenSolver<Mat6> eig(a);
    const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
    const double tol = 1e-10 * (top > 0.0 ? top : 1.0);
    Vec6 x = Vec6::Zero();
    Eigen::Matrix<double, 6, Eigen::Dynamic> null_basis(6, 0);
    for (int k = 0; k < 6; ++k) {
        const double lambda = eig.eigenvalues()[k];
        const Vec6 v = eig.eigenvectors().col(k);
        if (lambda > tol) {
            x += (v.dot(b) / lambda) * v;
            ++out.rank;
        } else {
            out.unconstrained.push_back(v);
            null_basis.conservativeResize(Eigen::NoChange, null_basis.cols() + 1);
            null_basis.col(null_basis.cols() - 1) = v;
        }
    }
    for (int k = 0; k < 6 && null_basis.cols() > 0; ++k) {
        const Vec6 axis = Vec6::Unit(k);
        const double in_null = (null_basis.transpose() * axis).norm();
        if (in_null > 1.0 - 1e-6) out.unconstrained_names.emplace_back(kParameterNames[k]);
    }

    const Vec3 w = x.head<3>();
    const Mat3 r = nearest_rotation(Mat3::Identity() + skew(w));
    out.transform.rotation = r;
    out.transform.translation = center - r * center + x.tail<3>();
    return out;
}

SimilarityTransform solve_point_to_plane(std::span<const PlanePair> pairs) {
    if (pairs.size() < 6)
        throw_degenerate("point-to-plane solve needs at least 6 pairs, got " +
                         std::to_string(pairs.size()));
    auto solved = solve_point_to_plane_constrained(pairs);
    if (solved.rank < 6) {
        std::string names;
        for (const auto& n : solved.unconstrained_names) names += (names.empty() ? "" : ", ") + n;
        if (names.empty()) names = "a combination of rotation and translation";
        throw_degenerate("point-to-plane system has rank " + std::to_string(solved.rank) +
                         "; unconstrained directions: " + names);
    }
    return solved.transform;
}

IcpResult icp(const PointCloud& source, const PointCloud& target,
              const SimilarityTransform& init, const IcpParams& params) {
    if (source.empty() || target.empty()) throw_invalid("ICP needs non-empty clouds");
    if (params.max_iterations < 1) throw_invalid("ICP max_iterations must be >= 1");
    if (!(params.max_correspondence_distance > 0.0))
        throw_invalid("ICP correspondence distance must be positive");
    if (!(params.transform_epsilon >= 0.0) || !(params.mse_epsilon >= 0.0))
        throw_invalid("ICP thresholds must be non-negative");
    const bool plane = params.variant == IcpVariant::PointToPlane;
    if (plane && !target.has_normals())
        throw_invalid("point-to-plane ICP requires target normals");
    if (!init.is_rigid(1e-9)) throw_invalid("ICP initial transform must be rigid");

    const KdTree tree(target);
    const double gate2 = params.max_correspondence_distance * params.max_correspondence_distance;

    std::vector<std::size_t> match(source.size());
    std::vector<double> match_d2(source.size());
    // Nearest target point for every transformed source point, then a serial
    // pass in source order so the pair list is independent of threading.
    auto correspond = [&](const SimilarityTransform& t, std::vector<std::size_t>& kept) {
        parallel_for(source.size(), [&](std::size_t i) {
            tree.nearest(t.apply(source.points[i]), match[i], match_d2[i]);
        });
        kept.clear();
        double sum = 0.0;
        for (std::size_t i = 0; i < source.size(); ++i) {
            if (!(match_d2[i] <= gate2)) continue;
            if (plane && !target.normal_ok(match[i])) continue;
            kept.push_back(i);
            sum += match_d2[i];
        }
        return kept.empty() ? 0.0 : sum / static_cast<double>(kept.size());
    };

    IcpResult result;
    result.transform = init;
    SimilarityTransform current = init;
    std::vector<std::size_t> kept;
    bool no_pairs = false;

    for (int it = 1; it <= params.max_iterations; ++it) {
        const double mse = correspond(current, kept);
        if (kept.empty()) {
            no_pairs = true;
            break;
        }
        result.per_iteration_mse.push_back(mse);

        SimilarityTransform step;
        try {
            if (plane) {
                std::vector<PlanePair> pairs;
                pairs.reserve(kept.size());
                for (auto i : kept)
                    pairs.push_back({current.apply(source.points[i]), target.points[match[i]],
                                     target.normals[match[i]]});
                step = solve_point_to_plane_constrained(pairs).transform;
            } else {
                std::vector<PointPair> pairs;
                pairs.reserve(kept.size());
                for (auto i : kept)
                    pairs.push_back({current.apply(source.points[i]), target.points[match[i]]});
                step = solve_point_to_point(pairs);
            }
        } catch (const Error&) {
            // Degenerate pair geometry: keep the estimate we have.
            result.iterations_run = it;
            break;
        }

        current = compose(step, current);
        current.rotation = nearest_rotation(current.rotation);
        result.transform = current;
        result.iterations_run = it;

        const double change =
            (step.rotation - Mat3::Identity()).norm() + step.translation.norm();
        const auto n = result.per_iteration_mse.size();
        const bool mse_settled =
            mse == 0.0 ||
            (n >= 2 && std::abs(result.per_iteration_mse[n - 2] - mse) <=
                           params.mse_epsilon * result.per_iteration_mse[n - 2]);
        if (change < params.transform_epsilon || mse_settled) {
            result.converged = true;
            break;
        }
    }

    if (no_pairs && result.per_iteration_mse.empty()) {
        result.converged = false;
        result.final_mse = std::numeric_limits<double>::infinity();
        return result;
    }
    if (no_pairs) result.converged = false;
    const double final_mse = correspond(result.transform, kept);
    result.final_mse = kept.empty() ? std::numeric_limits<double>::infinity() : final_mse;
    if (kept.empty()) result.converged = false;
    return result;
}

}  // namespace regbench
