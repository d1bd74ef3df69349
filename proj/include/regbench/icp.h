#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regbench/point_cloud.h"
#include "regbench/transform.h"

namespace regbench {

enum class IcpVariant { PointToPoint, PointToPlane };

std::string_view to_string(IcpVariant variant);
/// Accepts "point-to-point" / "point-to-plane" (also "p2p" / "p2l").
std::optional<IcpVariant> parse_icp_variant(std::string_view name);

struct IcpParams {
    IcpVariant variant = IcpVariant::PointToPoint;
    int max_iterations = 50;
    /// Pairs farther apart than this are discarded (10 * resolution is the
    /// usual choice; infinity disables the gate).
    double max_correspondence_distance = std::numeric_limits<double>::infinity();
    double transform_epsilon = 1e-8;
    double mse_epsilon = 1e-6;
};

IcpParams default_icp_params(IcpVariant variant, double resolution);

struct IcpResult {
    SimilarityTransform transform;  // maps the original source into the target frame
    int iterations_run = 0;
    double final_mse = 0.0;
    bool converged = false;
    /// MSE of the correspondences found at the start of each iteration.
    std::vector<double> per_iteration_mse;
};

/// Iterative closest point. For PointToPlane the target must carry normals;
/// pairs whose target normal is invalid are skipped. If an iteration finds no
/// pair within the gate, the best transform so far is returned with
/// converged = false.
IcpResult icp(const PointCloud& source, const PointCloud& target,
              const SimilarityTransform& init, const IcpParams& params);

struct PointPair {
    Vec3 source;
    Vec3 target;
};

struct PlanePair {
    Vec3 source;
    Vec3 target;
    Vec3 normal;  // target surface normal, unit length
};

/// Closed-form rigid fit of the pairs (shares estimate_rigid_transform).
SimilarityTransform solve_point_to_point(std::span<const PointPair> pairs);

/// Result of the linearized point-to-plane solve restricted to the directions
/// the pairs constrain. Parameter order is (alpha, beta, gamma, tx, ty, tz):
/// small rotations about x, y, z, then translation.
struct PlaneSolve {
    SimilarityTransform transform;
    int rank = 0;
    std::vector<Eigen::Matrix<double, 6, 1>> unconstrained;  // null-space basis
    std::vector<std::string> unconstrained_names;  // "rx".."tz" where axis-aligned
};

/// Minimizes sum ((R p + t - q) . n)^2 with R ~ I + [w]x, solving the 6x6
/// normal equations in the constrained subspace (no motion along
/// unconstrained directions); the rotation is then projected to the nearest
/// proper rotation.
PlaneSolve solve_point_to_plane_constrained(std::span<const PlanePair> pairs);

/// Full-rank version: throws DegenerateGeometry naming the unconstrained
/// directions when the system has rank < 6 or fewer than 6 pairs are given.
SimilarityTransform solve_point_to_plane(std::span<const PlanePair> pairs);

/// sum over pairs of ((R p + t - q) . n)^2.
double point_to_plane_objective(std::span<const PlanePair> pairs, const SimilarityTransform& t);

}  // namespace regbench
