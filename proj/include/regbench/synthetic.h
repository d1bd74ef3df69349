#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "regbench/point_cloud.h"
#include "regbench/transform.h"

namespace regbench {

enum class PrimitiveKind { Plane, Box, Sphere, Cylinder };

/// A surface in its local frame, placed by `pose` (rigid):
///   Plane    - rectangle extent.x by extent.y in local z = 0, normal +z
///   Box      - full side lengths extent.x, extent.y, extent.z, centered
///   Sphere   - radius extent.x, centered
///   Cylinder - radius extent.x, height extent.z, axis local z, centered,
///              with both caps
/// A plane with `clips` set removes every other primitive's samples lying
/// on its back side (local z < 0), which is how objects are sunk into a
/// floor or walls bound a room.
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::Plane;
    SimilarityTransform pose;
    Vec3 extent = Vec3::Zero();
    bool clips = false;
    int palette = 0;
};

enum class ColorPattern { None, Checker, Gradient };

std::string_view to_string(ColorPattern pattern);
std::optional<ColorPattern> parse_color_pattern(std::string_view name);

struct SceneSpec {
    std::vector<Primitive> primitives;
    double spacing = 0.01;
    double noise_sigma = 0.0;
    ColorPattern pattern = ColorPattern::None;
    double checker_cell = 0.1;
    std::uint64_t seed = 0;
};

/// Samples every primitive surface on a regular grid of the given spacing
/// (a side of length L gets floor(L / spacing) + 1 samples), drops samples
/// inside other solids or behind clipping planes, adds isotropic Gaussian
/// noise and colors points by the pattern evaluated at the noiseless
/// position. Throws InvalidInput for a bad spacing / sigma or a zero-area
/// primitive. Deterministic in the scene description and its seed.
PointCloud synthesize_scene(const SceneSpec& spec);

/// Same as synthesize_scene but with the sampling lattice shifted by a
/// seeded sub-spacing offset, so two calls with different `resample_seed`
/// give different samples of the same surfaces.
PointCloud synthesize_scene_resampled(const SceneSpec& spec, std::uint64_t resample_seed);

/// Camera path for multi-view capture. Cameras sit on a horizontal circle of
/// `path_radius` around `center`, camera k facing outward at azimuth
/// k * 360 / count degrees and tilted down by `tilt_deg`. Camera frame: x right,
/// y down, z forward.
struct ViewSpec {
    int count = 8;
    Vec3 center = Vec3(0.0, 0.0, 0.5);
    double path_radius = 0.0;
    double horizontal_fov_deg = 90.0;
    double vertical_fov_deg = 70.0;
    double tilt_deg = 25.0;
    double min_range = 0.05;
};

/// Camera-to-world pose of camera k.
SimilarityTransform view_pose(const ViewSpec& views, int k);

/// True when the world point lies in the frustum of the camera at `pose`.
bool in_frustum(const ViewSpec& views, const SimilarityTransform& pose, const Vec3& world);

struct SyntheticView {
    PointCloud cloud;              // camera frame
    SimilarityTransform pose;      // camera -> world, exact
};

/// Independently resampled (fresh lattice offset and noise per view) and
/// frustum-clipped views of the scene.
std::vector<SyntheticView> synthesize_views(const SceneSpec& scene, const ViewSpec& views);

/// Square room (floor plus four clipping walls) with a seeded arrangement of
/// boxes, spheres and cylinders partly sunk into the floor, checker colored.
/// The room spans [-size/2, size/2]^2 x [0, wall_height].
struct RoomOptions {
    double size = 1.6;
    double wall_height = 0.8;
    int objects = 10;
    double spacing = 0.01;
    double noise_sigma = 0.002;
};
SceneSpec room_scene(std::uint64_t seed, const RoomOptions& options = {});

/// Perturbs every point by N(0, sigma) along its normal when the normal is
/// valid and isotropically otherwise. Colors and other channels are kept.
PointCloud perturb_along_normals(const PointCloud& cloud, double sigma, std::uint64_t seed);

}  // namespace regbench
