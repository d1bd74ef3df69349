#include "regbench/synthetic.h"

#include <algorithm>
#include <cctype>
#include <functional>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <unordered_set>

#include "regbench/error.h"
#include "regbench/parallel.h"

namespace regbench {

namespace {

struct Sample {
    Vec3 local;
    std::size_t primitive;
};

struct Phase {
    double u = 0.0;
    double v = 0.0;
    double w = 0.0;  // fraction of a turn for curved surfaces
};

/// Lattice positions covering [-length/2, length/2] with the given offset.
std::vector<double> lattice(double length, double spacing, double offset) {
    std::vector<double> out;
    const double lo = -0.5 * length;
    const double hi = 0.5 * length + 1e-9 * spacing;
    if (offset == 0.0) {
        const auto n = static_cast<std::size_t>(std::floor(length / spacing + 1e-9)) + 1;
        for (std::size_t i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * spacing);
        return out;
    }
    for (double x = lo + offset; x <= hi; x += spacing) out.push_back(x);
    return out;
}

void sample_rectangle(double ex, double ey, double spacing, const Phase& ph,
                      const std::function<void(double, double)>& emit) {
    const auto xs = lattice(ex, spacing, ph.u);
    const auto ys = lattice(ey, spacing, ph.v);
    for (double y : ys)
        for (double x : xs) emit(x, y);
}

void sample_primitive(const Primitive& prim, std::size_t id, double spacing, const Phase& ph,
                      std::vector<Sample>& out) {
    const Vec3& e = prim.extent;
    switch (prim.kind) {
        case PrimitiveKind::Plane:
            sample_rectangle(e.x(), e.y(), spacing, ph,
                             [&](double x, double y) { out.push_back({Vec3(x, y, 0.0), id}); });
            break;
        case PrimitiveKind::Box: {
            const Vec3 h = 0.5 * e;
            for (int s = -1; s <= 1; s += 2) {
                sample_rectangle(e.y(), e.z(), spacing, ph, [&](double a, double b) {
                    out.push_back({Vec3(s * h.x(), a, b), id});
                });
                sample_rectangle(e.x(), e.z(), spacing, ph, [&](double a, double b) {
                    out.push_back({Vec3(a, s * h.y(), b), id});
                });
                sample_rectangle(e.x(), e.y(), spacing, ph, [&](double a, double b) {
                    out.push_back({Vec3(a, b, s * h.z()), id});
                });
            }
            break;
        }
        case PrimitiveKind::Sphere: {
            const double r = e.x();
            const double area = 4.0 * std::numbers::pi * r * r;
            const auto n = std::max<std::size_t>(
                4, static_cast<std::size_t>(std::llround(area / (spacing * spacing))));
            const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
            const double turn = 2.0 * std::numbers::pi * ph.w;
            for (std::size_t i = 0; i < n; ++i) {
                const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
                const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
                const double a = static_cast<double>(i) * golden + turn;
                out.push_back({r * Vec3(rho * std::cos(a), rho * std::sin(a), z), id});
            }
            break;
        }
        case PrimitiveKind::Cylinder: {
            const double r = e.x();
            const double h = e.z();
            const auto m = std::max<std::size_t>(
                3, static_cast<std::size_t>(std::llround(2.0 * std::numbers::pi * r / spacing)));
            for (double z : lattice(h, spacing, ph.v)) {
                for (std::size_t k = 0; k < m; ++k) {
                    const double a =
                        2.0 * std::numbers::pi * (static_cast<double>(k) + ph.w) / static_cast<double>(m);
                    out.push_back({Vec3(r * std::cos(a), r * std::sin(a), z), id});
                }
            }
            for (int s = -1; s <= 1; s += 2) {
                sample_rectangle(2.0 * r, 2.0 * r, spacing, ph, [&](double x, double y) {
                    if (x * x + y * y < r * r) out.push_back({Vec3(x, y, s * 0.5 * h), id});
                });
            }
            break;
        }
    }
}

/// Strictly inside the solid (boxes, spheres, cylinders) or strictly behind
/// a clipping plane.
bool removes(const Primitive& prim, const SimilarityTransform& inverse_pose, const Vec3& world) {
    constexpr double margin = 1e-9;
    const Vec3 q = inverse_pose.apply(world);
    const Vec3& e = prim.extent;
    switch (prim.kind) {
        case PrimitiveKind::Plane:
            return prim.clips && q.z() < -margin;
        case PrimitiveKind::Box:
            return std::abs(q.x()) < 0.5 * e.x() - margin && std::abs(q.y()) < 0.5 * e.y() - margin &&
                   std::abs(q.z()) < 0.5 * e.z() - margin;
        case PrimitiveKind::Sphere:
            return q.norm() < e.x() - margin;
        case PrimitiveKind::Cylinder:
            return q.head<2>().norm() < e.x() - margin && std::abs(q.z()) < 0.5 * e.z() - margin;
    }
    return false;
}

void validate_spec(const SceneSpec& spec) {
    if (!(spec.spacing > 0.0) || !std::isfinite(spec.spacing))
        throw_invalid("scene spacing must be positive");
    if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma))
        throw_invalid("scene noise sigma must be non-negative");
    if (!(spec.checker_cell > 0.0)) throw_invalid("checker cell size must be positive");
    for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
        const auto& p = spec.primitives[i];
        const Vec3& e = p.extent;
        bool ok = e.allFinite();
        switch (p.kind) {
            case PrimitiveKind::Plane: ok = ok && e.x() > 0.0 && e.y() > 0.0; break;
            case PrimitiveKind::Box: ok = ok && e.x() > 0.0 && e.y() > 0.0 && e.z() > 0.0; break;
            case PrimitiveKind::Sphere: ok = ok && e.x() > 0.0; break;
            case PrimitiveKind::Cylinder: ok = ok && e.x() > 0.0 && e.z() > 0.0; break;
        }
        if (!ok) throw_invalid("primitive " + std::to_string(i) + " has zero area");
        if (!p.pose.is_rigid(1e-9)) throw_invalid("primitive " + std::to_string(i) + " pose is not rigid");
    }
}

const Rgb kPalette[8] = {{180, 180, 175}, {200, 170, 120}, {200, 60, 50},  {60, 140, 200},
                         {80, 170, 80},   {220, 200, 60},  {150, 90, 170}, {230, 130, 40}};

Rgb scaled_color(const Rgb& c, double f) {
    auto s = [f](std::uint8_t v) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(v * f), 0L, 255L));
    };
    return {s(c.r), s(c.g), s(c.b)};
}

PointCloud synthesize(const SceneSpec& spec, const std::vector<Phase>& phases,
                      std::uint64_t noise_seed) {
    validate_spec(spec);
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < spec.primitives.size(); ++i)
        sample_primitive(spec.primitives[i], i, spec.spacing, phases[i], samples);

    std::vector<SimilarityTransform> inverse;
    for (const auto& p : spec.primitives) inverse.push_back(invert(p.pose));

    std::vector<Vec3> world(samples.size());
    std::vector<std::uint8_t> keep(samples.size(), 1);
    parallel_for(samples.size(), [&](std::size_t s) {
        const auto& smp = samples[s];
        world[s] = spec.primitives[smp.primitive].pose.apply(smp.local);
        for (std::size_t j = 0; j < spec.primitives.size(); ++j) {
            if (j == smp.primitive) continue;
            if (removes(spec.primitives[j], inverse[j], world[s])) {
                keep[s] = 0;
                break;
            }
        }
    });

    // Shared edges (box faces, room corners) produce coincident samples.
    struct Key {
        long long x, y, z;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            return static_cast<std::size_t>(derive_seed(static_cast<std::uint64_t>(k.x),
                                                        static_cast<std::uint64_t>(k.y),
                                                        static_cast<std::uint64_t>(k.z)));
        }
    };
    const double quantum = 1e-7;
    std::unordered_set<Key, KeyHash> seen;
    std::vector<std::size_t> order;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        if (!keep[s]) continue;
        const Key k{std::llround(world[s].x() / quantum), std::llround(world[s].y() / quantum),
                    std::llround(world[s].z() / quantum)};
        if (seen.insert(k).second) order.push_back(s);
    }

    PointCloud cloud;
    cloud.points.reserve(order.size());
    double zmin = std::numeric_limits<double>::infinity();
    double zmax = -zmin;
    for (auto s : order) {
        zmin = std::min(zmin, world[s].z());
        zmax = std::max(zmax, world[s].z());
    }
    const double cell = spec.checker_cell;
    if (spec.pattern != ColorPattern::None) cloud.colors.reserve(order.size());
    for (auto s : order) {
        const Vec3& p = world[s];
        cloud.points.push_back(p);
        const Rgb base = kPalette[static_cast<std::size_t>(spec.primitives[samples[s].primitive].palette) % 8];
        if (spec.pattern == ColorPattern::Checker) {
            const auto parity = static_cast<long long>(std::floor(p.x() / cell + 0.25)) +
                                static_cast<long long>(std::floor(p.y() / cell + 0.25)) +
                                static_cast<long long>(std::floor(p.z() / cell + 0.25));
            cloud.colors.push_back((parity & 1) ? scaled_color(base, 0.35) : base);
        } else if (spec.pattern == ColorPattern::Gradient) {
            const double t = zmax > zmin ? (p.z() - zmin) / (zmax - zmin) : 0.0;
            cloud.colors.push_back(scaled_color(base, 0.3 + 0.7 * t));
        }
    }
    if (spec.noise_sigma > 0.0) {
        std::mt19937_64 rng(noise_seed);
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (auto& p : cloud.points) {
            const double dx = noise(rng);
            const double dy = noise(rng);
            const double dz = noise(rng);
            p += Vec3(dx, dy, dz);
        }
    }
    return cloud;
}

}  // namespace

std::string_view to_string(ColorPattern pattern) {
    switch (pattern) {
        case ColorPattern::None: return "none";
        case ColorPattern::Checker: return "checker";
        case ColorPattern::Gradient: return "gradient";
    }
    return "none";
}

std::optional<ColorPattern> parse_color_pattern(std::string_view name) {
    std::string lower(name);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "none") return ColorPattern::None;
    if (lower == "checker") return ColorPattern::Checker;
    if (lower == "gradient") return ColorPattern::Gradient;
    return std::nullopt;
}

PointCloud synthesize_scene(const SceneSpec& spec) {
    return synthesize(spec, std::vector<Phase>(spec.primitives.size()), derive_seed(spec.seed, 0));
}

PointCloud synthesize_scene_resampled(const SceneSpec& spec, std::uint64_t resample_seed) {
    std::vector<Phase> phases(spec.primitives.size());
    for (std::size_t i = 0; i < phases.size(); ++i) {
        std::mt19937_64 rng(derive_seed(resample_seed, i, 1));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        // Offsets bounded away from zero so the shifted lattice never takes
        // the exact-count branch.
        phases[i].u = spec.spacing * (0.05 + 0.9 * unit(rng));
        phases[i].v = spec.spacing * (0.05 + 0.9 * unit(rng));
        phases[i].w = 0.05 + 0.9 * unit(rng);
    }
    return synthesize(spec, phases, derive_seed(spec.seed, resample_seed, 2));
}

SimilarityTransform view_pose(const ViewSpec& views, int k) {
    if (views.count < 1) throw_invalid("view count must be positive");
    const double yaw = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(views.count);
    const double tilt = views.tilt_deg * std::numbers::pi / 180.0;
    const Vec3 heading(std::cos(yaw), std::sin(yaw), 0.0);
    const Vec3 forward = std::cos(tilt) * heading + std::sin(tilt) * Vec3(0.0, 0.0, -1.0);
    const Vec3 right(std::sin(yaw), -std::cos(yaw), 0.0);
    const Vec3 down = forward.cross(right);
    SimilarityTransform pose;
    pose.rotation.col(0) = right;
    pose.rotation.col(1) = down;
    pose.rotation.col(2) = forward;
    pose.translation = views.center + views.path_radius * heading;
    return pose;
}

bool in_frustum(const ViewSpec& views, const SimilarityTransform& pose, const Vec3& world) {
    const Vec3 q = pose.rotation.transpose() * (world - pose.translation);
    if (!(q.z() > views.min_range)) return false;
    const double th = std::tan(0.5 * views.horizontal_fov_deg * std::numbers::pi / 180.0);
    const double tv = std::tan(0.5 * views.vertical_fov_deg * std::numbers::pi / 180.0);
    return std::abs(q.x()) <= q.z() * th && std::abs(q.y()) <= q.z() * tv;
}

std::vector<SyntheticView> synthesize_views(const SceneSpec& scene, const ViewSpec& views) {
    if (views.count < 1) throw_invalid("view count must be positive");
    if (!(views.horizontal_fov_deg > 0.0 && views.horizontal_fov_deg < 180.0) ||
        !(views.vertical_fov_deg > 0.0 && views.vertical_fov_deg < 180.0))
        throw_invalid("field of view must lie in (0, 180) degrees");
    std::vector<SyntheticView> out;
    for (int k = 0; k < views.count; ++k) {
        const PointCloud world =
            synthesize_scene_resampled(scene, derive_seed(scene.seed, 1000 + static_cast<std::uint64_t>(k)));
        SyntheticView v;
        v.pose = view_pose(views, k);
        std::vector<std::size_t> inside;
        for (std::size_t i = 0; i < world.size(); ++i)
            if (in_frustum(views, v.pose, world.points[i])) inside.push_back(i);
        v.cloud = apply_transform(world.select(inside), invert(v.pose));
        out.push_back(std::move(v));
    }
    return out;
}

SceneSpec room_scene(std::uint64_t seed, const RoomOptions& options) {
    if (!(options.size > 0.0) || !(options.wall_height > 0.0))
        throw_invalid("room dimensions must be positive");
    SceneSpec spec;
    spec.spacing = options.spacing;
    spec.noise_sigma = options.noise_sigma;
    spec.pattern = ColorPattern::Checker;
    spec.seed = seed;
    const double half = 0.5 * options.size;

    Primitive floor;
    floor.kind = PrimitiveKind::Plane;
    floor.extent = Vec3(options.size, options.size, 0.0);
    floor.clips = true;
    floor.palette = 0;
    spec.primitives.push_back(floor);

    const Vec3 up(0.0, 0.0, 1.0);
    for (int w = 0; w < 4; ++w) {
        const double a = 0.5 * std::numbers::pi * w;
        const Vec3 outward(std::cos(a), std::sin(a), 0.0);
        const Vec3 normal = -outward;
        Primitive wall;
        wall.kind = PrimitiveKind::Plane;
        wall.extent = Vec3(options.size, options.wall_height, 0.0);
        wall.clips = true;
        wall.palette = 1;
        wall.pose.rotation.col(0) = up.cross(normal);
        wall.pose.rotation.col(1) = up;
        wall.pose.rotation.col(2) = normal;
        wall.pose.translation = half * outward + 0.5 * options.wall_height * up;
        spec.primitives.push_back(wall);
    }

    std::mt19937_64 rng(derive_seed(seed, 77));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    const double margin = 0.15;
    for (int i = 0; i < options.objects; ++i) {
        Vec3 c;
        do {
            c = Vec3(uniform(-half + margin, half - margin), uniform(-half + margin, half - margin), 0.0);
        } while (c.head<2>().norm() < 0.3);
        Primitive obj;
        obj.palette = 2 + static_cast<int>(unit(rng) * 6.0) % 6;
        const double yaw = uniform(0.0, 2.0 * std::numbers::pi);
        const double sink = uniform(0.02, 0.05);
        const int type = static_cast<int>(unit(rng) * 3.0) % 3;
        if (type == 0) {
            obj.kind = PrimitiveKind::Box;
            obj.extent = Vec3(uniform(0.1, 0.3), uniform(0.1, 0.3), uniform(0.1, 0.35));
            c.z() = 0.5 * obj.extent.z() - sink;
        } else if (type == 1) {
            obj.kind = PrimitiveKind::Sphere;
            obj.extent = Vec3(uniform(0.06, 0.15), 0.0, 0.0);
            c.z() = obj.extent.x() - sink;
        } else {
            obj.kind = PrimitiveKind::Cylinder;
            obj.extent = Vec3(uniform(0.05, 0.12), 0.0, uniform(0.15, 0.4));
            c.z() = 0.5 * obj.extent.z() - sink;
        }
        obj.pose = SimilarityTransform::from_axis_angle(Vec3(0.0, 0.0, 1.0), yaw);
        obj.pose.translation = c;
        spec.primitives.push_back(obj);
    }
    return spec;
}

PointCloud perturb_along_normals(const PointCloud& cloud, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw_invalid("noise sigma must be non-negative");
    PointCloud out = cloud;
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (cloud.normal_ok(i)) {
            out.points[i] += noise(rng) * cloud.normals[i];
        } else {
            const double dx = noise(rng);
            const double dy = noise(rng);
            const double dz = noise(rng);
            out.points[i] += Vec3(dx, dy, dz);
        }
    }
    return out;
}

}  // namespace regbench
