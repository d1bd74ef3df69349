#include "regbench/detectors.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "regbench/error.h"
#include "regbench/geometry.h"
#include "regbench/kdtree.h"
#include "regbench/parallel.h"

namespace regbench {

namespace {

using Neighbors = std::vector<std::pair<double, std::size_t>>;

Neighbors& scratch() {
    thread_local Neighbors buffer;
    return buffer;
}

bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= kResponseTieTolerance * std::max(std::abs(a), std::abs(b));
}

/// a (at index ia) outranks b (at index ib): larger beyond the tie tolerance,
/// or tied and earlier in the cloud.
bool outranks(double a, std::size_t ia, double b, std::size_t ib) {
    if (nearly_equal(a, b)) return ia < ib;
    return a > b;
}

KeypointSet non_max_suppress(DetectorKind kind, const PointCloud& cloud, const KdTree& tree,
                             const std::vector<std::uint8_t>& candidate,
                             const std::vector<double>& response, double radius) {
    std::vector<std::uint8_t> keep(cloud.size(), 0);
    parallel_for(cloud.size(), [&](std::size_t i) {
        if (!candidate[i]) return;
        auto& nb = scratch();
        tree.radius_unsorted(cloud.points[i], radius, nb);
        for (const auto& [d2, j] : nb) {
            if (j == i || !candidate[j]) continue;
            if (outranks(response[j], j, response[i], i)) return;
        }
        keep[i] = 1;
    });
    KeypointSet out;
    out.detector = kind;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!keep[i]) continue;
        out.indices.push_back(i);
        out.responses.push_back(response[i]);
    }
    return out;
}

void require_normals(const PointCloud& cloud, std::string_view who) {
    if (!cloud.has_normals())
        throw_invalid(std::string(who) + " requires a cloud with normals");
}

void require_positive(double value, std::string_view what) {
    if (!(value > 0.0)) throw_invalid(std::string(what) + " must be positive");
}

}  // namespace

std::string_view to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::Harris3D: return "harris3d";
        case DetectorKind::Sift3D: return "sift3d";
        case DetectorKind::Iss3D: return "iss3d";
        case DetectorKind::Susan: return "susan";
    }
    return "unknown";
}

std::optional<DetectorKind> parse_detector(std::string_view name) {
    std::string lower(name);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (auto kind : all_detectors())
        if (lower == to_string(kind)) return kind;
    return std::nullopt;
}

const std::vector<DetectorKind>& all_detectors() {
    static const std::vector<DetectorKind> kinds{DetectorKind::Harris3D, DetectorKind::Sift3D,
                                                 DetectorKind::Iss3D, DetectorKind::Susan};
    return kinds;
}

std::vector<Vec3> KeypointSet::positions(const PointCloud& cloud) const {
    std::vector<Vec3> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(cloud.points.at(i));
    return out;
}

HarrisParams default_harris(double resolution) {
    HarrisParams p;
    p.radius = 6.0 * resolution;
    p.nms_radius = 4.0 * resolution;
    return p;
}

SiftParams default_sift(double resolution) {
    SiftParams p;
    p.min_scale = 2.0 * resolution;
    return p;
}

IssParams default_iss(double resolution) {
    IssParams p;
    p.salient_radius = 6.0 * resolution;
    p.nms_radius = 4.0 * resolution;
    return p;
}

SusanParams default_susan(double resolution) {
    SusanParams p;
    p.radius = 6.0 * resolution;
    p.distance_threshold = resolution;
    return p;
}

double harris_response(const Mat3& c, double k) {
    const double tr = c.trace();
    return c.determinant() - k * tr * tr;
}

// ---------------------------------------------------------------------------
// Harris3D

KeypointSet detect_harris3d(const PointCloud& cloud, const HarrisParams& params) {
    KeypointSet empty_set;
    empty_set.detector = DetectorKind::Harris3D;
    if (cloud.empty()) return empty_set;
    require_normals(cloud, "Harris3D");
    require_positive(params.radius, "Harris radius");
    require_positive(params.nms_radius, "Harris NMS radius");
    if (!(params.k > 0.0 && params.k < 0.25)) throw_invalid("Harris k must lie in (0, 0.25)");

    const KdTree tree(cloud);
    const double sigma = 0.5 * params.radius;
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    std::vector<double> response(cloud.size(), 0.0);
    std::vector<std::uint8_t> candidate(cloud.size(), 0);

    parallel_for(cloud.size(), [&](std::size_t i) {
        if (!cloud.normal_ok(i)) return;
        auto& nb = scratch();
        tree.radius_unsorted(cloud.points[i], params.radius, nb);
        double wsum = 0.0;
        Vec3 mean = Vec3::Zero();
        std::size_t used = 0;
        for (const auto& [d2, j] : nb) {
            if (!cloud.normal_ok(j)) continue;
            const double w = std::exp(-d2 * inv_two_sigma2);
            wsum += w;
            mean += w * cloud.normals[j];
            ++used;
        }
        if (used < 3) return;
        mean /= wsum;
        Mat3 c = Mat3::Zero();
        for (const auto& [d2, j] : nb) {
            if (!cloud.normal_ok(j)) continue;
            const double w = std::exp(-d2 * inv_two_sigma2);
            const Vec3 d = cloud.normals[j] - mean;
            c += w * d * d.transpose();
        }
        response[i] = harris_response(c, params.k);
        candidate[i] = response[i] > params.threshold ? 1 : 0;
    });
    return non_max_suppress(DetectorKind::Harris3D, cloud, tree, candidate, response,
                            params.nms_radius);
}

// ---------------------------------------------------------------------------
// SIFT3D

namespace {

int sift_levels(const SiftParams& params) {
    if (!(params.min_scale > 0.0)) throw_invalid("SIFT min_scale must be positive");
    if (std::abs(params.scale_factor - std::sqrt(2.0)) > 1e-12)
        throw_invalid("SIFT scale factor is fixed to sqrt(2)");
    if (params.octaves < 1 || params.scales_per_octave < 1)
        throw_invalid("SIFT octaves and scales per octave must be positive");
    const int levels = params.octaves * params.scales_per_octave + 1;
    if (levels < 3) throw_invalid("SIFT needs at least 3 Gaussian scales");
    return levels;
}

double sift_sigma(const SiftParams& params, int level) {
    return params.min_scale * std::pow(params.scale_factor, level);
}

}  // namespace

std::vector<double> sift_scalar_field(const PointCloud& cloud, const SiftParams& params) {
    if (cloud.has_intensities()) return cloud.intensities;
    std::vector<double> field(cloud.size(), 0.0);
    if (cloud.has_colors()) {
        for (std::size_t i = 0; i < cloud.size(); ++i) field[i] = luma(cloud.colors[i]);
        return field;
    }
    if (cloud.empty()) return field;
    const KdTree tree(cloud);
    const double radius = 2.0 * params.min_scale;
    parallel_for(cloud.size(), [&](std::size_t i) {
        auto& nb = scratch();
        tree.radius_unsorted(cloud.points[i], radius, nb);
        if (nb.size() < 3) return;
        Vec3 mean = Vec3::Zero();
        for (const auto& [d2, j] : nb) mean += cloud.points[j];
        mean /= static_cast<double>(nb.size());
        Mat3 cov = Mat3::Zero();
        for (const auto& [d2, j] : nb) {
            const Vec3 d = cloud.points[j] - mean;
            cov += d * d.transpose();
        }
        const auto eig = eigen_descending(cov);
        const double total = eig.values.sum();
        if (total > 0.0) field[i] = std::max(0.0, eig.values[2]) / total;
    });
    return field;
}

std::vector<std::vector<double>> sift_dog_stack(const PointCloud& cloud, const SiftParams& params) {
    const int levels = sift_levels(params);
    const auto field = sift_scalar_field(cloud, params);
    std::vector<std::vector<double>> gaussians(levels, std::vector<double>(cloud.size(), 0.0));
    if (cloud.empty()) return std::vector<std::vector<double>>(levels - 1);
    const KdTree tree(cloud);
    for (int j = 0; j < levels; ++j) {
        const double sigma = sift_sigma(params, j);
        const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
        auto& g = gaussians[j];
        parallel_for(cloud.size(), [&](std::size_t i) {
            auto& nb = scratch();
            tree.radius_unsorted(cloud.points[i], 3.0 * sigma, nb);
            double wsum = 0.0;
            double acc = 0.0;
            for (const auto& [d2, q] : nb) {
                const double w = std::exp(-d2 * inv_two_sigma2);
                wsum += w;
                acc += w * field[q];
            }
            g[i] = acc / wsum;
        });
    }
    std::vector<std::vector<double>> dog(levels - 1, std::vector<double>(cloud.size()));
    for (int j = 0; j + 1 < levels; ++j)
        for (std::size_t i = 0; i < cloud.size(); ++i)
            dog[j][i] = gaussians[j + 1][i] - gaussians[j][i];
    return dog;
}

KeypointSet detect_sift3d(const PointCloud& cloud, const SiftParams& params) {
    const int levels = sift_levels(params);
    KeypointSet out;
    out.detector = DetectorKind::Sift3D;
    if (cloud.empty()) return out;
    if (!(params.min_contrast >= 0.0)) throw_invalid("SIFT min_contrast must be non-negative");

    const auto dog = sift_dog_stack(cloud, params);
    const int dog_levels = levels - 1;
    const KdTree tree(cloud);
    std::vector<double> best(cloud.size(), 0.0);

    parallel_for(cloud.size(), [&](std::size_t i) {
        auto& nb = scratch();
        for (int j = 0; j < dog_levels; ++j) {
            const double v = dog[j][i];
            if (!(std::abs(v) > params.min_contrast)) continue;
            const double sign = v > 0.0 ? 1.0 : -1.0;
            const double sv = sign * v;
            tree.radius_unsorted(cloud.points[i], sift_sigma(params, j), nb);
            bool extremum = true;
            for (int jj = std::max(0, j - 1); jj <= std::min(dog_levels - 1, j + 1) && extremum;
                 ++jj) {
                if (jj != j) {
                    // Same point on the adjacent scales: must win outright.
                    const double other = sign * dog[jj][i];
                    if (nearly_equal(sv, other) || other > sv) extremum = false;
                }
                for (const auto& [d2, q] : nb) {
                    if (q == i) continue;
                    const double other = sign * dog[jj][q];
                    if (jj == j) {
                        if (outranks(other, q, sv, i)) {
                            extremum = false;
                            break;
                        }
                    } else if (nearly_equal(sv, other) || other > sv) {
                        extremum = false;
                        break;
                    }
                }
            }
            if (extremum) best[i] = std::max(best[i], std::abs(v));
        }
    });
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (best[i] <= 0.0) continue;
        out.indices.push_back(i);
        out.responses.push_back(best[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// ISS3D

std::vector<IssSaliency> iss_saliency(const PointCloud& cloud, const IssParams& params) {
    require_positive(params.salient_radius, "ISS salient radius");
    if (!(params.gamma21 > 0.0 && params.gamma21 < 1.0 && params.gamma32 > 0.0 &&
          params.gamma32 < 1.0))
        throw_invalid("ISS eigenvalue ratios must lie in (0, 1)");
    if (!(params.min_saliency >= 0.0)) throw_invalid("ISS minimum saliency must be non-negative");
    std::vector<IssSaliency> out(cloud.size());
    if (cloud.empty()) return out;
    const KdTree tree(cloud);
    const double r = params.salient_radius;
    parallel_for(cloud.size(), [&](std::size_t i) {
        auto& nb = scratch();
        tree.radius_unsorted(cloud.points[i], r, nb);
        double wsum = 0.0;
        Vec3 mean = Vec3::Zero();
        int count = 0;
        for (const auto& [d2, j] : nb) {
            if (j == i) continue;
            const double w = r - std::sqrt(d2);
            wsum += w;
            mean += w * cloud.points[j];
            ++count;
        }
        if (count < params.min_neighbors || !(wsum > 0.0)) return;
        mean /= wsum;
        Mat3 cov = Mat3::Zero();
        for (const auto& [d2, j] : nb) {
            if (j == i) continue;
            const double w = r - std::sqrt(d2);
            const Vec3 d = cloud.points[j] - mean;
            cov += w * d * d.transpose();
        }
        cov /= wsum;
        const auto eig = eigen_descending(cov);
        out[i].eigenvalues = eig.values;
        const double l1 = eig.values[0], l2 = eig.values[1], l3 = eig.values[2];
        // Sensor noise on flat support gives a small but nonzero lambda3;
        // only spread that is a real fraction of the support size counts.
        out[i].candidate = l1 > 0.0 && l2 > 0.0 && l3 > 1e-10 * l1 &&
                           l3 >= params.min_saliency * r * r &&
                           l2 / l1 < params.gamma21 && l3 / l2 < params.gamma32;
    });
    return out;
}

KeypointSet detect_iss3d(const PointCloud& cloud, const IssParams& params) {
    require_positive(params.nms_radius, "ISS NMS radius");
    const auto saliency = iss_saliency(cloud, params);
    KeypointSet out;
    out.detector = DetectorKind::Iss3D;
    if (cloud.empty()) return out;
    std::vector<std::uint8_t> candidate(cloud.size());
    std::vector<double> response(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        candidate[i] = saliency[i].candidate ? 1 : 0;
        response[i] = saliency[i].eigenvalues[2];
    }
    const KdTree tree(cloud);
    return non_max_suppress(DetectorKind::Iss3D, cloud, tree, candidate, response,
                            params.nms_radius);
}

// ---------------------------------------------------------------------------
// SUSAN

std::vector<UsanArea> usan_areas(const PointCloud& cloud, const SusanParams& params) {
    std::vector<UsanArea> out(cloud.size());
    if (cloud.empty()) return out;
    require_normals(cloud, "SUSAN");
    require_positive(params.radius, "SUSAN radius");
    const KdTree tree(cloud);
    const double cos_threshold = std::cos(params.angular_threshold);
    const bool use_intensity = cloud.has_intensities();
    parallel_for(cloud.size(), [&](std::size_t i) {
        if (!cloud.normal_ok(i)) return;
        auto& nb = scratch();
        tree.radius_unsorted(cloud.points[i], params.radius, nb);
        const Vec3& n = cloud.normals[i];
        std::size_t total = 0;
        std::size_t similar = 0;
        Vec3 centroid = Vec3::Zero();
        for (const auto& [d2, j] : nb) {
            if (j == i || !cloud.normal_ok(j)) continue;
            ++total;
            bool same = n.dot(cloud.normals[j]) > cos_threshold;
            if (same && use_intensity)
                same = std::abs(cloud.intensities[j] - cloud.intensities[i]) <
                       params.intensity_threshold;
            if (same) {
                ++similar;
                centroid += cloud.points[j];
            }
        }
        if (total == 0) return;
        out[i].valid = true;
        out[i].area = static_cast<double>(similar) / static_cast<double>(total);
        if (similar > 0)
            out[i].centroid_offset =
                (centroid / static_cast<double>(similar) - cloud.points[i]).norm();
    });
    return out;
}

KeypointSet detect_susan(const PointCloud& cloud, const SusanParams& params) {
    KeypointSet out;
    out.detector = DetectorKind::Susan;
    if (cloud.empty()) return out;
    require_normals(cloud, "SUSAN");
    const auto areas = usan_areas(cloud, params);
    std::vector<std::uint8_t> candidate(cloud.size(), 0);
    std::vector<double> response(cloud.size(), 0.0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& a = areas[i];
        if (!a.valid || a.area <= 0.0) continue;
        if (a.area < params.geometric_threshold &&
            a.centroid_offset > params.distance_threshold) {
            candidate[i] = 1;
            response[i] = params.geometric_threshold - a.area;
        }
    }
    const KdTree tree(cloud);
    return non_max_suppress(DetectorKind::Susan, cloud, tree, candidate, response,
                            params.radius);
}

// ---------------------------------------------------------------------------

DetectorConfig default_detector_config(DetectorKind kind, double resolution) {
    DetectorConfig c;
    c.kind = kind;
    c.harris = default_harris(resolution);
    c.sift = default_sift(resolution);
    c.iss = default_iss(resolution);
    c.susan = default_susan(resolution);
    return c;
}

DetectorConfig scaled(const DetectorConfig& config, double factor) {
    DetectorConfig c = config;
    c.harris.radius *= factor;
    c.harris.nms_radius *= factor;
    c.sift.min_scale *= factor;
    c.iss.salient_radius *= factor;
    c.iss.nms_radius *= factor;
    c.susan.radius *= factor;
    c.susan.distance_threshold *= factor;
    return c;
}

KeypointSet detect(const PointCloud& cloud, const DetectorConfig& config) {
    switch (config.kind) {
        case DetectorKind::Harris3D: return detect_harris3d(cloud, config.harris);
        case DetectorKind::Sift3D: return detect_sift3d(cloud, config.sift);
        case DetectorKind::Iss3D: return detect_iss3d(cloud, config.iss);
        case DetectorKind::Susan: return detect_susan(cloud, config.susan);
    }
    throw_invalid("unknown detector");
}

}  // namespace regbench
