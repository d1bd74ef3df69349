#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regbench/point_cloud.h"

namespace regbench {

enum class DetectorKind { Harris3D, Sift3D, Iss3D, Susan };

std::string_view to_string(DetectorKind kind);
/// Accepts "harris3d", "sift3d", "iss3d", "susan" (case-insensitive).
std::optional<DetectorKind> parse_detector(std::string_view name);
const std::vector<DetectorKind>& all_detectors();

/// Indices into the detected cloud with one finite response per index.
struct KeypointSet {
    DetectorKind detector = DetectorKind::Iss3D;
    std::vector<std::size_t> indices;
    std::vector<double> responses;

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
    std::vector<Vec3> positions(const PointCloud& cloud) const;
};

struct HarrisParams {
    double radius = 0.06;
    double k = 0.04;
    double nms_radius = 0.04;
    double threshold = 1e-6;
};

/// Gaussian ladder sigma_j = min_scale * sqrt(2)^j with
/// octaves * scales_per_octave + 1 levels.
struct SiftParams {
    double min_scale = 0.02;
    int octaves = 2;
    int scales_per_octave = 2;
    double scale_factor = 1.4142135623730951;
    double min_contrast = 1e-4;
};

struct IssParams {
    double salient_radius = 0.06;
    double nms_radius = 0.04;
    double gamma21 = 0.975;
    double gamma32 = 0.975;
    int min_neighbors = 5;
    /// A point qualifies only if lambda3 >= min_saliency * salient_radius^2.
    double min_saliency = 0.01;
};

struct SusanParams {
    double radius = 0.06;
    double angular_threshold = 0.1745;  // radians
    double distance_threshold = 0.01;
    double intensity_threshold = 0.1;
    double geometric_threshold = 0.5;
};

/// Resolution-relative defaults (radii as multiples of the cloud resolution).
HarrisParams default_harris(double resolution);
SiftParams default_sift(double resolution);
IssParams default_iss(double resolution);
SusanParams default_susan(double resolution);

/// det(C) - k * tr(C)^2.
double harris_response(const Mat3& c, double k);

/// Harris corner measure on a Gaussian-windowed structure tensor of the
/// surface normals (normals stand in for image gradients). Requires normals.
KeypointSet detect_harris3d(const PointCloud& cloud, const HarrisParams& params);

/// Difference-of-Gaussian extrema of a per-point scalar field: intensity when
/// the cloud has colors or intensities, otherwise surface variation
/// lambda3 / (lambda1 + lambda2 + lambda3).
KeypointSet detect_sift3d(const PointCloud& cloud, const SiftParams& params);

/// Intrinsic shape signatures: eigenvalue-ratio saliency, response = smallest
/// eigenvalue, non-maximum suppressed.
KeypointSet detect_iss3d(const PointCloud& cloud, const IssParams& params);

/// Smallest univalue segment assimilating nucleus on normals (and intensity
/// when present). Requires normals.
KeypointSet detect_susan(const PointCloud& cloud, const SusanParams& params);

/// Per-point quantities exposed for tests and diagnostics.
struct IssSaliency {
    bool candidate = false;
    Vec3 eigenvalues = Vec3::Zero();  // descending
};
std::vector<IssSaliency> iss_saliency(const PointCloud& cloud, const IssParams& params);

struct UsanArea {
    bool valid = false;
    double area = 1.0;  // fraction of neighbors similar to the nucleus
    double centroid_offset = 0.0;
};
std::vector<UsanArea> usan_areas(const PointCloud& cloud, const SusanParams& params);

/// Scalar field used by SIFT3D and the DoG stack, dog[level][point].
std::vector<double> sift_scalar_field(const PointCloud& cloud, const SiftParams& params);
std::vector<std::vector<double>> sift_dog_stack(const PointCloud& cloud, const SiftParams& params);

/// Relative tolerance under which two responses count as tied; ties are
/// broken by ascending point index so that exact rigid copies select the
/// same points despite last-bit differences.
inline constexpr double kResponseTieTolerance = 1e-9;

struct DetectorConfig {
    DetectorKind kind = DetectorKind::Iss3D;
    HarrisParams harris;
    SiftParams sift;
    IssParams iss;
    SusanParams susan;
};

/// Every parameter set filled from the resolution-relative defaults.
DetectorConfig default_detector_config(DetectorKind kind, double resolution);
/// Scales every length parameter by `factor`.
DetectorConfig scaled(const DetectorConfig& config, double factor);

/// Dispatches to the configured detector. The cloud must already carry
/// normals for Harris3D and SUSAN.
KeypointSet detect(const PointCloud& cloud, const DetectorConfig& config);

}  // namespace regbench
