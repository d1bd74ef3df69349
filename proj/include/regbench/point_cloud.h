#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace regbench {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// A per-point attribute the toolkit does not interpret. Kept so that files
/// with extra columns can be written back unchanged (see cloud_io.h).
struct ExtraField {
    std::string name;
    char type = 'F';       // PCD type letter: F, I or U
    int size = 4;          // bytes per element
    int count = 1;         // elements per point
    std::vector<double> values;  // points * count, row-major
};

/// Ordered set of 3D samples in meters with optional color, normal and
/// intensity channels. Optional channels are either empty or exactly as long
/// as `points`. Normals carry a validity mask: degenerate neighborhoods are
/// flagged instead of being zero-filled or NaN.
class PointCloud {
public:
    std::vector<Vec3> points;
    std::vector<Rgb> colors;
    std::vector<Vec3> normals;
    std::vector<std::uint8_t> normal_valid;
    std::vector<double> intensities;
    std::vector<ExtraField> extra_fields;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    bool has_colors() const { return !colors.empty(); }
    bool has_normals() const { return !normals.empty(); }
    bool has_intensities() const { return !intensities.empty(); }

    bool normal_ok(std::size_t i) const {
        return has_normals() && (normal_valid.empty() || normal_valid[i] != 0);
    }
    std::size_t valid_normal_count() const;

    /// Sets normals with every entry marked valid.
    void set_normals(std::vector<Vec3> n);

    /// Fills `intensities` from `colors` with the standard luma weights.
    void derive_intensities();

    /// Keeps the points whose indices are listed, carrying every channel.
    PointCloud select(const std::vector<std::size_t>& indices) const;

    /// Appends another cloud. Channels present in only one side are dropped.
    void append(const PointCloud& other);

    /// Throws InvalidInput when a channel length or finiteness invariant fails.
    void validate() const;
};

double luma(const Rgb& c);

}  // namespace regbench
