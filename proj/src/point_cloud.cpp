#include "regbench/point_cloud.h"

#include <cmath>

#include "regbench/error.h"

namespace regbench {

double luma(const Rgb& c) {
    return (0.299 * c.r + 0.587 * c.g + 0.114 * c.b) / 255.0;
}

std::size_t PointCloud::valid_normal_count() const {
    if (!has_normals()) return 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i) n += normal_ok(i) ? 1 : 0;
    return n;
}

void PointCloud::set_normals(std::vector<Vec3> n) {
    normals = std::move(n);
    normal_valid.assign(normals.size(), 1);
}

void PointCloud::derive_intensities() {
    intensities.resize(colors.size());
    for (std::size_t i = 0; i < colors.size(); ++i) intensities[i] = luma(colors[i]);
}

PointCloud PointCloud::select(const std::vector<std::size_t>& indices) const {
    PointCloud out;
    out.points.reserve(indices.size());
    for (auto i : indices) out.points.push_back(points[i]);
    if (has_colors())
        for (auto i : indices) out.colors.push_back(colors[i]);
    if (has_normals()) {
        for (auto i : indices) out.normals.push_back(normals[i]);
        for (auto i : indices)
            out.normal_valid.push_back(normal_valid.empty() ? 1 : normal_valid[i]);
    }
    if (has_intensities())
        for (auto i : indices) out.intensities.push_back(intensities[i]);
    for (const auto& f : extra_fields) {
        ExtraField g = f;
        g.values.clear();
        for (auto i : indices)
            for (int c = 0; c < f.count; ++c)
                g.values.push_back(f.values[i * static_cast<std::size_t>(f.count) + c]);
        out.extra_fields.push_back(std::move(g));
    }
    return out;
}

void PointCloud::append(const PointCloud& other) {
    const bool was_empty = empty();
    const bool colors_ok = (was_empty || has_colors()) && other.has_colors();
    const bool normals_ok = (was_empty || has_normals()) && other.has_normals();
    const bool intensities_ok =
        (was_empty || has_intensities()) && other.has_intensities();

    points.insert(points.end(), other.points.begin(), other.points.end());
    if (colors_ok) {
        colors.insert(colors.end(), other.colors.begin(), other.colors.end());
    } else {
        colors.clear();
    }
    if (normals_ok) {
        normals.insert(normals.end(), other.normals.begin(), other.normals.end());
        if (other.normal_valid.empty()) {
            normal_valid.resize(normals.size(), 1);
        } else {
            normal_valid.insert(normal_valid.end(), other.normal_valid.begin(),
                                other.normal_valid.end());
        }
    } else {
        normals.clear();
        normal_valid.clear();
    }
    if (intensities_ok) {
        intensities.insert(intensities.end(), other.intensities.begin(),
                           other.intensities.end());
    } else {
        intensities.clear();
    }
    extra_fields.clear();
}

void PointCloud::validate() const {
    const auto n = size();
    for (std::size_t i = 0; i < n; ++i)
        if (!points[i].allFinite())
            throw_invalid("point " + std::to_string(i) + " has a non-finite coordinate");
    if (has_colors() && colors.size() != n) throw_invalid("color channel length mismatch");
    if (has_normals() && normals.size() != n) throw_invalid("normal channel length mismatch");
    if (!normal_valid.empty() && normal_valid.size() != normals.size())
        throw_invalid("normal validity mask length mismatch");
    if (has_intensities() && intensities.size() != n)
        throw_invalid("intensity channel length mismatch");
    for (std::size_t i = 0; i < normals.size(); ++i) {
        if (!normal_ok(i)) continue;
        if (std::abs(normals[i].norm() - 1.0) > 1e-6)
            throw_invalid("normal " + std::to_string(i) + " is not unit length");
    }
    for (const auto& f : extra_fields)
        if (f.values.size() != n * static_cast<std::size_t>(f.count))
            throw_invalid("extra field '" + f.name + "' length mismatch");
}

}  // namespace regbench
