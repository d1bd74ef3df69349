#include "regbench/descriptors.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "regbench/error.h"
#include "regbench/geometry.h"
#include "regbench/parallel.h"

namespace regbench {

namespace {

using Neighbors = std::vector<std::pair<double, std::size_t>>;

/// Linear split of a continuous bin coordinate between its two nearest bin
/// centers. Clamped dimensions put everything in the edge bin past the
/// outermost centers; circular ones wrap.
struct BinSplit {
    int lo = 0;
    int hi = 0;
    double w_lo = 1.0;
    double w_hi = 0.0;
};

BinSplit clamped_split(double coord, int bins) {
    const double c = std::clamp(coord, 0.0, static_cast<double>(bins - 1));
    BinSplit s;
    s.lo = std::min(static_cast<int>(std::floor(c)), bins - 1);
    s.hi = std::min(s.lo + 1, bins - 1);
    s.w_hi = c - s.lo;
    s.w_lo = 1.0 - s.w_hi;
    return s;
}

BinSplit circular_split(double coord, int bins) {
    const double f = std::floor(coord);
    BinSplit s;
    s.w_hi = coord - f;
    s.w_lo = 1.0 - s.w_hi;
    const int base = static_cast<int>(f);
    s.lo = ((base % bins) + bins) % bins;
    s.hi = (s.lo + 1) % bins;
    return s;
}

int hard_bin(double value, double lo, double hi, int bins) {
    const int b = static_cast<int>(std::floor((value - lo) / (hi - lo) * bins));
    return std::clamp(b, 0, bins - 1);
}

}  // namespace

std::string_view to_string(DescriptorKind kind) {
    return kind == DescriptorKind::Shot ? "shot" : "fpfh";
}

std::optional<DescriptorKind> parse_descriptor(std::string_view name) {
    std::string lower(name);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "shot") return DescriptorKind::Shot;
    if (lower == "fpfh") return DescriptorKind::Fpfh;
    return std::nullopt;
}

const std::vector<DescriptorKind>& all_descriptors() {
    static const std::vector<DescriptorKind> kinds{DescriptorKind::Shot, DescriptorKind::Fpfh};
    return kinds;
}

std::size_t descriptor_length(DescriptorKind kind) {
    return kind == DescriptorKind::Shot ? kShotLength : kFpfhLength;
}

std::size_t DescriptorSet::valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

// ---------------------------------------------------------------------------
// Local reference frame

std::optional<LocalReferenceFrame> try_compute_lrf(const PointCloud& cloud, const KdTree& tree,
                                                   std::size_t keypoint, double radius) {
    const Vec3& origin = cloud.points.at(keypoint);
    Neighbors nb;
    tree.radius_unsorted(origin, radius, nb);
    std::erase_if(nb, [](const auto& e) { return e.first <= 0.0; });
    if (nb.size() < 5) return std::nullopt;

    double wsum = 0.0;
    Mat3 scatter = Mat3::Zero();
    for (const auto& [d2, j] : nb) {
        const double w = radius - std::sqrt(d2);
        const Vec3 d = cloud.points[j] - origin;
        scatter += w * d * d.transpose();
        wsum += w;
    }
    if (!(wsum > 0.0)) return std::nullopt;
    scatter /= wsum;
    const auto eig = eigen_descending(scatter);
    if (!(eig.values[0] > 0.0) || !(eig.values[1] > 1e-12 * eig.values[0])) return std::nullopt;

    auto orient = [&](Vec3 axis) {
        long balance = 0;
        double sum = 0.0;
        for (const auto& [d2, j] : nb) {
            const double proj = (cloud.points[j] - origin).dot(axis);
            balance += proj >= 0.0 ? 1 : -1;
            sum += proj;
        }
        if (balance < 0 || (balance == 0 && sum < 0.0)) axis = -axis;
        return axis;
    };
    const Vec3 x = orient(eig.vectors.col(0).normalized());
    const Vec3 z = orient(eig.vectors.col(2).normalized());
    const Vec3 y = z.cross(x);

    LocalReferenceFrame lrf;
    lrf.origin = origin;
    lrf.axes.row(0) = x.transpose();
    lrf.axes.row(1) = y.transpose();
    lrf.axes.row(2) = z.transpose();
    return lrf;
}

LocalReferenceFrame compute_lrf(const PointCloud& cloud, std::size_t keypoint, double radius) {
    if (!(radius > 0.0)) throw_invalid("LRF radius must be positive");
    const KdTree tree(cloud);
    auto lrf = try_compute_lrf(cloud, tree, keypoint, radius);
    if (!lrf)
        throw_degenerate("local reference frame at point " + std::to_string(keypoint) +
                         " is degenerate (needs >= 5 non-collinear neighbors)");
    return *lrf;
}

// ---------------------------------------------------------------------------
// SHOT

DescriptorSet compute_shot(const PointCloud& cloud, const KeypointSet& keypoints, double radius) {
    return compute_shot(cloud, std::span<const std::size_t>(keypoints.indices), radius);
}

DescriptorSet compute_shot(const PointCloud& cloud, std::span<const std::size_t> keypoints,
                           double radius) {
    DescriptorSet out;
    out.kind = DescriptorKind::Shot;
    out.radius = radius;
    out.keypoint_indices.assign(keypoints.begin(), keypoints.end());
    out.vectors.assign(keypoints.size(), Eigen::VectorXd::Zero(kShotLength));
    out.valid.assign(keypoints.size(), 0);
    if (keypoints.empty()) return out;
    if (!cloud.has_normals()) throw_invalid("SHOT requires a cloud with normals");
    if (!(radius >= 0.0)) throw_invalid("SHOT radius must be non-negative");
    if (radius == 0.0) return out;

    const KdTree tree(cloud);
    constexpr double pi = std::numbers::pi;
    parallel_for(keypoints.size(), [&](std::size_t k) {
        const std::size_t kp = keypoints[k];
        if (!cloud.normal_ok(kp)) return;
        const auto lrf = try_compute_lrf(cloud, tree, kp, radius);
        if (!lrf) return;
        const Vec3& kn = cloud.normals[kp];

        Neighbors nb;
        tree.radius_unsorted(cloud.points[kp], radius, nb);
        Eigen::VectorXd hist = Eigen::VectorXd::Zero(kShotLength);
        for (const auto& [d2, j] : nb) {
            if (d2 <= 0.0 || !cloud.normal_ok(j)) continue;
            const double dist = std::sqrt(d2);
            const Vec3 local = lrf->to_local(cloud.points[j]);
            const double cosine = std::clamp(kn.dot(cloud.normals[j]), -1.0, 1.0);
            const double azimuth = std::atan2(local.y(), local.x());
            const double elevation = std::asin(std::clamp(local.z() / dist, -1.0, 1.0));

            const auto c = clamped_split((cosine + 1.0) * 0.5 * kShotCosineBins - 0.5,
                                         kShotCosineBins);
            const auto a = circular_split((azimuth + pi) / (2.0 * pi) * kShotAzimuthBins - 0.5,
                                          kShotAzimuthBins);
            const auto e = clamped_split((elevation + 0.5 * pi) / pi * kShotElevationBins - 0.5,
                                         kShotElevationBins);
            const auto r = clamped_split(dist / radius * kShotRadialBins - 0.5, kShotRadialBins);

            const int cb[2] = {c.lo, c.hi};
            const double cw[2] = {c.w_lo, c.w_hi};
            const int ab[2] = {a.lo, a.hi};
            const double aw[2] = {a.w_lo, a.w_hi};
            const int eb[2] = {e.lo, e.hi};
            const double ew[2] = {e.w_lo, e.w_hi};
            const int rb[2] = {r.lo, r.hi};
            const double rw[2] = {r.w_lo, r.w_hi};
            for (int ri = 0; ri < 2; ++ri)
                for (int ei = 0; ei < 2; ++ei)
                    for (int ai = 0; ai < 2; ++ai)
                        for (int ci = 0; ci < 2; ++ci) {
                            const double w = rw[ri] * ew[ei] * aw[ai] * cw[ci];
                            if (w == 0.0) continue;
                            const int volume =
                                (rb[ri] * kShotElevationBins + eb[ei]) * kShotAzimuthBins + ab[ai];
                            hist[volume * kShotCosineBins + cb[ci]] += w;
                        }
        }
        const double norm = hist.norm();
        if (!(norm > 0.0)) return;
        out.vectors[k] = hist / norm;
        out.valid[k] = 1;
    });
    return out;
}

// ---------------------------------------------------------------------------
// SPFH / FPFH

std::optional<PairFeatures> pair_features(const Vec3& p, const Vec3& np, const Vec3& q,
                                          const Vec3& nq) {
    Vec3 line = q - p;
    const double d = line.norm();
    if (!(d > 0.0)) return std::nullopt;
    line /= d;
    const double cos_p = np.dot(line);
    const double cos_q = nq.dot(line);
    Vec3 u = np;
    Vec3 nt = nq;
    // The point whose normal is closer to the line is the source. Equal angles
    // (neighbors sharing a normal) would otherwise be decided by rounding, so
    // ties take the ordering with the larger phi.
    const double gap = std::abs(cos_q) - std::abs(cos_p);
    const bool swap = std::abs(gap) <= 1e-12 ? -cos_q > cos_p : gap > 0.0;
    if (swap) {
        u = nq;
        nt = np;
        line = -line;
    }
    Vec3 v = u.cross(line);
    const double vn = v.norm();
    if (!(vn > 1e-12)) return std::nullopt;
    v /= vn;
    const Vec3 w = u.cross(v);
    PairFeatures f;
    f.alpha = std::clamp(v.dot(nt), -1.0, 1.0);
    f.phi = std::clamp(u.dot(line), -1.0, 1.0);
    f.theta = std::atan2(w.dot(nt), u.dot(nt));
    return f;
}

Eigen::VectorXd compute_spfh(const PointCloud& cloud, std::size_t point, double radius) {
    const KdTree tree(cloud);
    return compute_spfh(cloud, tree, point, radius);
}

Eigen::VectorXd compute_spfh(const PointCloud& cloud, const KdTree& tree, std::size_t point,
                             double radius) {
    Eigen::VectorXd hist = Eigen::VectorXd::Zero(kFpfhLength);
    if (!cloud.normal_ok(point) || !(radius > 0.0)) return hist;
    Neighbors nb;
    tree.radius_unsorted(cloud.points[point], radius, nb);
    std::erase_if(nb, [&](const auto& e) {
        return e.second == point || e.first <= 0.0 || !cloud.normal_ok(e.second);
    });
    if (nb.size() < 2) return hist;
    constexpr double pi = std::numbers::pi;
    constexpr int bins = kFpfhBinsPerFeature;
    int pairs = 0;
    for (const auto& [d2, j] : nb) {
        const auto f = pair_features(cloud.points[point], cloud.normals[point], cloud.points[j],
                                     cloud.normals[j]);
        if (!f) continue;
        hist[hard_bin(f->alpha, -1.0, 1.0, bins)] += 1.0;
        hist[bins + hard_bin(f->phi, -1.0, 1.0, bins)] += 1.0;
        hist[2 * bins + hard_bin(f->theta, -pi, pi, bins)] += 1.0;
        ++pairs;
    }
    if (pairs == 0) return hist;
    return hist * (100.0 / pairs);
}

DescriptorSet compute_fpfh(const PointCloud& cloud, const KeypointSet& keypoints, double radius) {
    return compute_fpfh(cloud, std::span<const std::size_t>(keypoints.indices), radius);
}

DescriptorSet compute_fpfh(const PointCloud& cloud, std::span<const std::size_t> keypoints,
                           double radius) {
    DescriptorSet out;
    out.kind = DescriptorKind::Fpfh;
    out.radius = radius;
    out.keypoint_indices.assign(keypoints.begin(), keypoints.end());
    out.vectors.assign(keypoints.size(), Eigen::VectorXd::Zero(kFpfhLength));
    out.valid.assign(keypoints.size(), 0);
    if (keypoints.empty()) return out;
    if (!cloud.has_normals()) throw_invalid("FPFH requires a cloud with normals");
    if (!(radius >= 0.0)) throw_invalid("FPFH radius must be non-negative");
    if (radius == 0.0) return out;

    const KdTree tree(cloud);
    // Support of every keypoint, then one SPFH per distinct point involved.
    std::vector<Neighbors> support(keypoints.size());
    parallel_for(keypoints.size(), [&](std::size_t k) {
        tree.radius_unsorted(cloud.points[keypoints[k]], radius, support[k]);
        std::erase_if(support[k], [&](const auto& e) {
            return e.second == keypoints[k] || e.first <= 0.0 || !cloud.normal_ok(e.second);
        });
        std::sort(support[k].begin(), support[k].end());
    });
    std::vector<std::uint8_t> needed(cloud.size(), 0);
    for (std::size_t k = 0; k < keypoints.size(); ++k) {
        needed[keypoints[k]] = 1;
        for (const auto& [d2, j] : support[k]) needed[j] = 1;
    }
    std::vector<std::size_t> needed_list;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (needed[i]) needed_list.push_back(i);
    std::vector<Eigen::VectorXd> spfh(cloud.size());
    parallel_for(needed_list.size(), [&](std::size_t n) {
        spfh[needed_list[n]] = compute_spfh(cloud, tree, needed_list[n], radius);
    });

    parallel_for(keypoints.size(), [&](std::size_t k) {
        const auto& own = spfh[keypoints[k]];
        if (!(own.sum() > 0.0)) return;
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(kFpfhLength);
        for (const auto& [d2, j] : support[k]) acc += spfh[j] / std::sqrt(d2);
        Eigen::VectorXd f = own;
        if (!support[k].empty()) f += acc / static_cast<double>(support[k].size());
        for (int b = 0; b < 3; ++b) {
            auto block = f.segment(b * kFpfhBinsPerFeature, kFpfhBinsPerFeature);
            const double s = block.sum();
            if (s > 0.0) block *= 100.0 / s;
        }
        out.vectors[k] = f;
        out.valid[k] = 1;
    });
    return out;
}

DescriptorSet describe(DescriptorKind kind, const PointCloud& cloud, const KeypointSet& keypoints,
                       double radius) {
    return kind == DescriptorKind::Shot ? compute_shot(cloud, keypoints, radius)
                                        : compute_fpfh(cloud, keypoints, radius);
}

}  // namespace regbench
