#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "regbench/point_cloud.h"

namespace regbench {

/// Neighbors sorted by ascending distance, ties broken by ascending index.
struct NeighborQueryResult {
    std::vector<std::size_t> indices;
    std::vector<double> distances;

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
};

/// Static 3-d tree over a copy of the input points. Immutable after
/// construction, so concurrent queries are safe. Results are exactly those of
/// a brute-force scan: squared distances are computed as (p - q).squaredNorm()
/// and pruning only discards subtrees that provably hold nothing closer.
class KdTree {
public:
    /// Throws InvalidInput for an empty point set.
    explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = 12);
    explicit KdTree(const PointCloud& cloud, std::size_t leaf_size = 12)
        : KdTree(std::span<const Vec3>(cloud.points), leaf_size) {}

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    NeighborQueryResult knn(const Vec3& query, std::size_t k) const;
    NeighborQueryResult radius_search(const Vec3& query, double radius) const;

    /// Closest point; returns false only for an empty tree.
    bool nearest(const Vec3& query, std::size_t& index, double& squared_distance) const;

    /// Radius search returning (squared distance, index) pairs in search
    /// order; cheaper when the caller does not need sorted output.
    void radius_unsorted(const Vec3& query, double radius,
                         std::vector<std::pair<double, std::size_t>>& out) const;

private:
    struct Node {
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        int dim = -1;
        double split = 0.0;
    };

    int build(std::uint32_t begin, std::uint32_t end);

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::size_t leaf_size_;
};

}  // namespace regbench
