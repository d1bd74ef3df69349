#include "regbench/kdtree.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "regbench/error.h"

namespace regbench {

namespace {

using Candidate = std::pair<double, std::size_t>;  // (squared distance, index)

inline double squared_distance(const Vec3& a, const Vec3& b) { return (a - b).squaredNorm(); }

NeighborQueryResult to_result(std::vector<Candidate>& found) {
    std::sort(found.begin(), found.end());
    NeighborQueryResult out;
    out.indices.reserve(found.size());
    out.distances.reserve(found.size());
    for (const auto& [d2, i] : found) {
        out.indices.push_back(i);
        out.distances.push_back(std::sqrt(d2));
    }
    return out;
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    if (points_.empty()) throw_invalid("cannot build a spatial index over an empty cloud");
    if (points_.size() > std::numeric_limits<std::uint32_t>::max())
        throw_invalid("cloud too large for the spatial index");
    order_.resize(points_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
}

int KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= leaf_size_) return id;

    Vec3 lo = points_[order_[begin]];
    Vec3 hi = lo;
    for (auto i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int dim = 0;
    (hi - lo).maxCoeff(&dim);
    if (hi[dim] == lo[dim]) return id;  // all coincident: keep as a leaf

    const auto mid = begin + (end - begin) / 2;
    auto less = [&](std::uint32_t a, std::uint32_t b) {
        const double pa = points_[a][dim];
        const double pb = points_[b][dim];
        return pa < pb || (pa == pb && a < b);
    };
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, less);
    const double split = points_[order_[mid]][dim];

    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].dim = dim;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

NeighborQueryResult KdTree::knn(const Vec3& query, std::size_t k) const {
    if (k == 0) throw_invalid("knn requires k >= 1");
    k = std::min(k, points_.size());

    // Max-heap on (d2, index): the top is the current worst kept candidate.
    std::priority_queue<Candidate> heap;
    auto visit = [&](auto&& self, int id) -> void {
        const Node& node = nodes_[id];
        if (node.dim < 0) {
            for (auto i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                const Candidate c{squared_distance(points_[idx], query), idx};
                if (heap.size() < k) {
                    heap.push(c);
                } else if (c < heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            return;
        }
        const double diff = query[node.dim] - node.split;
        const int near = diff <= 0.0 ? node.left : node.right;
        const int far = diff <= 0.0 ? node.right : node.left;
        self(self, near);
        // Equal distances must still be visited: a farther subtree may hold a
        // tie with a smaller index.
        if (heap.size() < k || diff * diff <= heap.top().first) self(self, far);
    };
    visit(visit, 0);

    std::vector<Candidate> found;
    found.reserve(heap.size());
    while (!heap.empty()) {
        found.push_back(heap.top());
        heap.pop();
    }
    return to_result(found);
}

void KdTree::radius_unsorted(const Vec3& query, double radius,
                             std::vector<Candidate>& out) const {
    out.clear();
    if (!(radius >= 0.0)) throw_invalid("radius must be non-negative");
    const double r2 = radius * radius;
    auto visit = [&](auto&& self, int id) -> void {
        const Node& node = nodes_[id];
        if (node.dim < 0) {
            for (auto i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                const double d2 = squared_distance(points_[idx], query);
                if (d2 <= r2) out.emplace_back(d2, idx);
            }
            return;
        }
        const double diff = query[node.dim] - node.split;
        const int near = diff <= 0.0 ? node.left : node.right;
        const int far = diff <= 0.0 ? node.right : node.left;
        self(self, near);
        if (diff * diff <= r2) self(self, far);
    };
    visit(visit, 0);
}

NeighborQueryResult KdTree::radius_search(const Vec3& query, double radius) const {
    std::vector<Candidate> found;
    radius_unsorted(query, radius, found);
    return to_result(found);
}

bool KdTree::nearest(const Vec3& query, std::size_t& index, double& squared_dist) const {
    if (points_.empty()) return false;
    Candidate best{std::numeric_limits<double>::infinity(), 0};
    auto visit = [&](auto&& self, int id) -> void {
        const Node& node = nodes_[id];
        if (node.dim < 0) {
            for (auto i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                const Candidate c{squared_distance(points_[idx], query), idx};
                if (c < best) best = c;
            }
            return;
        }
        const double diff = query[node.dim] - node.split;
        const int near = diff <= 0.0 ? node.left : node.right;
        const int far = diff <= 0.0 ? node.right : node.left;
        self(self, near);
        if (diff * diff <= best.first) self(self, far);
    };
    visit(visit, 0);
    squared_dist = best.first;
    index = best.second;
    return true;
}

}  // namespace regbench
