#include "arplace/nn_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "arplace/error.hpp"

namespace arplace {

NNIndex::NNIndex(std::vector<Point3> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error("cannot build a nearest-neighbor index over an empty cloud");
  if (points_.size() > std::numeric_limits<std::int32_t>::max()) {
    throw Error("nearest-neighbor index supports at most 2^31-1 points");
  }
  std::vector<std::uint32_t> order(points_.size());
  std::iota(order.begin(), order.end(), 0u);
  nodes_.reserve(points_.size());
  root_ = build(order, 0, order.size(), 0);
}

std::int32_t NNIndex::build(std::vector<std::uint32_t>& order, std::size_t begin, std::size_t end, int depth) {
  if (begin >= end) return -1;

  // Split on the axis of largest extent; falls back to depth cycling for
  // degenerate (all-equal) ranges.
  Point3 lo = points_[order[begin]];
  Point3 hi = lo;
  for (std::size_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order[i]]);
    hi = hi.cwiseMax(points_[order[i]]);
  }
  int axis = depth % 3;
  const Point3 extent = hi - lo;
  if (extent.maxCoeff() > 0.0) extent.maxCoeff(&axis);

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(begin),
                   order.begin() + static_cast<std::ptrdiff_t>(mid),
                   order.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = points_[a][axis];
                     const double vb = points_[b][axis];
                     return va < vb || (va == vb && a < b);
                   });

  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({order[mid], -1, -1, static_cast<std::uint8_t>(axis)});
  const auto left = build(order, begin, mid, depth + 1);
  const auto right = build(order, mid + 1, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NNIndex::search(std::int32_t node_id, const Point3& q, double& best_d2, std::size_t& best_idx) const {
  if (node_id < 0) return;
  const Node& node = nodes_[node_id];
  const Point3& p = points_[node.point];
  const double d2 = (p - q).squaredNorm();
  if (d2 < best_d2 || (d2 == best_d2 && node.point < best_idx)) {
    best_d2 = d2;
    best_idx = node.point;
  }
  const double diff = q[node.axis] - p[node.axis];
  search(diff < 0.0 ? node.left : node.right, q, best_d2, best_idx);
  // Equal-distance candidates on the far side may carry a smaller index, so
  // only strictly farther half-spaces are pruned.
  if (diff * diff <= best_d2) search(diff < 0.0 ? node.right : node.left, q, best_d2, best_idx);
}

Neighbor NNIndex::nearest(const Point3& query) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_idx = std::numeric_limits<std::size_t>::max();
  search(root_, query, best_d2, best_idx);
  return {best_idx, std::sqrt(best_d2)};
}

Neighbor nearest_linear_scan(const std::vector<Point3>& points, const Point3& query) {
  if (points.empty()) throw Error("nearest neighbor in an empty point set");
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = (points[i] - query).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best_idx = i;
    }
  }
  return {best_idx, std::sqrt(best_d2)};
}

}  // namespace arplace
