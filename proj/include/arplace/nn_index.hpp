#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "arplace/point_cloud.hpp"

namespace arplace {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// Balanced 3-d tree for exact Euclidean nearest-neighbor queries.
/// Immutable after construction; concurrent queries are safe.
///
/// Ties are resolved toward the smallest source point index, so results are
/// identical to a linear scan comparing (squared distance, index).
class NNIndex {
 public:
  /// Throws arplace::Error on an empty point set.
  explicit NNIndex(std::vector<Point3> points);
  explicit NNIndex(const PointCloud& cloud) : NNIndex(cloud.points) {}

  Neighbor nearest(const Point3& query) const;

  std::size_t size() const { return points_.size(); }
  const std::vector<Point3>& points() const { return points_; }

 private:
  struct Node {
    std::uint32_t point = 0;  // index into points_
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::vector<std::uint32_t>& order, std::size_t begin, std::size_t end, int depth);
  void search(std::int32_t node, const Point3& q, double& best_d2, std::size_t& best_idx) const;

  std::vector<Point3> points_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

inline NNIndex build_nn_index(const PointCloud& cloud) { return NNIndex(cloud); }

/// Exhaustive O(n) reference search with the same tie rule as NNIndex.
Neighbor nearest_linear_scan(const std::vector<Point3>& points, const Point3& query);

}  // namespace arplace
