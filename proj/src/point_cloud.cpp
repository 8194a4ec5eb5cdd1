#include "arplace/point_cloud.hpp"

#include <string>

#include "arplace/error.hpp"
#include "arplace/random.hpp"

namespace arplace {

PointCloud::PointCloud(std::vector<Point3> pts, std::vector<LayerId> layer_ids)
    : points(std::move(pts)), layers(std::move(layer_ids)) {
  validate();
}

void PointCloud::validate() const {
  if (layers && layers->size() != points.size()) {
    throw Error("point cloud has " + std::to_string(points.size()) + " points but " +
                std::to_string(layers->size()) + " layer ids");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw Error("point " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
}

Aabb aabb(const std::vector<Point3>& points) {
  if (points.empty()) throw Error("bounding box of an empty point set");
  Aabb box{points.front(), points.front()};
  for (const auto& p : points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

Aabb aabb(const PointCloud& cloud) { return aabb(cloud.points); }

Point3 centroid(const std::vector<Point3>& points) {
  if (points.empty()) throw Error("centroid of an empty point set");
  Point3 sum = Point3::Zero();
  for (const auto& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

Point3 centroid(const PointCloud& cloud) { return centroid(cloud.points); }

PointCloud random_downsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  const std::size_t total = cloud.size();
  if (n >= total) return cloud;

  PointCloud out;
  out.points.reserve(n);
  if (cloud.layers) {
    out.layers.emplace();
    out.layers->reserve(n);
  }

  // Knuth's algorithm S: visit each point once, keeping it with probability
  // (still needed) / (still available).
  Rng rng(seed);
  std::size_t needed = n;
  for (std::size_t i = 0; i < total && needed > 0; ++i) {
    const auto available = static_cast<double>(total - i);
    if (available * rng.uniform01() < static_cast<double>(needed)) {
      out.points.push_back(cloud.points[i]);
      if (cloud.layers) out.layers->push_back((*cloud.layers)[i]);
      --needed;
    }
  }
  return out;
}

}  // namespace arplace
