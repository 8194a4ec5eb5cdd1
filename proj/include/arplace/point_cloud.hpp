#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace arplace {

/// 3D point in scene units (meters by convention). Always finite once it has
/// passed through a loader.
using Point3 = Eigen::Vector3d;

using LayerId = std::int32_t;

/// Ordered list of points with optional per-point layer ids.
/// When `layers` is engaged it has exactly one entry per point.
struct PointCloud {
  std::vector<Point3> points;
  std::optional<std::vector<LayerId>> layers;

  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> pts) : points(std::move(pts)) {}
  PointCloud(std::vector<Point3> pts, std::vector<LayerId> layer_ids);

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_layers() const { return layers.has_value(); }

  /// Throws arplace::Error if the layer vector length disagrees with the
  /// point count or a coordinate is not finite.
  void validate() const;
};

struct Aabb {
  Point3 min;
  Point3 max;

  double diagonal() const { return (max - min).norm(); }
  bool contains(const Point3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// Component-wise bounds. Throws on an empty cloud.
Aabb aabb(const PointCloud& cloud);
Aabb aabb(const std::vector<Point3>& points);

/// Arithmetic mean of the points. Throws on an empty cloud.
Point3 centroid(const PointCloud& cloud);
Point3 centroid(const std::vector<Point3>& points);

/// Uniform sample of `n` points without replacement, preserving the original
/// relative order (selection sampling). Returns the cloud unchanged when
/// n >= size. Pure function of (cloud, n, seed).
PointCloud random_downsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

}  // namespace arplace
