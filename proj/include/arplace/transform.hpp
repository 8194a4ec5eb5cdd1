#pragma once

#include <string>

#include <Eigen/Core>

#include "arplace/point_cloud.hpp"

namespace arplace {

/// Placement transform: rotation about +Y, scale, translation.
///
///   uniform:     q = s * Ry(theta) * p + t
///   anisotropic: q = Ry(theta) * diag(sx, sy, sz) * p + t
///
/// with Ry(theta) (x, y, z) = (x cos + z sin, y, -x sin + z cos).
struct SimilarityTransformY {
  double theta = 0.0;  // radians, kept in (-pi, pi]
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();
  Point3 translation = Point3::Zero();
  bool anisotropic = false;

  static SimilarityTransformY identity() { return {}; }
  static SimilarityTransformY uniform(double theta, double s, const Point3& t) {
    return {wrap_angle(theta), Eigen::Vector3d::Constant(s), t, false};
  }
  static SimilarityTransformY per_axis(double theta, const Eigen::Vector3d& s, const Point3& t) {
    return {wrap_angle(theta), s, t, true};
  }

  double uniform_scale() const { return scale.x(); }

  Point3 apply(const Point3& p) const;

  /// Reduces any angle to (-pi, pi].
  static double wrap_angle(double theta);
};

/// Rotation about +Y.
Point3 rotate_y(double theta, const Point3& p);

PointCloud apply_transform(const SimilarityTransformY& transform, const PointCloud& cloud);

/// The fixed `application` string written next to every serialized transform.
inline constexpr const char* kTransformApplication = "q = s*Ry(theta)*p + t";

/// JSON text: {"theta_rad", "scale" (number or 3-array), "translation", "application"}.
std::string transform_to_json(const SimilarityTransformY& transform);
/// Inverse of transform_to_json. Rejects documents whose `application`
/// string differs from kTransformApplication.
SimilarityTransformY transform_from_json(const std::string& text);

}  // namespace arplace
