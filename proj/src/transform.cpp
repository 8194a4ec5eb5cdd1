#include "arplace/transform.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "arplace/error.hpp"
#include "arplace/json_writer.hpp"

namespace arplace {

double SimilarityTransformY::wrap_angle(double theta) {
  constexpr double pi = std::numbers::pi;
  if (theta > -pi && theta <= pi) return theta;
  double r = std::remainder(theta, 2.0 * pi);  // [-pi, pi]
  if (r <= -pi) r += 2.0 * pi;
  return r;
}

Point3 rotate_y(double theta, const Point3& p) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {p.x() * c + p.z() * s, p.y(), -p.x() * s + p.z() * c};
}

Point3 SimilarityTransformY::apply(const Point3& p) const {
  if (anisotropic) return rotate_y(theta, scale.cwiseProduct(p)) + translation;
  return scale.x() * rotate_y(theta, p) + translation;
}

PointCloud apply_transform(const SimilarityTransformY& transform, const PointCloud& cloud) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = transform.apply(p);
  return out;
}

std::string transform_to_json(const SimilarityTransformY& transform) {
  return write_json(transform_json(transform));
}

nlohmann::ordered_json transform_json(const SimilarityTransformY& transform) {
  nlohmann::ordered_json j;
  j["theta_rad"] = transform.theta;
  if (transform.anisotropic) {
    j["scale"] = {transform.scale.x(), transform.scale.y(), transform.scale.z()};
  } else {
    j["scale"] = transform.scale.x();
  }
  j["translation"] = {transform.translation.x(), transform.translation.y(), transform.translation.z()};
  j["application"] = kTransformApplication;
  return j;
}

SimilarityTransformY transform_from_json_value(const nlohmann::json& j) {
  try {
    if (j.at("application").get<std::string>() != kTransformApplication) {
      throw ParseError("transform JSON: unexpected application rule '" + j.at("application").get<std::string>() +
                       "'");
    }
    SimilarityTransformY t;
    t.theta = j.at("theta_rad").get<double>();
    const auto& scale = j.at("scale");
    if (scale.is_array()) {
      if (scale.size() != 3) throw ParseError("transform JSON: scale array must have 3 entries");
      t.scale = {scale[0].get<double>(), scale[1].get<double>(), scale[2].get<double>()};
      t.anisotropic = true;
    } else {
      t.scale = Eigen::Vector3d::Constant(scale.get<double>());
    }
    const auto& tr = j.at("translation");
    if (!tr.is_array() || tr.size() != 3) throw ParseError("transform JSON: translation must be a 3-array");
    t.translation = {tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>()};
    if (!std::isfinite(t.theta) || !t.scale.allFinite() || !t.translation.allFinite() ||
        (t.scale.array() <= 0.0).any()) {
      throw ParseError("transform JSON: non-finite value or non-positive scale");
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("transform JSON: ") + e.what());
  }
}

SimilarityTransformY transform_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("transform JSON: ") + e.what());
  }
  return transform_from_json_value(j);
}

}  // namespace arplace
