#include "arplace/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "arplace/error.hpp"
#include "arplace/random.hpp"

namespace arplace {

namespace {

struct WeightedTriangle {
  const MeshObject* object;
  std::size_t triangle;
  LayerId layer;
};

}  // namespace

PointCloud surface_sample(const SceneMesh& mesh, std::size_t n, std::uint64_t seed, const LayerFilter& filter) {
  PointCloud out;
  out.layers.emplace();
  if (n == 0) return out;

  std::vector<WeightedTriangle> triangles;
  std::vector<double> cumulative;
  double total = 0.0;
  bool any_passing = false;
  for (const auto& obj : mesh.objects) {
    if (!filter.passes(obj.layer)) continue;
    any_passing = true;
    const LayerId layer = mesh.layer_id(obj.layer);
    for (std::size_t t = 0; t < obj.triangles.size(); ++t) {
      const double area = obj.triangle_area(t);
      if (!(area > 0.0)) continue;
      total += area;
      triangles.push_back({&obj, t, layer});
      cumulative.push_back(total);
    }
  }
  if (!any_passing) throw Error("surface sampling: no object passes the layer filter");
  if (!(total > 0.0)) throw Error("surface sampling: passing objects have zero total surface area");

  Rng rng(seed);
  out.points.reserve(n);
  out.layers->reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double target = rng.uniform01() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;  // target rounding up to total
    const auto& pick = triangles[static_cast<std::size_t>(it - cumulative.begin())];

    const auto& tri = pick.object->triangles[pick.triangle];
    const Point3& a = pick.object->vertices[tri[0]];
    const Point3& b = pick.object->vertices[tri[1]];
    const Point3& c = pick.object->vertices[tri[2]];
    const double r1 = std::sqrt(rng.uniform01());
    const double r2 = rng.uniform01();
    out.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
    out.layers->push_back(pick.layer);
  }
  return out;
}

PointCloud support_points(const SceneMesh& mesh, const LayerFilter& filter) {
  PointCloud out;
  out.layers.emplace();
  for (const auto& obj : mesh.objects) {
    if (!filter.passes(obj.layer) || obj.vertices.empty()) continue;
    const Aabb box = aabb(obj.vertices);
    out.points.emplace_back(0.5 * (box.min.x() + box.max.x()), box.min.y(), 0.5 * (box.min.z() + box.max.z()));
    out.layers->push_back(mesh.layer_id(obj.layer));
  }
  if (out.empty()) throw Error("support points: no object passes the layer filter");
  return out;
}

PointCloud sample_scene(const SceneMesh& mesh, const LayerMethods& methods, std::size_t n_surface,
                        std::uint64_t seed, const LayerFilter& filter) {
  auto method_of = [&](const std::string& layer) {
    const auto it = methods.find(layer);
    return it == methods.end() ? SampleMethod::Surface : it->second;
  };

  LayerFilter surface_filter{std::set<std::string>{}, filter.exclude};
  LayerFilter support_filter{std::set<std::string>{}, filter.exclude};
  for (const auto& layer : mesh.layer_names()) {
    if (!filter.passes(layer)) continue;
    switch (method_of(layer)) {
      case SampleMethod::Surface: surface_filter.include->insert(layer); break;
      case SampleMethod::Support: support_filter.include->insert(layer); break;
      case SampleMethod::Ignore: break;
    }
  }

  PointCloud out;
  out.layers.emplace();
  if (!surface_filter.include->empty()) {
    out = surface_sample(mesh, n_surface, seed, surface_filter);
  }
  if (!support_filter.include->empty()) {
    const PointCloud support = support_points(mesh, support_filter);
    out.points.insert(out.points.end(), support.points.begin(), support.points.end());
    out.layers->insert(out.layers->end(), support.layers->begin(), support.layers->end());
  }
  if (out.empty()) throw Error("scene sampling produced no points (every layer ignored or filtered out)");
  return out;
}

}  // namespace arplace
