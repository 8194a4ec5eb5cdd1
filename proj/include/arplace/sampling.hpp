#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "arplace/mesh.hpp"
#include "arplace/point_cloud.hpp"

namespace arplace {

/// Selects objects by layer tag. Exclusion wins over inclusion.
struct LayerFilter {
  std::optional<std::set<std::string>> include;
  std::set<std::string> exclude;

  bool passes(const std::string& layer) const {
    return (!include || include->count(layer) > 0) && exclude.count(layer) == 0;
  }
};

enum class SampleMethod { Surface, Support, Ignore };

/// Per-layer method assignment; layers not listed are surface-sampled.
using LayerMethods = std::map<std::string, SampleMethod>;

/// `n` points drawn i.i.d. over the passing objects' surfaces, with triangle
/// choice proportional to area and a square-root warped barycentric draw
/// inside the triangle. Each point carries its object's layer id.
PointCloud surface_sample(const SceneMesh& mesh, std::size_t n, std::uint64_t seed,
                          const LayerFilter& filter = {});

/// One point per passing object: the center of the bottom (y = ymin) face of
/// the object's axis-aligned bounding box.
PointCloud support_points(const SceneMesh& mesh, const LayerFilter& filter = {});

/// Surface block (n_surface points over surface-assigned layers) followed by
/// the support block (support-assigned layers). `filter` is applied on top of
/// the method assignment.
PointCloud sample_scene(const SceneMesh& mesh, const LayerMethods& methods, std::size_t n_surface,
                        std::uint64_t seed, const LayerFilter& filter = {});

}  // namespace arplace
