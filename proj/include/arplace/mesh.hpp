#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "arplace/point_cloud.hpp"

namespace arplace {

using Triangle = std::array<std::uint32_t, 3>;

/// One named scene object. Vertex positions are baked world coordinates;
/// triangles index into `vertices`.
struct MeshObject {
  std::string name;
  std::string layer = "default";
  std::vector<Point3> vertices;
  std::vector<Triangle> triangles;

  double triangle_area(std::size_t t) const;
};

/// Triangle-mesh scene split into objects. Always holds at least one object
/// and object names are unique.
struct SceneMesh {
  std::vector<MeshObject> objects;

  /// Distinct layer tags in order of first appearance. A layer's position in
  /// this list is the LayerId stamped on sampled points.
  std::vector<std::string> layer_names() const;
  LayerId layer_id(const std::string& layer) const;
};

/// Parses the OBJ subset: `v`, `f` (polygons fan-triangulated from their first
/// corner; `v/vt/vn` forms accepted; negative indices are relative), `o`/`g`
/// object boundaries, `#` comments. Other directives are ignored.
/// Object names of the form `name@layer` carry their layer tag.
SceneMesh load_mesh(const std::filesystem::path& path);
SceneMesh parse_obj(std::istream& in, const std::string& source_name = "<obj>");

}  // namespace arplace
