#include "arplace/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include <Eigen/Geometry>

#include "arplace/error.hpp"

namespace arplace {

double MeshObject::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Point3& a = vertices[tri[0]];
  return 0.5 * (vertices[tri[1]] - a).cross(vertices[tri[2]] - a).norm();
}

std::vector<std::string> SceneMesh::layer_names() const {
  std::vector<std::string> names;
  for (const auto& obj : objects) {
    if (std::find(names.begin(), names.end(), obj.layer) == names.end()) names.push_back(obj.layer);
  }
  return names;
}

LayerId SceneMesh::layer_id(const std::string& layer) const {
  const auto names = layer_names();
  const auto it = std::find(names.begin(), names.end(), layer);
  if (it == names.end()) throw Error("unknown layer '" + layer + "'");
  return static_cast<LayerId>(it - names.begin());
}

namespace {

struct ObjectBuilder {
  MeshObject object;
  bool named = false;
  std::unordered_map<std::size_t, std::uint32_t> local;  // global vertex -> local

  std::uint32_t adopt(std::size_t global, const std::vector<Point3>& pool) {
    const auto [it, inserted] = local.try_emplace(global, static_cast<std::uint32_t>(object.vertices.size()));
    if (inserted) object.vertices.push_back(pool[global]);
    return it->second;
  }
};

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string rest_of_line(const std::vector<std::string_view>& tokens) {
  std::string out;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (i > 1) out += ' ';
    out += tokens[i];
  }
  return out;
}

void split_name_layer(const std::string& full, std::string& name, std::string& layer) {
  const auto at = full.rfind('@');
  if (at == std::string::npos || at + 1 == full.size()) {
    name = full;
    layer = "default";
  } else {
    name = full.substr(0, at);
    layer = full.substr(at + 1);
  }
}

}  // namespace

SceneMesh parse_obj(std::istream& in, const std::string& source_name) {
  std::vector<Point3> pool;
  std::vector<ObjectBuilder> builders(1);
  builders.front().object.name = "object";

  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError(source_name + ":line " + std::to_string(lineno) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = tokenize(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    const auto keyword = tokens[0];

    if (keyword == "v") {
      if (tokens.size() < 4) throw fail("vertex needs 3 coordinates");
      Point3 p;
      for (int c = 0; c < 3; ++c) {
        const std::string tok(tokens[1 + c]);
        char* end = nullptr;
        p[c] = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') throw fail("cannot parse vertex coordinate '" + tok + "'");
        if (!std::isfinite(p[c])) throw fail("non-finite vertex coordinate");
      }
      pool.push_back(p);
      builders.back().adopt(pool.size() - 1, pool);
    } else if (keyword == "f") {
      if (tokens.size() < 4) throw fail("face needs at least 3 vertices");
      std::vector<std::size_t> corners;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto tok = tokens[i];
        const auto slash = tok.find('/');
        const auto index_text = tok.substr(0, slash);
        long long idx = 0;
        const auto [ptr, ec] = std::from_chars(index_text.data(), index_text.data() + index_text.size(), idx);
        if (ec != std::errc() || ptr != index_text.data() + index_text.size() || idx == 0) {
          throw fail("bad face index '" + std::string(tok) + "'");
        }
        const long long resolved = idx > 0 ? idx - 1 : static_cast<long long>(pool.size()) + idx;
        if (resolved < 0 || resolved >= static_cast<long long>(pool.size())) {
          throw fail("face index " + std::to_string(idx) + " out of range (" + std::to_string(pool.size()) +
                     " vertices defined)");
        }
        corners.push_back(static_cast<std::size_t>(resolved));
      }
      if (std::set<std::size_t>(corners.begin(), corners.end()).size() != corners.size()) {
        throw fail("face repeats a vertex index");
      }
      auto& builder = builders.back();
      for (std::size_t k = 1; k + 1 < corners.size(); ++k) {
        builder.object.triangles.push_back({builder.adopt(corners[0], pool), builder.adopt(corners[k], pool),
                                            builder.adopt(corners[k + 1], pool)});
      }
    } else if (keyword == "o" || keyword == "g") {
      ObjectBuilder next;
      next.named = true;
      split_name_layer(tokens.size() > 1 ? rest_of_line(tokens) : std::string("object"), next.object.name,
                       next.object.layer);
      builders.push_back(std::move(next));
    }
    // vt, vn, usemtl, mtllib, s, l, p ...: ignored.
  }
  if (in.bad()) throw IoError(source_name + ": read error");

  const bool any_named = std::any_of(builders.begin(), builders.end(), [](const auto& b) { return b.named; });
  SceneMesh mesh;
  std::set<std::string> used;
  for (auto& builder : builders) {
    if (builder.object.vertices.empty()) continue;
    // Vertices declared ahead of the first `o`/`g` form a shared pool; the
    // implicit object only survives if it owns faces or nothing else exists.
    if (!builder.named && any_named && builder.object.triangles.empty()) continue;
    std::string name = builder.object.name;
    for (int suffix = 2; used.count(name); ++suffix) name = builder.object.name + "_" + std::to_string(suffix);
    used.insert(name);
    builder.object.name = std::move(name);
    mesh.objects.push_back(std::move(builder.object));
  }
  if (mesh.objects.empty()) throw ParseError(source_name + ": mesh has no objects with geometry");
  return mesh;
}

SceneMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open file");
  return parse_obj(in, path.string());
}

}  // namespace arplace
