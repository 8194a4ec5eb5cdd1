#include "arplace/point_cloud_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "arplace/error.hpp"

namespace arplace {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY reading assumes a little-endian host");

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<Scalar> parse_scalar(std::string_view name) {
  if (name == "char" || name == "int8") return Scalar::Int8;
  if (name == "uchar" || name == "uint8") return Scalar::UInt8;
  if (name == "short" || name == "int16") return Scalar::Int16;
  if (name == "ushort" || name == "uint16") return Scalar::UInt16;
  if (name == "int" || name == "int32") return Scalar::Int32;
  if (name == "uint" || name == "uint32") return Scalar::UInt32;
  if (name == "float" || name == "float32") return Scalar::Float32;
  if (name == "double" || name == "float64") return Scalar::Float64;
  return std::nullopt;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::Int8:
    case Scalar::UInt8: return 1;
    case Scalar::Int16:
    case Scalar::UInt16: return 2;
    case Scalar::Int32:
    case Scalar::UInt32:
    case Scalar::Float32: return 4;
    case Scalar::Float64: return 8;
  }
  return 0;
}

bool is_integral(Scalar s) { return s != Scalar::Float32 && s != Scalar::Float64; }

struct PlyProperty {
  std::string name;
  Scalar type = Scalar::Float32;
  bool is_list = false;
  Scalar count_type = Scalar::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

enum class PlyEncoding { Ascii, BinaryLittleEndian };

struct PlyHeader {
  PlyEncoding encoding = PlyEncoding::Ascii;
  std::vector<PlyElement> elements;
  std::size_t line_count = 0;  // lines consumed, including end_header
};

/// Vertex element values, one row per vertex, one column per scalar property.
struct VertexTable {
  std::vector<PlyProperty> columns;
  std::vector<double> values;
  std::size_t rows = 0;
  // Input position of each row, for error messages ("line 12" / "byte 340").
  std::vector<std::string> where;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i].name == name) return i;
    }
    return std::nullopt;
  }
  double at(std::size_t row, std::size_t col) const { return values[row * columns.size() + col]; }
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string context(const std::filesystem::path& path, std::string_view where) {
  return path.string() + ":" + std::string(where) + ": ";
}

std::string line_ctx(const std::filesystem::path& path, std::size_t line) {
  return context(path, "line " + std::to_string(line));
}

/// Parses a real number token. Accepts "nan"/"inf" spellings so the caller
/// can reject them with a proper message instead of a generic parse failure.
std::optional<double> parse_real(std::string_view tok) {
  std::string buf(tok);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(buf.c_str(), &end);
  if (end == buf.c_str() || *end != '\0') return std::nullopt;
  return v;
}

std::optional<long long> parse_integer(std::string_view tok) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

PlyHeader parse_ply_header(std::istream& in, const std::filesystem::path& path) {
  PlyHeader header;
  std::string line;
  std::size_t lineno = 0;
  bool saw_format = false;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply") {
    throw ParseError(line_ctx(path, 1) + "missing 'ply' magic line");
  }
  while (true) {
    if (!next_line()) throw ParseError(context(path, "header") + "missing end_header");
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    const auto keyword = tokens[0];
    if (keyword == "end_header") break;
    if (keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "format") {
      if (tokens.size() < 3) throw ParseError(line_ctx(path, lineno) + "malformed format line");
      if (tokens[1] == "ascii") {
        header.encoding = PlyEncoding::Ascii;
      } else if (tokens[1] == "binary_little_endian") {
        header.encoding = PlyEncoding::BinaryLittleEndian;
      } else if (tokens[1] == "binary_big_endian") {
        throw ParseError(line_ctx(path, lineno) + "unsupported PLY encoding binary_big_endian");
      } else {
        throw ParseError(line_ctx(path, lineno) + "unknown PLY format '" + std::string(tokens[1]) + "'");
      }
      saw_format = true;
    } else if (keyword == "element") {
      if (tokens.size() != 3) throw ParseError(line_ctx(path, lineno) + "malformed element line");
      const auto count = parse_integer(tokens[2]);
      if (!count || *count < 0) throw ParseError(line_ctx(path, lineno) + "invalid element count");
      header.elements.push_back({std::string(tokens[1]), static_cast<std::size_t>(*count), {}});
    } else if (keyword == "property") {
      if (header.elements.empty()) {
        throw ParseError(line_ctx(path, lineno) + "property before any element");
      }
      PlyProperty prop;
      if (tokens.size() == 5 && tokens[1] == "list") {
        const auto count_type = parse_scalar(tokens[2]);
        const auto item_type = parse_scalar(tokens[3]);
        if (!count_type || !item_type || !is_integral(*count_type)) {
          throw ParseError(line_ctx(path, lineno) + "malformed list property");
        }
        prop = {std::string(tokens[4]), *item_type, true, *count_type};
      } else if (tokens.size() == 3) {
        const auto type = parse_scalar(tokens[1]);
        if (!type) {
          throw ParseError(line_ctx(path, lineno) + "unknown property type '" + std::string(tokens[1]) + "'");
        }
        prop = {std::string(tokens[2]), *type, false, Scalar::UInt8};
      } else {
        throw ParseError(line_ctx(path, lineno) + "malformed property line");
      }
      header.elements.back().properties.push_back(std::move(prop));
    } else {
      throw ParseError(line_ctx(path, lineno) + "unexpected header keyword '" + std::string(keyword) + "'");
    }
  }
  if (!saw_format) throw ParseError(context(path, "header") + "missing format line");
  header.line_count = lineno;
  return header;
}

double read_binary_scalar(const char* p, Scalar type) {
  switch (type) {
    case Scalar::Int8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
    case Scalar::UInt8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
    case Scalar::Int16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case Scalar::UInt16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case Scalar::Int32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    case Scalar::UInt32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case Scalar::Float32: { float v; std::memcpy(&v, p, 4); return v; }
    case Scalar::Float64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

VertexTable read_ply_vertices(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open file");

  const PlyHeader header = parse_ply_header(in, path);
  const auto vertex_it = std::find_if(header.elements.begin(), header.elements.end(),
                                      [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex_it == header.elements.end()) {
    throw ParseError(context(path, "header") + "no 'vertex' element");
  }

  VertexTable table;
  for (const auto& prop : vertex_it->properties) {
    if (prop.is_list) throw ParseError(context(path, "header") + "list property on vertex element");
    table.columns.push_back(prop);
  }
  table.rows = vertex_it->count;
  table.values.reserve(table.rows * table.columns.size());
  table.where.reserve(table.rows);

  if (header.encoding == PlyEncoding::Ascii) {
    std::string line;
    std::size_t lineno = header.line_count;
    for (const auto& element : header.elements) {
      const bool is_vertex = &element == &*vertex_it;
      for (std::size_t row = 0; row < element.count; ++row) {
        if (!std::getline(in, line)) {
          throw ParseError(line_ctx(path, lineno + 1) + "unexpected end of file in element '" +
                           element.name + "'");
        }
        ++lineno;
        const auto tokens = split_ws(line);
        std::size_t t = 0;
        for (const auto& prop : element.properties) {
          std::size_t items = 1;
          if (prop.is_list) {
            const auto n = t < tokens.size() ? parse_integer(tokens[t]) : std::nullopt;
            if (!n || *n < 0) throw ParseError(line_ctx(path, lineno) + "bad list count");
            items = static_cast<std::size_t>(*n);
            ++t;
          }
          for (std::size_t k = 0; k < items; ++k, ++t) {
            if (t >= tokens.size()) {
              throw ParseError(line_ctx(path, lineno) + "too few values for property '" + prop.name + "'");
            }
            if (!is_vertex) continue;
            const auto v = parse_real(tokens[t]);
            if (!v) {
              throw ParseError(line_ctx(path, lineno) + "cannot parse '" + std::string(tokens[t]) +
                               "' as " + prop.name);
            }
            // Round through float so float properties carry their exact float32 value.
            table.values.push_back(prop.type == Scalar::Float32 ? static_cast<double>(static_cast<float>(*v))
                                                                : *v);
          }
        }
        if (is_vertex) table.where.push_back("line " + std::to_string(lineno));
      }
    }
  } else {
    const std::size_t data_start = static_cast<std::size_t>(in.tellg());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t offset = 0;
    auto need = [&](std::size_t bytes, const std::string& what) {
      if (offset + bytes > data.size()) {
        throw ParseError(context(path, "byte " + std::to_string(data_start + offset)) +
                         "unexpected end of file reading " + what);
      }
    };
    for (const auto& element : header.elements) {
      const bool is_vertex = &element == &*vertex_it;
      for (std::size_t row = 0; row < element.count; ++row) {
        if (is_vertex) table.where.push_back("byte " + std::to_string(data_start + offset));
        for (const auto& prop : element.properties) {
          std::size_t items = 1;
          if (prop.is_list) {
            need(scalar_size(prop.count_type), element.name + " list count");
            const double n = read_binary_scalar(data.data() + offset, prop.count_type);
            offset += scalar_size(prop.count_type);
            if (n < 0) throw ParseError(context(path, "byte " + std::to_string(data_start + offset)) + "negative list count");
            items = static_cast<std::size_t>(n);
          }
          const std::size_t bytes = items * scalar_size(prop.type);
          need(bytes, element.name + "." + prop.name);
          if (is_vertex) table.values.push_back(read_binary_scalar(data.data() + offset, prop.type));
          offset += bytes;
        }
      }
    }
  }
  return table;
}

struct XyzColumns {
  std::size_t x, y, z;
};

XyzColumns require_xyz(const VertexTable& table, const std::filesystem::path& path) {
  const auto x = table.column("x");
  const auto y = table.column("y");
  const auto z = table.column("z");
  if (!x || !y || !z) throw ParseError(context(path, "header") + "vertex element lacks x/y/z properties");
  return {*x, *y, *z};
}

std::vector<Point3> extract_points(const VertexTable& table, const std::filesystem::path& path) {
  const auto cols = require_xyz(table, path);
  std::vector<Point3> points;
  points.reserve(table.rows);
  for (std::size_t r = 0; r < table.rows; ++r) {
    Point3 p(table.at(r, cols.x), table.at(r, cols.y), table.at(r, cols.z));
    if (!p.allFinite()) {
      throw ParseError(context(path, table.where[r]) + "non-finite coordinate in vertex " + std::to_string(r));
    }
    points.push_back(p);
  }
  return points;
}

PointCloud load_ply(const std::filesystem::path& path) {
  const VertexTable table = read_ply_vertices(path);
  PointCloud cloud(extract_points(table, path));
  if (const auto layer_col = table.column("layer")) {
    if (!is_integral(table.columns[*layer_col].type)) {
      throw ParseError(context(path, "header") + "'layer' property must be an integer type");
    }
    std::vector<LayerId> layers;
    layers.reserve(table.rows);
    for (std::size_t r = 0; r < table.rows; ++r) {
      layers.push_back(static_cast<LayerId>(table.at(r, *layer_col)));
    }
    cloud.layers = std::move(layers);
  }
  return cloud;
}

PointCloud load_xyz(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open file");
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    if (tokens.size() < 3) {
      throw ParseError(line_ctx(path, lineno) + "expected 'x y z', got " + std::to_string(tokens.size()) +
                       " value(s)");
    }
    Point3 p;
    for (int c = 0; c < 3; ++c) {
      const auto v = parse_real(tokens[c]);
      if (!v) {
        throw ParseError(line_ctx(path, lineno) + "cannot parse '" + std::string(tokens[c]) + "' as a number");
      }
      if (!std::isfinite(*v)) throw ParseError(line_ctx(path, lineno) + "non-finite coordinate");
      p[c] = *v;
    }
    cloud.points.push_back(p);
  }
  if (in.bad()) throw IoError(path.string() + ": read error");
  return cloud;
}

bool has_ply_magic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open file");
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() >= 3 && std::string_view(magic, 3) == "ply" &&
         (in.gcount() == 3 || magic[3] == '\n' || magic[3] == '\r');
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::string format_float32(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(static_cast<float>(v)));
  return buf;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace

PointCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format) {
  if (!std::filesystem::is_regular_file(path)) throw IoError(path.string() + ": no such file");
  if (format == CloudFormat::Auto) {
    const auto ext = lower_extension(path);
    if (ext == ".ply") {
      format = CloudFormat::Ply;
    } else if (ext == ".xyz" || ext == ".txt") {
      format = CloudFormat::Xyz;
    } else {
      format = has_ply_magic(path) ? CloudFormat::Ply : CloudFormat::Xyz;
    }
  }
  return format == CloudFormat::Ply ? load_ply(path) : load_xyz(path);
}

CloudWriteFormat write_format_for(const std::filesystem::path& path) {
  return lower_extension(path) == ".ply" ? CloudWriteFormat::PlyAscii : CloudWriteFormat::Xyz;
}

void save_point_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudWriteFormat format) {
  cloud.validate();
  auto out = open_for_write(path);
  if (format == CloudWriteFormat::Xyz) {
    char buf[96];
    for (const auto& p : cloud.points) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
      out << buf;
    }
  } else {
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
        << "\nproperty float x\nproperty float y\nproperty float z\n";
    if (cloud.layers) out << "property int layer\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.points[i];
      out << format_float32(p.x()) << ' ' << format_float32(p.y()) << ' ' << format_float32(p.z());
      if (cloud.layers) out << ' ' << (*cloud.layers)[i];
      out << '\n';
    }
  }
  finish_write(out, path);
}

void save_colored_ply(const std::vector<Point3>& points, const std::vector<Rgb>& colors,
                      const std::filesystem::path& path) {
  if (points.size() != colors.size()) {
    throw Error("colored PLY: " + std::to_string(points.size()) + " points but " +
                std::to_string(colors.size()) + " colors");
  }
  auto out = open_for_write(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    out << format_float32(p.x()) << ' ' << format_float32(p.y()) << ' ' << format_float32(p.z()) << ' '
        << int{colors[i][0]} << ' ' << int{colors[i][1]} << ' ' << int{colors[i][2]} << '\n';
  }
  finish_write(out, path);
}

ColoredCloud load_colored_ply(const std::filesystem::path& path) {
  const VertexTable table = read_ply_vertices(path);
  ColoredCloud out;
  out.points = extract_points(table, path);
  const auto r = table.column("red");
  const auto g = table.column("green");
  const auto b = table.column("blue");
  if (!r || !g || !b) throw ParseError(context(path, "header") + "vertex element lacks red/green/blue");
  out.colors.reserve(table.rows);
  for (std::size_t i = 0; i < table.rows; ++i) {
    out.colors.push_back({static_cast<std::uint8_t>(table.at(i, *r)), static_cast<std::uint8_t>(table.at(i, *g)),
                          static_cast<std::uint8_t>(table.at(i, *b))});
  }
  return out;
}

}  // namespace arplace
