#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "arplace/point_cloud.hpp"

namespace arplace {

enum class CloudFormat { Auto, Ply, Xyz };
enum class CloudWriteFormat { PlyAscii, Xyz };

/// Reads PLY (ascii or binary_little_endian; vertex properties x, y, z of any
/// numeric type plus an optional integer `layer`) or XYZ text. `Auto` picks
/// by extension, falling back to sniffing the `ply` magic line.
PointCloud load_point_cloud(const std::filesystem::path& path,
                            CloudFormat format = CloudFormat::Auto);

/// PLY output uses float32 coordinates (and `int layer` when layers are set);
/// XYZ output uses 17 significant digits so doubles round-trip exactly.
void save_point_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                      CloudWriteFormat format = CloudWriteFormat::PlyAscii);

/// Picks PLY for `.ply` and XYZ for everything else.
CloudWriteFormat write_format_for(const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;

/// Ascii PLY with float x/y/z and uchar red/green/blue per vertex.
void save_colored_ply(const std::vector<Point3>& points, const std::vector<Rgb>& colors,
                      const std::filesystem::path& path);

struct ColoredCloud {
  std::vector<Point3> points;
  std::vector<Rgb> colors;
};

/// Reads back a PLY written by save_colored_ply (or any PLY carrying
/// red/green/blue vertex properties).
ColoredCloud load_colored_ply(const std::filesystem::path& path);

}  // namespace arplace
