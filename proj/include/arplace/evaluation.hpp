#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arplace/point_cloud_io.hpp"
#include "arplace/registration.hpp"

namespace arplace {

struct SceneEntry {
  std::string scene_id;  // file stem
  std::filesystem::path path;
};

/// Physical scenes to evaluate, sorted by scene_id; ids are unique.
struct DatasetManifest {
  std::vector<SceneEntry> scenes;
};

/// Files in `dir` (non-recursive) whose names match the glob `pattern`
/// (`*`, `?` and `[...]` classes). Throws when nothing matches or two files
/// share a stem.
DatasetManifest scan_dataset(const std::filesystem::path& dir, const std::string& pattern = "*.ply");

/// fnmatch-style match of a whole file name.
bool glob_match(std::string_view pattern, std::string_view name);

struct SceneResult {
  std::string scene_id;
  std::filesystem::path path;
  std::optional<RegistrationResult> result;  // empty when the scene failed
  std::optional<std::filesystem::path> heatmap;
  std::string error_message;
};

struct SourceInfo {
  std::string path;
  std::size_t points = 0;
  std::uint64_t seed = 0;
  std::size_t downsample = 0;
};

struct EvaluationReport {
  SourceInfo source;
  IcpParams params;
  std::vector<SceneResult> scenes;   // manifest order
  std::vector<std::string> ranking;  // successful scenes, ascending error
  std::string best;
  std::string worst;
};

struct EvaluationOptions {
  std::size_t downsample_n = 1000;
  std::uint64_t seed = 0;
  // When set, a heatmap PLY per scene is written to <dir>/<scene_id>.ply.
  std::optional<std::filesystem::path> heatmap_dir;
  std::string source_path;  // echoed in the report only
};

/// Registers `source` against every scene. Both clouds of a scene are
/// downsampled with the seed derive_seed(seed, scene_id), so the per-scene
/// outcome does not depend on which other scenes are present. Scenes that
/// fail are kept as errored entries; throws only when every scene fails.
EvaluationReport evaluate_dataset(const PointCloud& source, const DatasetManifest& manifest,
                                  const IcpParams& params, const EvaluationOptions& options);

/// Ascending by error, ties by scene_id.
std::vector<std::string> rank_scenes(const std::vector<SceneResult>& scenes);

/// Blue (0,0,255) at 0 to red (255,0,0) at the 95th percentile (nearest-rank)
/// of `per_point`; larger values clamp to red. All blue when that percentile
/// is 0.
std::vector<Rgb> heatmap_colors(const std::vector<double>& per_point);

/// Nearest-rank 95th percentile: sorted[ceil(0.95 n) - 1].
double heatmap_scale(const std::vector<double>& per_point);

/// Writes the transformed source as an ascii PLY colored by heatmap_colors.
void export_heatmap(const PointCloud& source, const SimilarityTransformY& transform,
                    const std::vector<double>& per_point, const std::filesystem::path& path);

nlohmann::ordered_json report_json(const EvaluationReport& report);
nlohmann::ordered_json params_json(const IcpParams& params);

/// Deterministic JSON (stable key order, 17 significant digits).
void write_report(const EvaluationReport& report, const std::filesystem::path& path);

/// Writes `text` to `path`, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace arplace
