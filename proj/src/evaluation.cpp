#include "arplace/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "arplace/error.hpp"
#include "arplace/json_writer.hpp"
#include "arplace/random.hpp"

namespace arplace {

bool glob_match(std::string_view pattern, std::string_view name) {
  std::size_t p = 0;
  std::size_t n = 0;
  std::size_t star = std::string_view::npos;
  std::size_t resume = 0;

  // Length of the bracket expression starting at pattern[i] == '[', or 0 if
  // it is unterminated (then '[' is literal). Sets `matched` for character c.
  auto bracket = [&](std::size_t i, char c, bool& matched) -> std::size_t {
    std::size_t j = i + 1;
    bool negate = false;
    if (j < pattern.size() && (pattern[j] == '!' || pattern[j] == '^')) {
      negate = true;
      ++j;
    }
    bool hit = false;
    bool first = true;
    while (j < pattern.size() && (first || pattern[j] != ']')) {
      first = false;
      if (j + 2 < pattern.size() && pattern[j + 1] == '-' && pattern[j + 2] != ']') {
        if (pattern[j] <= c && c <= pattern[j + 2]) hit = true;
        j += 3;
      } else {
        if (pattern[j] == c) hit = true;
        ++j;
      }
    }
    if (j >= pattern.size()) return 0;
    matched = hit != negate;
    return j - i + 1;
  };

  while (n < name.size()) {
    if (p < pattern.size()) {
      const char pc = pattern[p];
      if (pc == '*') {
        star = p++;
        resume = n;
        continue;
      }
      if (pc == '?') {
        ++p;
        ++n;
        continue;
      }
      if (pc == '[') {
        bool matched = false;
        const std::size_t len = bracket(p, name[n], matched);
        if (len > 0) {
          if (matched) {
            p += len;
            ++n;
            continue;
          }
        } else if (name[n] == '[') {
          ++p;
          ++n;
          continue;
        }
      } else if (pc == name[n]) {
        ++p;
        ++n;
        continue;
      }
    }
    if (star == std::string_view::npos) return false;
    p = star + 1;
    n = ++resume;
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

DatasetManifest scan_dataset(const std::filesystem::path& dir, const std::string& pattern) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + ": not a directory");
  DatasetManifest manifest;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (glob_match(pattern, name)) manifest.scenes.push_back({entry.path().stem().string(), entry.path()});
  }
  if (manifest.scenes.empty()) {
    throw Error(dir.string() + ": no files match '" + pattern + "'");
  }
  std::sort(manifest.scenes.begin(), manifest.scenes.end(),
            [](const SceneEntry& a, const SceneEntry& b) { return a.scene_id < b.scene_id; });
  for (std::size_t i = 1; i < manifest.scenes.size(); ++i) {
    if (manifest.scenes[i].scene_id == manifest.scenes[i - 1].scene_id) {
      throw Error(dir.string() + ": scene id '" + manifest.scenes[i].scene_id + "' matches more than one file (" +
                  manifest.scenes[i - 1].path.filename().string() + ", " +
                  manifest.scenes[i].path.filename().string() + ")");
    }
  }
  return manifest;
}

std::vector<std::string> rank_scenes(const std::vector<SceneResult>& scenes) {
  std::vector<const SceneResult*> ok;
  for (const auto& s : scenes) {
    if (s.result) ok.push_back(&s);
  }
  std::sort(ok.begin(), ok.end(), [](const SceneResult* a, const SceneResult* b) {
    if (a->result->error != b->result->error) return a->result->error < b->result->error;
    return a->scene_id < b->scene_id;
  });
  std::vector<std::string> ranking;
  ranking.reserve(ok.size());
  for (const auto* s : ok) ranking.push_back(s->scene_id);
  return ranking;
}

double heatmap_scale(const std::vector<double>& per_point) {
  if (per_point.empty()) return 0.0;
  std::vector<double> sorted = per_point;
  std::sort(sorted.begin(), sorted.end());
  // ceil(0.95 n) in integers: (95 n + 99) / 100.
  const std::size_t rank = (95 * sorted.size() + 99) / 100;
  return sorted[rank - 1];
}

std::vector<Rgb> heatmap_colors(const std::vector<double>& per_point) {
  const double e_max = heatmap_scale(per_point);
  std::vector<Rgb> colors;
  colors.reserve(per_point.size());
  for (const double e : per_point) {
    const double w = e_max > 0.0 ? std::clamp(e / e_max, 0.0, 1.0) : 0.0;
    colors.push_back({static_cast<std::uint8_t>(std::lround(255.0 * w)), 0,
                      static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - w)))});
  }
  return colors;
}

void export_heatmap(const PointCloud& source, const SimilarityTransformY& transform,
                    const std::vector<double>& per_point, const std::filesystem::path& path) {
  if (per_point.size() != source.size()) {
    throw Error("heatmap: " + std::to_string(per_point.size()) + " error values for " +
                std::to_string(source.size()) + " points");
  }
  save_colored_ply(apply_transform(transform, source).points, heatmap_colors(per_point), path);
}

EvaluationReport evaluate_dataset(const PointCloud& source, const DatasetManifest& manifest,
                                  const IcpParams& params, const EvaluationOptions& options) {
  if (source.empty()) throw Error("evaluation: source cloud is empty");
  if (manifest.scenes.empty()) throw Error("evaluation: dataset manifest is empty");
  params.validate();

  EvaluationReport report;
  report.source = {options.source_path, source.size(), options.seed, options.downsample_n};
  report.params = params;
  if (options.heatmap_dir) std::filesystem::create_directories(*options.heatmap_dir);

  for (const auto& scene : manifest.scenes) {
    SceneResult entry{scene.scene_id, scene.path, std::nullopt, std::nullopt, {}};
    try {
      const PointCloud target_full = load_point_cloud(scene.path);
      // One seed for both clouds: identical clouds keep identical subsets.
      const std::uint64_t scene_seed = derive_seed(options.seed, scene.scene_id);
      const PointCloud src = random_downsample(source, options.downsample_n, scene_seed);
      const PointCloud target = random_downsample(target_full, options.downsample_n, scene_seed);
      RegistrationResult result = multi_start_icp(src, target, params);
      if (!std::isfinite(result.error)) throw Error("registration produced a non-finite error");
      if (options.heatmap_dir) {
        const auto heatmap_path = *options.heatmap_dir / (scene.scene_id + ".ply");
        export_heatmap(src, result.transform, result.per_point_errors, heatmap_path);
        entry.heatmap = heatmap_path;
      }
      entry.result = std::move(result);
    } catch (const std::exception& e) {
      entry.error_message = e.what();
    }
    report.scenes.push_back(std::move(entry));
  }

  report.ranking = rank_scenes(report.scenes);
  if (report.ranking.empty()) {
    throw Error("evaluation: every scene failed (first: " + report.scenes.front().scene_id + ": " +
                report.scenes.front().error_message + ")");
  }
  report.best = report.ranking.front();
  report.worst = report.ranking.back();
  return report;
}

nlohmann::ordered_json params_json(const IcpParams& params) {
  nlohmann::ordered_json j;
  j["max_iterations"] = params.max_iterations;
  j["rel_tolerance"] = params.rel_tolerance;
  j["fix_scale"] = params.fix_scale;
  j["keep_aspect_ratio"] = params.keep_aspect_ratio;
  j["starts"] = params.starts;
  j["normalization"] = params.normalization == Normalization::None ? "none" : "target_diagonal";
  j["trim_distance"] = params.trim_distance ? nlohmann::ordered_json(*params.trim_distance) : nullptr;
  j["max_alt_iterations"] = params.max_alt_iterations;
  return j;
}

nlohmann::ordered_json report_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["source"] = {{"path", report.source.path},
                 {"points", report.source.points},
                 {"seed", report.source.seed},
                 {"downsample", report.source.downsample}};
  j["params"] = params_json(report.params);

  auto scenes = nlohmann::ordered_json::array();
  auto errors = nlohmann::ordered_json::array();
  for (const auto& s : report.scenes) {
    nlohmann::ordered_json e;
    e["scene_id"] = s.scene_id;
    if (s.result) {
      e["error"] = s.result->error;
      e["converged"] = s.result->converged;
      e["iterations"] = s.result->iterations;
      e["start_index"] = s.result->start_index;
      e["transform"] = transform_json(s.result->transform);
      if (s.heatmap) e["heatmap"] = s.heatmap->string();
    } else {
      e["error_message"] = s.error_message;
      errors.push_back({{"scene_id", s.scene_id}, {"message", s.error_message}});
    }
    scenes.push_back(std::move(e));
  }
  j["scenes"] = std::move(scenes);
  j["ranking"] = report.ranking;
  j["best"] = report.best;
  j["worst"] = report.worst;
  j["errors"] = std::move(errors);
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(path.string() + ": write failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_report(const EvaluationReport& report, const std::filesystem::path& path) {
  write_text_file(path, write_json(report_json(report)));
}

}  // namespace arplace
