#include "arplace/cli.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "arplace/error.hpp"
#include "arplace/evaluation.hpp"
#include "arplace/json_writer.hpp"
#include "arplace/mesh.hpp"
#include "arplace/point_cloud_io.hpp"
#include "arplace/registration.hpp"
#include "arplace/sampling.hpp"

namespace arplace {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IcpFlags {
  std::size_t max_iter = IcpParams{}.max_iterations;
  double tol = IcpParams{}.rel_tolerance;
  std::size_t starts = IcpParams{}.starts;
  bool fix_scale = false;
  bool no_keep_aspect_ratio = false;
  std::string normalization = "target_diagonal";

  void attach(CLI::App* cmd) {
    cmd->add_option("--max-iter", max_iter, "ICP iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--tol", tol, "relative error-change threshold")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--starts", starts, "evenly spaced yaw initializations")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--fix-scale", fix_scale, "keep scale at 1");
    cmd->add_flag("--no-keep-aspect-ratio", no_keep_aspect_ratio, "fit a separate scale per axis");
    cmd->add_option("--normalization", normalization, "error normalization")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "target_diagonal"}));
  }

  IcpParams params() const {
    IcpParams p;
    p.max_iterations = max_iter;
    p.rel_tolerance = tol;
    p.starts = starts;
    p.fix_scale = fix_scale;
    p.keep_aspect_ratio = !no_keep_aspect_ratio;
    p.normalization = normalization == "none" ? Normalization::None : Normalization::TargetDiagonal;
    return p;
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

LayerMethods parse_layer_spec(const std::string& text) {
  LayerMethods methods;
  for (const auto& entry : split_list(text)) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--layer-spec entry '" + entry + "' is not layer=method");
    const std::string layer = entry.substr(0, eq);
    const std::string method = entry.substr(eq + 1);
    if (method == "surface") {
      methods[layer] = SampleMethod::Surface;
    } else if (method == "support") {
      methods[layer] = SampleMethod::Support;
    } else if (method == "ignore") {
      methods[layer] = SampleMethod::Ignore;
    } else {
      throw UsageError("--layer-spec: unknown method '" + method + "' for layer '" + layer + "'");
    }
  }
  return methods;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Samples virtual scenes, places them into physical point clouds and evaluates placements",
               "arplace"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--seed", seed, "seed for every random draw")->capture_default_str();
  app.add_flag("--quiet", quiet, "suppress progress output");

  // sample
  auto* sample = app.add_subcommand("sample", "sample a point cloud from an OBJ scene");
  std::string mesh_path, sample_out, method = "surface", include_layers, exclude_layers, layer_spec;
  std::size_t n_points = 1000;
  bool include_given = false;
  sample->add_option("--mesh", mesh_path, "input OBJ scene")->required();
  sample->add_option("--n", n_points, "number of surface samples")->capture_default_str();
  sample->add_option("--method", method, "sampling procedure")
      ->capture_default_str()
      ->check(CLI::IsMember({"surface", "support", "mixed"}));
  auto* include_opt = sample->add_option("--include-layers", include_layers, "comma-separated layers to keep");
  sample->add_option("--exclude-layers", exclude_layers, "comma-separated layers to drop");
  sample->add_option("--layer-spec", layer_spec, "per-layer methods for --method mixed: layer=surface|support|ignore,...");
  sample->add_option("--out", sample_out, "output cloud (.ply or .xyz)")->required();

  // register
  auto* reg = app.add_subcommand("register", "place a virtual cloud into a physical cloud");
  std::string reg_source, reg_target, reg_out, reg_heatmap;
  IcpFlags reg_flags;
  reg->add_option("--source", reg_source, "virtual scene cloud")->required();
  reg->add_option("--target", reg_target, "physical scene cloud")->required();
  reg->add_option("--out", reg_out, "transform JSON")->required();
  reg->add_option("--heatmap", reg_heatmap, "optional per-point error heatmap PLY");
  reg_flags.attach(reg);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "place a virtual cloud into every cloud of a dataset");
  std::string eval_source, eval_dataset, eval_pattern = "*.ply", eval_out, eval_heatmap_dir;
  std::size_t downsample = 1000;
  IcpFlags eval_flags;
  eval->add_option("--source", eval_source, "virtual scene cloud")->required();
  eval->add_option("--dataset", eval_dataset, "directory of physical scene clouds")->required();
  eval->add_option("--pattern", eval_pattern, "file name glob")->capture_default_str();
  eval->add_option("--downsample", downsample, "points kept per cloud")->capture_default_str();
  eval->add_option("--out", eval_out, "report JSON")->required();
  eval->add_option("--heatmap-dir", eval_heatmap_dir, "directory for per-scene heatmap PLYs");
  eval_flags.attach(eval);

  // heatmap
  auto* heat = app.add_subcommand("heatmap", "color a virtual cloud by placement error under a given transform");
  std::string heat_source, heat_target, heat_transform, heat_out, heat_norm = "target_diagonal";
  heat->add_option("--source", heat_source, "virtual scene cloud")->required();
  heat->add_option("--target", heat_target, "physical scene cloud")->required();
  heat->add_option("--transform", heat_transform, "transform JSON from `register`")->required();
  heat->add_option("--out", heat_out, "heatmap PLY")->required();
  heat->add_option("--normalization", heat_norm, "error normalization")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "target_diagonal"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "arplace: " << e.what() << "\n";
    return kExitUsage;
  }
  include_given = include_opt->count() > 0;

  auto progress = [&](const std::string& msg) {
    if (!quiet) err << msg << "\n";
  };

  try {
    if (*sample) {
      const SceneMesh mesh = load_mesh(mesh_path);
      LayerFilter filter;
      if (include_given) {
        const auto layers = split_list(include_layers);
        filter.include = std::set<std::string>(layers.begin(), layers.end());
      }
      for (const auto& l : split_list(exclude_layers)) filter.exclude.insert(l);
      if (!layer_spec.empty() && method != "mixed") throw UsageError("--layer-spec requires --method mixed");

      PointCloud cloud;
      if (method == "surface") {
        cloud = surface_sample(mesh, n_points, seed, filter);
      } else if (method == "support") {
        cloud = support_points(mesh, filter);
      } else {
        cloud = sample_scene(mesh, parse_layer_spec(layer_spec), n_points, seed, filter);
      }
      save_point_cloud(cloud, sample_out, write_format_for(sample_out));
      progress("sampled " + std::to_string(cloud.size()) + " points from " + std::to_string(mesh.objects.size()) +
               " object(s) -> " + sample_out);
    } else if (*reg) {
      const PointCloud source = load_point_cloud(reg_source);
      const PointCloud target = load_point_cloud(reg_target);
      const IcpParams params = reg_flags.params();
      progress("registering " + std::to_string(source.size()) + " source points to " +
               std::to_string(target.size()) + " target points");
      const RegistrationResult result = multi_start_icp(source, target, params);
      write_text_file(reg_out, transform_to_json(result.transform));
      if (!reg_heatmap.empty()) export_heatmap(source, result.transform, result.per_point_errors, reg_heatmap);
      std::ostringstream msg;
      msg.precision(6);
      msg << "error " << result.error << " after " << result.iterations << " iteration(s), start "
          << result.start_index << (result.converged ? ", converged" : ", NOT converged");
      progress(msg.str());
    } else if (*eval) {
      const PointCloud source = load_point_cloud(eval_source);
      const DatasetManifest manifest = scan_dataset(eval_dataset, eval_pattern);
      EvaluationOptions options;
      options.downsample_n = downsample;
      options.seed = seed;
      options.source_path = eval_source;
      if (!eval_heatmap_dir.empty()) options.heatmap_dir = eval_heatmap_dir;
      progress("evaluating against " + std::to_string(manifest.scenes.size()) + " scene(s)");
      const EvaluationReport report = evaluate_dataset(source, manifest, eval_flags.params(), options);
      write_report(report, eval_out);
      for (const auto& s : report.scenes) {
        if (!s.result) progress("  " + s.scene_id + ": FAILED: " + s.error_message);
      }
      progress("best " + report.best + ", worst " + report.worst + " -> " + eval_out);
    } else if (*heat) {
      const PointCloud source = load_point_cloud(heat_source);
      const PointCloud target = load_point_cloud(heat_target);
      const SimilarityTransformY transform = transform_from_json(read_text_file(heat_transform));
      const Normalization norm = heat_norm == "none" ? Normalization::None : Normalization::TargetDiagonal;
      const PlacementError placement = placement_error(apply_transform(transform, source), target, norm);
      export_heatmap(source, transform, placement.per_point, heat_out);
      std::ostringstream msg;
      msg.precision(6);
      msg << "error " << placement.error << " -> " << heat_out;
      progress(msg.str());
    }
  } catch (const UsageError& e) {
    err << "arplace: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "arplace: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}

}  // namespace arplace
