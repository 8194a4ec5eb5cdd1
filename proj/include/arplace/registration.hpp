#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "arplace/nn_index.hpp"
#include "arplace/point_cloud.hpp"
#include "arplace/transform.hpp"

namespace arplace {

enum class Normalization { None, TargetDiagonal };

struct IcpParams {
  std::size_t max_iterations = 100;
  double rel_tolerance = 1e-6;
  bool fix_scale = false;
  // false releases the scale to per-axis (sx, sy, sz); ignored with fix_scale.
  bool keep_aspect_ratio = true;
  std::size_t starts = 8;
  Normalization normalization = Normalization::TargetDiagonal;
  // Correspondences whose normalized distance exceeds this are left out of
  // the refit. Off by default; enabling it voids the monotonicity guarantee.
  std::optional<double> trim_distance;
  // Coordinate-descent cap for the per-axis fit.
  std::size_t max_alt_iterations = 1000;
  // Worker threads for multi-start; 0 = ARPLACE_THREADS or hardware concurrency.
  std::size_t threads = 0;

  /// Throws arplace::Error when a field is out of range.
  void validate() const;
};

struct RegistrationResult {
  SimilarityTransformY transform;
  double error = 0.0;                   // mean of squared normalized distances
  std::vector<double> per_point_errors;  // normalized distance per source point
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t start_index = 0;
  // error_history[0] is the error at the initial transform, entry k the error
  // after the k-th refit.
  std::vector<double> error_history;
};

/// Global least-squares minimizer of sum |s Ry(theta) p_i + t - q_i|^2 over
/// (theta, s > 0, t), in closed form. With fix_scale, s = 1.
///
/// Throws on empty or mismatched input, on a source with no spread when the
/// scale is free, and when the optimal scale is not positive.
SimilarityTransformY fit_similarity_y(std::span<const Point3> source, std::span<const Point3> target,
                                      bool fix_scale = false);

/// Per-axis variant: minimizes sum |Ry(theta) diag(s) p_i + t - q_i|^2 by
/// alternating the closed-form theta step with the closed-form per-axis scale
/// step. Needs at least 4 pairs and spread on every source axis.
SimilarityTransformY fit_anisotropic_y(std::span<const Point3> source, std::span<const Point3> target,
                                       std::size_t max_alt_iterations = 1000);

/// sum_i |T p_i - q_i|^2.
double correspondence_objective(const SimilarityTransformY& transform, std::span<const Point3> source,
                                std::span<const Point3> target);

struct PlacementError {
  double error = 0.0;
  std::vector<double> per_point;
};

/// For each source point, the distance to its nearest target point divided
/// by the target diagonal (or by 1); error is the mean of the squares.
PlacementError placement_error(const PointCloud& source, const NNIndex& target_index, const Aabb& target_aabb,
                               Normalization normalization);

/// Convenience overload that indexes `target` itself.
PlacementError placement_error(const PointCloud& source, const PointCloud& target, Normalization normalization);

/// Closest-point ICP restricted to the Y-rotation similarity group.
///
/// Composition convention: every refit solves for the full transform from the
/// ORIGINAL source points to their current matches, so the estimate is never
/// an accumulated product of increments.
RegistrationResult icp(const PointCloud& source, const PointCloud& target, const SimilarityTransformY& init,
                       const IcpParams& params = {});

/// Initial transforms used by multi_start_icp: theta_k = 2 pi k / starts,
/// scale = target diagonal / source diagonal (1 with fix_scale), translation
/// mapping the source centroid onto the target centroid.
std::vector<SimilarityTransformY> multi_start_inits(const PointCloud& source, const PointCloud& target,
                                                    const IcpParams& params);

/// Runs icp from every multi_start_inits entry and keeps the lowest final
/// error (ties to the lowest start index). Starts may run in parallel; the
/// result is identical to a sequential run.
RegistrationResult multi_start_icp(const PointCloud& source, const PointCloud& target,
                                   const IcpParams& params = {});

/// Thread count used when IcpParams::threads is 0.
std::size_t default_thread_count();

}  // namespace arplace
