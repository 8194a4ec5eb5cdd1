#include "arplace/registration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>
#include <thread>

#include "arplace/error.hpp"

namespace arplace {

namespace {

constexpr double kMinScale = 1e-6;
constexpr double kMaxScale = 1e6;
// Denominator floor for the relative error change, so an exact fit (error at
// rounding level) registers as converged instead of chasing noise.
constexpr double kErrorFloor = 1e-20;

struct Centered {
  Point3 source_mean;
  Point3 target_mean;
  std::vector<Point3> source;
  std::vector<Point3> target;
};

Centered center(std::span<const Point3> source, std::span<const Point3> target) {
  Centered c;
  c.source_mean = Point3::Zero();
  c.target_mean = Point3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    c.source_mean += source[i];
    c.target_mean += target[i];
  }
  c.source_mean /= static_cast<double>(source.size());
  c.target_mean /= static_cast<double>(target.size());
  c.source.reserve(source.size());
  c.target.reserve(target.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    c.source.push_back(source[i] - c.source_mean);
    c.target.push_back(target[i] - c.target_mean);
  }
  return c;
}

/// Optimal yaw for centered pairs: argmax_theta sum q . Ry(theta) p.
double best_yaw(const std::vector<Point3>& p, const std::vector<Point3>& q) {
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    a += q[i].x() * p[i].x() + q[i].z() * p[i].z();
    b += q[i].x() * p[i].z() - q[i].z() * p[i].x();
  }
  return SimilarityTransformY::wrap_angle(std::atan2(b, a));
}

struct UniformFit {
  double theta = 0.0;
  double scale = 1.0;  // unclamped optimum, may be <= 0
  Point3 source_mean;
  Point3 target_mean;
  double source_spread = 0.0;  // sum |p~|^2
};

UniformFit solve_uniform(std::span<const Point3> source, std::span<const Point3> target, bool fix_scale) {
  const Centered c = center(source, target);
  UniformFit fit;
  fit.source_mean = c.source_mean;
  fit.target_mean = c.target_mean;
  fit.theta = best_yaw(c.source, c.target);
  if (fix_scale) return fit;

  const double cs = std::cos(fit.theta);
  const double sn = std::sin(fit.theta);
  double numerator = 0.0;
  for (std::size_t i = 0; i < c.source.size(); ++i) {
    const Point3& p = c.source[i];
    const Point3& q = c.target[i];
    numerator += q.x() * (p.x() * cs + p.z() * sn) + q.y() * p.y() + q.z() * (-p.x() * sn + p.z() * cs);
    fit.source_spread += p.squaredNorm();
  }
  fit.scale = fit.source_spread > 0.0 ? numerator / fit.source_spread : 0.0;
  return fit;
}

SimilarityTransformY finish_uniform(double theta, double scale, const Point3& source_mean,
                                    const Point3& target_mean) {
  const Point3 t = target_mean - scale * rotate_y(theta, source_mean);
  return SimilarityTransformY::uniform(theta, scale, t);
}

struct AnisotropicFit {
  double theta = 0.0;
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();
  Point3 source_mean;
  Point3 target_mean;
};

/// Coordinate descent from `start_scale`/`start_theta`. Every step is an exact
/// block minimizer, so the objective never increases. When `clamp` is set the
/// scale step is projected onto [kMinScale, kMaxScale] (still the exact block
/// minimizer on that box, since the axes decouple); otherwise a non-positive
/// optimum is reported through the returned scale.
AnisotropicFit solve_anisotropic(std::span<const Point3> source, std::span<const Point3> target,
                                 const Eigen::Vector3d& start_scale, std::optional<double> start_theta,
                                 std::size_t max_alt_iterations, bool clamp) {
  const Centered c = center(source, target);
  const std::size_t n = c.source.size();
  AnisotropicFit fit;
  fit.source_mean = c.source_mean;
  fit.target_mean = c.target_mean;
  fit.scale = start_scale;

  Eigen::Vector3d spread = Eigen::Vector3d::Zero();
  for (const auto& p : c.source) spread += p.cwiseAbs2();

  std::vector<Point3> scaled(n);
  auto objective = [&](double theta, const Eigen::Vector3d& s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += (rotate_y(theta, s.cwiseProduct(c.source[i])) - c.target[i]).squaredNorm();
    return sum;
  };

  fit.theta = start_theta.value_or(0.0);
  double previous = objective(fit.theta, fit.scale);
  for (std::size_t iter = 0; iter < max_alt_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) scaled[i] = fit.scale.cwiseProduct(c.source[i]);
    const double theta = best_yaw(scaled, c.target);

    // Undo the rotation on the targets; the axes then separate.
    Eigen::Vector3d cross = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) cross += c.source[i].cwiseProduct(rotate_y(-theta, c.target[i]));
    Eigen::Vector3d scale = cross.cwiseQuotient(spread);
    if (clamp) scale = scale.cwiseMax(kMinScale).cwiseMin(kMaxScale);
    if ((scale.array() <= 0.0).any()) {
      fit.theta = theta;
      fit.scale = scale;
      return fit;
    }

    const double current = objective(theta, scale);
    if (current > previous) break;  // rounding-level increase: keep the previous iterate
    fit.theta = theta;
    fit.scale = scale;
    const bool done = previous - current < 1e-12;
    previous = current;
    if (done) break;
  }
  return fit;
}

SimilarityTransformY finish_anisotropic(const AnisotropicFit& fit) {
  const Point3 t = fit.target_mean - rotate_y(fit.theta, fit.scale.cwiseProduct(fit.source_mean));
  return SimilarityTransformY::per_axis(fit.theta, fit.scale, t);
}

void check_pairs(std::span<const Point3> source, std::span<const Point3> target, std::size_t minimum) {
  if (source.size() != target.size()) {
    throw Error("correspondence sets differ in length (" + std::to_string(source.size()) + " vs " +
                std::to_string(target.size()) + ")");
  }
  if (source.size() < minimum) {
    throw Error("need at least " + std::to_string(minimum) + " correspondences, got " +
                std::to_string(source.size()));
  }
}

double normalizer(const Aabb& target_aabb, Normalization normalization) {
  if (normalization == Normalization::None) return 1.0;
  const double diagonal = target_aabb.diagonal();
  if (!(diagonal > 0.0)) throw Error("target bounding box has zero diagonal; cannot normalize placement error");
  return diagonal;
}

struct Matches {
  std::vector<Point3> targets;
  std::vector<double> distances;
};

Matches match(const std::vector<Point3>& moved, const NNIndex& index) {
  Matches m;
  m.targets.reserve(moved.size());
  m.distances.reserve(moved.size());
  for (const auto& p : moved) {
    const Neighbor nb = index.nearest(p);
    m.targets.push_back(index.points()[nb.index]);
    m.distances.push_back(nb.distance);
  }
  return m;
}

PlacementError score(const std::vector<double>& distances, double norm) {
  PlacementError out;
  out.per_point.reserve(distances.size());
  double sum = 0.0;
  for (const double d : distances) {
    const double e = d / norm;
    out.per_point.push_back(e);
    sum += e * e;
  }
  out.error = sum / static_cast<double>(distances.size());
  return out;
}

bool has_spread(const std::vector<Point3>& points) {
  return std::any_of(points.begin(), points.end(), [&](const Point3& p) { return p != points.front(); });
}

struct Problem {
  const PointCloud& source;
  const NNIndex& index;
  double norm;
};

/// Refit against the current matches, honoring clamps and the trim hook.
/// Returns whether the scale was clamped.
bool refit(const Problem& problem, const Matches& matches, const IcpParams& params,
           SimilarityTransformY& transform) {
  std::vector<Point3> src;
  std::vector<Point3> dst;
  std::span<const Point3> src_view = problem.source.points;
  std::span<const Point3> dst_view = matches.targets;
  if (params.trim_distance) {
    for (std::size_t i = 0; i < matches.targets.size(); ++i) {
      if (matches.distances[i] / problem.norm <= *params.trim_distance) {
        src.push_back(problem.source.points[i]);
        dst.push_back(matches.targets[i]);
      }
    }
    if (src.size() < 3) return false;  // too few survivors: keep the estimate
    src_view = src;
    dst_view = dst;
  }

  if (!params.fix_scale && !params.keep_aspect_ratio) {
    const auto fit = solve_anisotropic(src_view, dst_view, transform.scale, transform.theta,
                                       params.max_alt_iterations, true);
    transform = finish_anisotropic(fit);
    return (fit.scale.array() <= kMinScale).any() || (fit.scale.array() >= kMaxScale).any();
  }

  const UniformFit fit = solve_uniform(src_view, dst_view, params.fix_scale);
  const double scale = std::clamp(fit.scale, kMinScale, kMaxScale);
  transform = finish_uniform(fit.theta, scale, fit.source_mean, fit.target_mean);
  return !params.fix_scale && scale != fit.scale;
}

RegistrationResult run_icp(const Problem& problem, const SimilarityTransformY& init, const IcpParams& params) {
  RegistrationResult result;
  result.transform = init;
  if (params.fix_scale) result.transform.scale = Eigen::Vector3d::Ones();

  auto evaluate = [&](const SimilarityTransformY& t, Matches& matches) {
    std::vector<Point3> moved;
    moved.reserve(problem.source.size());
    for (const auto& p : problem.source.points) moved.push_back(t.apply(p));
    matches = match(moved, problem.index);
    return score(matches.distances, problem.norm);
  };

  Matches matches;
  PlacementError current = evaluate(result.transform, matches);
  result.error_history.push_back(current.error);
  bool clamped = false;

  for (std::size_t iter = 1; iter <= params.max_iterations; ++iter) {
    SimilarityTransformY next = result.transform;
    clamped = refit(problem, matches, params, next);
    Matches next_matches;
    PlacementError next_error = evaluate(next, next_matches);

    const double change = std::abs(current.error - next_error.error) / std::max(current.error, kErrorFloor);
    result.transform = next;
    result.iterations = iter;
    result.error_history.push_back(next_error.error);
    current = std::move(next_error);
    matches = std::move(next_matches);
    if (change < params.rel_tolerance) {
      result.converged = true;
      break;
    }
  }
  if (clamped) result.converged = false;
  result.error = current.error;
  result.per_point_errors = std::move(current.per_point);
  return result;
}

void check_icp_inputs(const PointCloud& source, const PointCloud& target, const IcpParams& params) {
  params.validate();
  if (source.size() < 3 || target.size() < 3) {
    throw Error("registration needs at least 3 points in each cloud (source " + std::to_string(source.size()) +
                ", target " + std::to_string(target.size()) + ")");
  }
  if (!params.fix_scale && !has_spread(source.points)) {
    throw Error("source points are all identical; scale is undefined (use fix_scale)");
  }
}

}  // namespace

void IcpParams::validate() const {
  if (max_iterations < 1) throw Error("max_iterations must be at least 1");
  if (!(rel_tolerance > 0.0)) throw Error("rel_tolerance must be positive");
  if (starts < 1) throw Error("starts must be at least 1");
  if (trim_distance && !(*trim_distance > 0.0)) throw Error("trim_distance must be positive");
  if (max_alt_iterations < 1) throw Error("max_alt_iterations must be at least 1");
}

SimilarityTransformY fit_similarity_y(std::span<const Point3> source, std::span<const Point3> target,
                                      bool fix_scale) {
  check_pairs(source, target, 1);
  const UniformFit fit = solve_uniform(source, target, fix_scale);
  if (!fix_scale) {
    if (!(fit.source_spread > 0.0)) {
      throw Error("source points are all identical; scale is undefined (use fix_scale)");
    }
    if (!(fit.scale > 0.0)) {
      throw Error("optimal scale is not positive (" + std::to_string(fit.scale) + "); correspondences are degenerate");
    }
  }
  return finish_uniform(fit.theta, fix_scale ? 1.0 : fit.scale, fit.source_mean, fit.target_mean);
}

SimilarityTransformY fit_anisotropic_y(std::span<const Point3> source, std::span<const Point3> target,
                                       std::size_t max_alt_iterations) {
  check_pairs(source, target, 4);
  if (max_alt_iterations < 1) throw Error("max_alt_iterations must be at least 1");
  const Point3 mean = centroid(std::vector<Point3>(source.begin(), source.end()));
  Eigen::Vector3d spread = Eigen::Vector3d::Zero();
  for (const auto& p : source) spread += (p - mean).cwiseAbs2();
  for (int axis = 0; axis < 3; ++axis) {
    if (!(spread[axis] > 0.0)) {
      throw Error(std::string("source has zero variance along ") + "xyz"[axis] + "; per-axis scale is undefined");
    }
  }
  const auto fit = solve_anisotropic(source, target, Eigen::Vector3d::Ones(), std::nullopt, max_alt_iterations, false);
  if ((fit.scale.array() <= 0.0).any()) throw Error("per-axis fit produced a non-positive scale");
  return finish_anisotropic(fit);
}

double correspondence_objective(const SimilarityTransformY& transform, std::span<const Point3> source,
                                std::span<const Point3> target) {
  check_pairs(source, target, 0);
  double sum = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) sum += (transform.apply(source[i]) - target[i]).squaredNorm();
  return sum;
}

PlacementError placement_error(const PointCloud& source, const NNIndex& target_index, const Aabb& target_aabb,
                               Normalization normalization) {
  if (source.empty()) throw Error("placement error of an empty source cloud");
  const double norm = normalizer(target_aabb, normalization);
  return score(match(source.points, target_index).distances, norm);
}

PlacementError placement_error(const PointCloud& source, const PointCloud& target, Normalization normalization) {
  const NNIndex index(target);
  return placement_error(source, index, aabb(target), normalization);
}

RegistrationResult icp(const PointCloud& source, const PointCloud& target, const SimilarityTransformY& init,
                       const IcpParams& params) {
  check_icp_inputs(source, target, params);
  const NNIndex index(target);
  const Problem problem{source, index, normalizer(aabb(target), params.normalization)};
  return run_icp(problem, init, params);
}

std::vector<SimilarityTransformY> multi_start_inits(const PointCloud& source, const PointCloud& target,
                                                    const IcpParams& params) {
  params.validate();
  const double source_diag = aabb(source).diagonal();
  const double target_diag = aabb(target).diagonal();
  double scale = 1.0;
  if (!params.fix_scale) {
    if (!(source_diag > 0.0)) throw Error("source points are all identical; scale is undefined (use fix_scale)");
    scale = std::clamp(target_diag / source_diag, kMinScale, kMaxScale);
  }
  const Point3 source_mean = centroid(source);
  const Point3 target_mean = centroid(target);
  const bool per_axis = !params.fix_scale && !params.keep_aspect_ratio;

  std::vector<SimilarityTransformY> inits;
  inits.reserve(params.starts);
  for (std::size_t k = 0; k < params.starts; ++k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(params.starts);
    auto init = finish_uniform(SimilarityTransformY::wrap_angle(theta), scale, source_mean, target_mean);
    init.anisotropic = per_axis;
    inits.push_back(init);
  }
  return inits;
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("ARPLACE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

RegistrationResult multi_start_icp(const PointCloud& source, const PointCloud& target, const IcpParams& params) {
  check_icp_inputs(source, target, params);
  const auto inits = multi_start_inits(source, target, params);
  const NNIndex index(target);
  const Problem problem{source, index, normalizer(aabb(target), params.normalization)};

  std::vector<RegistrationResult> results(inits.size());
  const std::size_t workers = std::min(inits.size(), params.threads > 0 ? params.threads : default_thread_count());
  if (workers <= 1) {
    for (std::size_t k = 0; k < inits.size(); ++k) results[k] = run_icp(problem, inits[k], params);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        (void)w;
        for (std::size_t k = next++; k < inits.size(); k = next++) {
          try {
            results[k] = run_icp(problem, inits[k], params);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < results.size(); ++k) {
    if (results[k].error < results[best].error) best = k;
  }
  RegistrationResult winner = std::move(results[best]);
  winner.start_index = best;
  return winner;
}

}  // namespace arplace
