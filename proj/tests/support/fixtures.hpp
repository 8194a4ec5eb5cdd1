#pragma once

// Shared fixtures and reference oracles for the test suites. The oracles here
// deliberately avoid the library's own solvers so they can check them.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

#include "arplace/point_cloud.hpp"
#include "arplace/random.hpp"
#include "arplace/transform.hpp"

namespace arplace::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("arplace_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline PointCloud random_box_cloud(std::size_t n, std::uint64_t seed, double extent = 1.0) {
  Rng rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(0.0, extent);
    const double y = rng.uniform(0.0, extent);
    const double z = rng.uniform(0.0, extent);
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

inline std::vector<Point3> random_points(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<Point3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(lo, hi);
    const double y = rng.uniform(lo, hi);
    const double z = rng.uniform(lo, hi);
    pts.emplace_back(x, y, z);
  }
  return pts;
}

/// Independent spelling of the yaw rotation (matrix form).
inline Point3 oracle_rotate(double theta, const Point3& p) {
  Eigen::Matrix3d r;
  r << std::cos(theta), 0.0, std::sin(theta),
       0.0, 1.0, 0.0,
       -std::sin(theta), 0.0, std::cos(theta);
  return r * p;
}

inline Point3 oracle_apply(double theta, double s, const Point3& t, const Point3& p) {
  return s * oracle_rotate(theta, p) + t;
}

/// Smallest absolute difference between two angles, modulo 2 pi.
inline double angle_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

struct GridOptimum {
  double theta = 0.0;
  double scale = 1.0;
  Point3 translation = Point3::Zero();
  double objective = std::numeric_limits<double>::infinity();
  double step = 0.0;
};

/// Brute-force reference for the yaw-similarity fit: scans theta over a
/// uniform grid on (-pi, pi]; for each theta the scale and translation are
/// the ordinary 1-D / mean least-squares solutions, and the objective is
/// evaluated by applying the candidate transform to every pair.
inline GridOptimum grid_search_fit(const std::vector<Point3>& src, const std::vector<Point3>& dst,
                                   std::size_t grid_points, bool fix_scale = false) {
  const std::size_t n = src.size();
  Point3 ms = Point3::Zero();
  Point3 md = Point3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    ms += src[i];
    md += dst[i];
  }
  ms /= static_cast<double>(n);
  md /= static_cast<double>(n);

  GridOptimum best;
  best.step = 2.0 * std::numbers::pi / static_cast<double>(grid_points);
  for (std::size_t j = 1; j <= grid_points; ++j) {
    const double theta = -std::numbers::pi + best.step * static_cast<double>(j);
    double num = 0.0;
    double den = 0.0;
    std::vector<Point3> rotated(n);
    for (std::size_t i = 0; i < n; ++i) {
      rotated[i] = oracle_rotate(theta, src[i] - ms);
      num += rotated[i].dot(dst[i] - md);
      den += (src[i] - ms).squaredNorm();
    }
    double s = 1.0;
    if (!fix_scale) s = den > 0.0 ? std::max(num / den, 0.0) : 0.0;
    const Point3 t = md - s * oracle_rotate(theta, ms);
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += (s * oracle_rotate(theta, src[i]) + t - dst[i]).squaredNorm();
    if (obj < best.objective) {
      best.objective = obj;
      best.theta = theta;
      best.scale = s;
      best.translation = t;
    }
  }
  return best;
}

/// Unit cube [lo, lo+1]^3 as an OBJ object block (8 vertices, 6 quads),
/// using absolute vertex indices starting at `first_index` (1-based).
inline std::string obj_cube(const std::string& name, const Point3& lo, int first_index, const Point3& size = Point3::Ones()) {
  std::string s = "o " + name + "\n";
  for (int i = 0; i < 8; ++i) {
    const Point3 p = lo + Point3((i & 1) ? size.x() : 0.0, (i & 2) ? size.y() : 0.0, (i & 4) ? size.z() : 0.0);
    s += "v " + std::to_string(p.x()) + " " + std::to_string(p.y()) + " " + std::to_string(p.z()) + "\n";
  }
  const int faces[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& f : faces) {
    s += "f";
    for (int k = 0; k < 4; ++k) s += " " + std::to_string(first_index + f[k]);
    s += "\n";
  }
  return s;
}

/// Euclidean distance from p to triangle abc (Ericson, closest point on
/// triangle), written independently of the sampler.
inline double point_triangle_distance(const Point3& p, const Point3& a, const Point3& b, const Point3& c) {
  const Point3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return (p - a).norm();
  const Point3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return (p - b).norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (p - (a + ab * (d1 / (d1 - d3)))).norm();
  const Point3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return (p - c).norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (p - (a + ac * (d2 / (d2 - d6)))).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return (p - (b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

/// Ten disjoint triangles with areas 1..10 (right triangles with legs
/// sqrt(2k) in the plane y = k), as OBJ text; object i is named "t<i>".
inline std::string ten_triangle_obj() {
  std::string s;
  int base = 1;
  for (int k = 1; k <= 10; ++k) {
    const double leg = std::sqrt(2.0 * k);
    const double x0 = 3.0 * k;
    s += "o t" + std::to_string(k) + "\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "v %.17g %d 0\nv %.17g %d 0\nv %.17g %d %.17g\n", x0, k, x0 + leg, k, x0, k, leg);
    s += buf;
    s += "f " + std::to_string(base) + " " + std::to_string(base + 1) + " " + std::to_string(base + 2) + "\n";
    base += 3;
  }
  return s;
}

/// Upper 0.001 critical value of the chi-square distribution with 9 degrees
/// of freedom (scipy.stats.chi2.ppf(0.999, 9)).
inline constexpr double kChiSquare9dof_p001 = 27.877164871256568;

}  // namespace arplace::testing
