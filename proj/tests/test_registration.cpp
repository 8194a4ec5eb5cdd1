#include <doctest.h>

#include <numbers>

#include "arplace/error.hpp"
#include "arplace/json_writer.hpp"
#include "arplace/registration.hpp"
#include "support/fixtures.hpp"

using namespace arplace;
using arplace::testing::angle_distance;
using std::numbers::pi;

namespace {

std::vector<Point3> map_points(const std::vector<Point3>& pts, double theta, double s, const Point3& t) {
  std::vector<Point3> out;
  for (const auto& p : pts) out.push_back(testing::oracle_apply(theta, s, t, p));
  return out;
}

PointCloud map_cloud(const PointCloud& cloud, double theta, double s, const Point3& t) {
  return PointCloud(map_points(cloud.points, theta, s, t));
}

}  // namespace

TEST_CASE("apply_transform conventions") {
  const PointCloud cloud({{1, 2, 3}, {-1, 0, 4}}, {5, 6});
  const PointCloud same = apply_transform(SimilarityTransformY::identity(), cloud);
  CHECK(same.points == cloud.points);
  CHECK(same.layers == cloud.layers);

  const Point3 r = SimilarityTransformY::uniform(pi / 2, 1.0, Point3::Zero()).apply({1, 0, 0});
  CHECK(r.x() == doctest::Approx(0.0));
  CHECK(r.y() == 0.0);
  CHECK(r.z() == doctest::Approx(-1.0));

  CHECK(SimilarityTransformY::uniform(0, 2.0, {1, 1, 1}).apply({1, 2, 3}) == Point3(3, 5, 7));

  const auto aniso = SimilarityTransformY::per_axis(0.0, {2, 1, 0.5}, {0, 1, 0});
  CHECK(aniso.apply({1, 1, 1}) == Point3(2, 2, 0.5));
}

TEST_CASE("uniform transforms never mix Y") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = SimilarityTransformY::uniform(rng.uniform(-pi, pi), rng.uniform(0.1, 5), testing::random_points(1, rng).front());
    for (const auto& p : testing::random_points(20, rng, -10, 10)) {
      CHECK(t.apply(p).y() == doctest::Approx(t.uniform_scale() * p.y() + t.translation.y()).epsilon(1e-14));
    }
  }
}

TEST_CASE("angles wrap into (-pi, pi]") {
  CHECK(SimilarityTransformY::wrap_angle(pi) == pi);
  CHECK(SimilarityTransformY::wrap_angle(-pi) == pi);
  CHECK(SimilarityTransformY::wrap_angle(3 * pi / 2) == doctest::Approx(-pi / 2));
  CHECK(SimilarityTransformY::wrap_angle(-5 * pi / 2) == doctest::Approx(-pi / 2));
  CHECK(SimilarityTransformY::wrap_angle(0.25) == 0.25);
}

TEST_CASE("transform json round trip is exact") {
  const auto t = SimilarityTransformY::uniform(0.1234567890123, 1.0 / 3.0, {0.1, -2e-9, 1e7});
  const std::string text = transform_to_json(t);
  CHECK(text.find("\"application\": \"q = s*Ry(theta)*p + t\"") != std::string::npos);
  const auto back = transform_from_json(text);
  CHECK(back.theta == t.theta);
  CHECK(back.scale == t.scale);
  CHECK(back.translation == t.translation);
  CHECK_FALSE(back.anisotropic);

  const auto a = SimilarityTransformY::per_axis(-1.0, {2, 1, 0.5}, {1, 2, 3});
  const auto a_back = transform_from_json(transform_to_json(a));
  CHECK(a_back.anisotropic);
  CHECK(a_back.scale == a.scale);

  CHECK_THROWS_AS(transform_from_json("{\"theta_rad\":0,\"scale\":1,\"translation\":[0,0,0],\"application\":\"x\"}"),
                  ParseError);
  CHECK_THROWS_AS(transform_from_json("not json"), ParseError);
}

TEST_CASE("fit_similarity_y trivial cases") {
  const std::vector<Point3> src{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {-1, 0, -1}};
  const auto id = fit_similarity_y(src, src);
  CHECK(id.theta == doctest::Approx(0.0));
  CHECK(id.uniform_scale() == doctest::Approx(1.0));
  CHECK(id.translation.norm() < 1e-14);

  const auto shifted = fit_similarity_y(src, map_points(src, 0, 1, {1, 2, 3}));
  CHECK(std::abs(shifted.theta) < 1e-14);
  CHECK(shifted.uniform_scale() == doctest::Approx(1.0));
  CHECK((shifted.translation - Point3(1, 2, 3)).norm() < 1e-14);
}

TEST_CASE("fit_similarity_y recovers a known transform and matches the grid oracle") {
  const std::vector<Point3> src{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {-1, 0, -1}};
  const double theta = pi / 3;
  const double s = 1.7;
  const Point3 t(0.2, -0.4, 0.9);
  const auto dst = map_points(src, theta, s, t);

  const auto fit = fit_similarity_y(src, dst);
  CHECK(std::abs(fit.theta - theta) < 1e-12);
  CHECK(std::abs(fit.uniform_scale() - s) < 1e-12);
  CHECK((fit.translation - t).norm() < 1e-12);

  const auto oracle = testing::grid_search_fit(src, dst, 100000);
  CHECK(angle_distance(oracle.theta, fit.theta) <= oracle.step);
  CHECK(correspondence_objective(fit, src, dst) <= oracle.objective + 1e-9);
}

TEST_CASE("fit_similarity_y is a stationary point") {
  Rng rng(301);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(rng.uniform01() * 40);
    const auto src = testing::random_points(n, rng);
    auto dst = map_points(src, rng.uniform(-pi, pi), rng.uniform(0.5, 2), testing::random_points(1, rng, -3, 3).front());
    for (auto& q : dst) q += 0.05 * testing::random_points(1, rng).front();

    const auto fit = fit_similarity_y(src, dst);
    const double base = correspondence_objective(fit, src, dst);
    for (int param = 0; param < 5; ++param) {
      for (const double delta : {1e-4, -1e-4}) {
        auto p = fit;
        switch (param) {
          case 0: p.theta += delta; break;
          case 1: p.scale = Eigen::Vector3d::Constant(p.uniform_scale() + delta); break;
          default: p.translation[param - 2] += delta; break;
        }
        CHECK(correspondence_objective(p, src, dst) >= base);
      }
    }
  }
}

TEST_CASE("fit_similarity_y with fixed scale") {
  Rng rng(5);
  const auto src = testing::random_points(30, rng);
  const auto dst = map_points(src, 2.5, 3.0, {1, 0, 0});
  const auto fit = fit_similarity_y(src, dst, true);
  CHECK(fit.uniform_scale() == 1.0);
  CHECK(fit.theta == doctest::Approx(2.5));
  const auto oracle = testing::grid_search_fit(src, dst, 20000, true);
  CHECK(correspondence_objective(fit, src, dst) <= oracle.objective + 1e-9);
}

TEST_CASE("fit_similarity_y errors") {
  CHECK_THROWS_AS(fit_similarity_y(std::vector<Point3>{}, std::vector<Point3>{}), Error);
  const std::vector<Point3> same(4, Point3(1, 2, 3));
  const std::vector<Point3> other{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  CHECK_THROWS_WITH_AS(fit_similarity_y(same, other), doctest::Contains("fix_scale"), Error);
  CHECK_NOTHROW(fit_similarity_y(same, other, true));
  CHECK_THROWS_AS(fit_similarity_y(other, std::vector<Point3>(3, Point3::Zero())), Error);

  // Pure Y reflection: the best yaw cannot undo it, so the optimal scale is negative.
  const std::vector<Point3> column{{0, 0, 0}, {0, 1, 0}, {0, 2, 0}, {0, 3, 0}};
  const std::vector<Point3> flipped{{0, 0, 0}, {0, -1, 0}, {0, -2, 0}, {0, -3, 0}};
  CHECK_THROWS_WITH_AS(fit_similarity_y(column, flipped), doctest::Contains("not positive"), Error);
}

TEST_CASE("fit_anisotropic_y recovers per-axis scales") {
  Rng rng(77);
  const auto src = testing::random_points(40, rng);
  const Eigen::Vector3d scale(2, 1, 0.5);
  std::vector<Point3> dst;
  for (const auto& p : src) dst.push_back(scale.cwiseProduct(p));
  const auto fit = fit_anisotropic_y(src, dst);
  CHECK(fit.anisotropic);
  CHECK(std::abs(fit.theta) < 1e-9);
  CHECK((fit.scale - scale).norm() < 1e-9);
  CHECK(fit.translation.norm() < 1e-9);
}

TEST_CASE("fit_anisotropic_y reduces to the uniform fit on isotropic data") {
  Rng rng(78);
  for (int trial = 0; trial < 5; ++trial) {
    const auto src = testing::random_points(30, rng);
    const auto dst = map_points(src, rng.uniform(-pi, pi), rng.uniform(0.5, 2.0), testing::random_points(1, rng).front());
    const auto uniform = fit_similarity_y(src, dst);
    const auto aniso = fit_anisotropic_y(src, dst);
    CHECK(angle_distance(aniso.theta, uniform.theta) < 1e-9);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(aniso.scale[k] - uniform.uniform_scale()) < 1e-9);
    CHECK((aniso.translation - uniform.translation).norm() < 1e-9);
  }
}

TEST_CASE("fit_anisotropic_y preconditions") {
  const std::vector<Point3> three{{0, 0, 0}, {1, 1, 1}, {2, 0, 1}};
  CHECK_THROWS_AS(fit_anisotropic_y(three, three), Error);
  const std::vector<Point3> planar{{0, 0, 0}, {1, 0, 0}, {0, 0, 1}, {1, 0, 1}};
  CHECK_THROWS_WITH_AS(fit_anisotropic_y(planar, planar), doctest::Contains("zero variance along y"), Error);
}

TEST_CASE("placement error arithmetic") {
  const PointCloud cloud = testing::random_box_cloud(50, 8);
  const PlacementError self = placement_error(cloud, cloud, Normalization::TargetDiagonal);
  CHECK(self.error == 0.0);
  CHECK(self.per_point == std::vector<double>(50, 0.0));

  const PointCloud origin({{0, 0, 0}});
  const PointCloud far({{3, 4, 0}});
  const NNIndex index(far);
  const PlacementError raw = placement_error(origin, index, aabb(far), Normalization::None);
  CHECK(raw.error == 25.0);
  CHECK(raw.per_point == std::vector<double>{5.0});

  const Aabb padded{{3, 4, 0}, {3, 4, 10}};
  const PlacementError scaled = placement_error(origin, index, padded, Normalization::TargetDiagonal);
  CHECK(scaled.per_point == std::vector<double>{0.5});
  CHECK(scaled.error == 0.25);

  CHECK_THROWS_AS(placement_error(origin, index, aabb(far), Normalization::TargetDiagonal), Error);
  CHECK_THROWS_AS(placement_error(PointCloud{}, index, padded, Normalization::None), Error);
}

TEST_CASE("unnormalized error is invariant to a shared rigid motion") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud a(testing::random_points(80, rng));
    const PointCloud b(testing::random_points(120, rng));
    const double theta = rng.uniform(-pi, pi);
    const Point3 t = testing::random_points(1, rng, -10, 10).front();
    const double before = placement_error(a, b, Normalization::None).error;
    const double after = placement_error(map_cloud(a, theta, 1, t), map_cloud(b, theta, 1, t), Normalization::None).error;
    CHECK(std::abs(after - before) <= 1e-9 * before);
  }
}

TEST_CASE("icp fixed point on identical clouds") {
  const PointCloud cloud = testing::random_box_cloud(200, 1);
  const RegistrationResult r = icp(cloud, cloud, SimilarityTransformY::identity());
  CHECK(r.converged);
  CHECK(r.error == 0.0);
  CHECK(r.iterations <= 2);
  CHECK(std::abs(r.transform.theta) < 1e-12);
  CHECK(std::abs(r.transform.uniform_scale() - 1.0) < 1e-12);
  CHECK(r.transform.translation.norm() < 1e-12);
}

TEST_CASE("icp recovers a transform from a nearby start") {
  const PointCloud source = testing::random_box_cloud(200, 2);
  const double theta = 0.9;
  const double s = 1.4;
  const Point3 t(0.5, -1.0, 2.0);
  const PointCloud target = map_cloud(source, theta, s, t);
  const double diag = aabb(target).diagonal();

  for (const double offset : {-0.5, -0.25, 0.25, 0.5}) {
    const Point3 start_t = centroid(target) - s * rotate_y(theta + offset, centroid(source));
    const auto init = SimilarityTransformY::uniform(theta + offset, s, start_t);
    const RegistrationResult r = icp(source, target, init);
    CHECK(r.converged);
    CHECK(angle_distance(r.transform.theta, theta) < 1e-6);
    CHECK(std::abs(r.transform.uniform_scale() - s) / s < 1e-6);
    CHECK((r.transform.translation - t).norm() < 1e-6 * diag);
    CHECK(r.per_point_errors.size() == source.size());
    CHECK(r.error_history.size() == r.iterations + 1);
  }
}

TEST_CASE("icp on unrelated clouds terminates and improves on the start") {
  const PointCloud a = testing::random_box_cloud(150, 10);
  const PointCloud b = testing::random_box_cloud(170, 11, 2.0);
  const auto init = SimilarityTransformY::identity();
  const RegistrationResult r = icp(a, b, init);
  CHECK(r.error > 0.0);
  CHECK(r.iterations <= IcpParams{}.max_iterations);
  const double start_error = placement_error(a, b, Normalization::TargetDiagonal).error;
  CHECK(r.error <= start_error);
  CHECK(r.error_history.front() == start_error);

  double mean_sq = 0.0;
  for (double e : r.per_point_errors) mean_sq += e * e;
  CHECK(r.error == doctest::Approx(mean_sq / static_cast<double>(r.per_point_errors.size())).epsilon(1e-14));
  for (std::size_t k = 1; k < r.error_history.size(); ++k) {
    CHECK(r.error_history[k] <= r.error_history[k - 1] + 1e-12);
  }
  if (r.converged) {
    const double prev = r.error_history[r.error_history.size() - 2];
    CHECK(std::abs(prev - r.error) / std::max(prev, 1e-20) < IcpParams{}.rel_tolerance);
  }
}

TEST_CASE("icp preconditions") {
  const PointCloud two({{0, 0, 0}, {1, 0, 0}});
  const PointCloud cloud = testing::random_box_cloud(10, 3);
  CHECK_THROWS_AS(icp(two, cloud, {}), Error);
  CHECK_THROWS_AS(icp(cloud, two, {}), Error);
  const PointCloud collapsed(std::vector<Point3>(5, Point3(1, 1, 1)));
  CHECK_THROWS_AS(icp(collapsed, cloud, {}), Error);
  IcpParams fixed;
  fixed.fix_scale = true;
  CHECK_NOTHROW(icp(collapsed, cloud, {}, fixed));

  IcpParams bad;
  bad.starts = 0;
  CHECK_THROWS_AS(multi_start_icp(cloud, cloud, bad), Error);
  bad = {};
  bad.rel_tolerance = 0;
  CHECK_THROWS_AS(icp(cloud, cloud, {}, bad), Error);
}

TEST_CASE("multi-start escapes a 175 degree rotation") {
  // Centered, elongated box: a half-turn maps its outline onto itself, so a
  // start near 0 sits in the wrong basin.
  PointCloud source = testing::random_box_cloud(200, 21);
  for (auto& p : source.points) p = (p - Point3(0.5, 0.5, 0.5)).cwiseProduct(Point3(3.0, 1.0, 1.0));
  const double theta = 175.0 * pi / 180.0;
  const PointCloud target = map_cloud(source, theta, 1.0, {0.3, 0.0, -0.2});

  // The identity start stays trapped (checked, not assumed).
  const RegistrationResult single = icp(source, target, SimilarityTransformY::identity());
  CHECK(single.error > 1e-6);

  const RegistrationResult multi = multi_start_icp(source, target);
  CHECK(multi.error < 1e-10);
  CHECK(angle_distance(multi.transform.theta, theta) < 1e-6);
}

TEST_CASE("multi-start reductions and tie-break") {
  const PointCloud source = testing::random_box_cloud(120, 31);
  const PointCloud target = map_cloud(source, 0.3, 1.2, {1, 2, 3});

  IcpParams one;
  one.starts = 1;
  const auto inits = multi_start_inits(source, target, one);
  REQUIRE(inits.size() == 1);
  const RegistrationResult a = multi_start_icp(source, target, one);
  const RegistrationResult b = icp(source, target, inits[0], one);
  CHECK(a.transform.theta == b.transform.theta);
  CHECK(a.transform.scale == b.transform.scale);
  CHECK(a.transform.translation == b.transform.translation);
  CHECK(a.error_history == b.error_history);
  CHECK(a.start_index == 0);

  const RegistrationResult self = multi_start_icp(source, source);
  CHECK(self.start_index == 0);
  CHECK(self.error == 0.0);
}

TEST_CASE("multi-start inits follow the documented recipe") {
  const PointCloud source = testing::random_box_cloud(50, 1);
  const PointCloud target = map_cloud(testing::random_box_cloud(60, 2), 0, 3, {5, 5, 5});
  IcpParams params;
  params.starts = 4;
  const auto inits = multi_start_inits(source, target, params);
  REQUIRE(inits.size() == 4);
  const double ratio = aabb(target).diagonal() / aabb(source).diagonal();
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(angle_distance(inits[k].theta, 2 * pi * static_cast<double>(k) / 4.0) < 1e-15);
    CHECK(inits[k].uniform_scale() == doctest::Approx(ratio));
    CHECK((inits[k].apply(centroid(source)) - centroid(target)).norm() < 1e-12);
  }
  params.fix_scale = true;
  for (const auto& init : multi_start_inits(source, target, params)) CHECK(init.uniform_scale() == 1.0);
}

TEST_CASE("multi-start is independent of thread count and dominates its starts") {
  const PointCloud source = testing::random_box_cloud(150, 41);
  PointCloud target = map_cloud(source, -2.0, 0.8, {0, 1, 0});
  Rng rng(3);
  for (auto& p : target.points) p += 0.01 * testing::random_points(1, rng).front();

  IcpParams serial;
  serial.threads = 1;
  IcpParams parallel;
  parallel.threads = 4;
  const RegistrationResult a = multi_start_icp(source, target, serial);
  const RegistrationResult b = multi_start_icp(source, target, parallel);
  CHECK(a.error == b.error);
  CHECK(a.start_index == b.start_index);
  CHECK(a.per_point_errors == b.per_point_errors);
  CHECK(a.transform.translation == b.transform.translation);

  for (const auto& init : multi_start_inits(source, target, serial)) {
    CHECK(a.error <= icp(source, target, init, serial).error);
  }
}

TEST_CASE("anisotropic icp") {
  const PointCloud source = testing::random_box_cloud(200, 51);
  PointCloud target;
  for (const auto& p : source.points) target.points.push_back(rotate_y(0.2, Eigen::Vector3d(1.5, 1.0, 0.7).cwiseProduct(p)));

  IcpParams params;
  params.keep_aspect_ratio = false;
  const RegistrationResult r = multi_start_icp(source, target, params);
  CHECK(r.transform.anisotropic);
  CHECK(r.error < 1e-10);
  CHECK((r.transform.scale - Eigen::Vector3d(1.5, 1.0, 0.7)).norm() < 1e-6);
  for (std::size_t k = 1; k < r.error_history.size(); ++k) {
    CHECK(r.error_history[k] <= r.error_history[k - 1] + 1e-12);
  }
}

TEST_CASE("trim hook leaves far correspondences out of the fit") {
  const PointCloud source = testing::random_box_cloud(200, 61);
  PointCloud target = map_cloud(source, 0.1, 1.0, {0.05, 0, 0});
  // Gross outliers appended to the source have no partner in the target.
  PointCloud noisy_source = source;
  for (int i = 0; i < 20; ++i) noisy_source.points.emplace_back(5.0 + i, 5.0, 5.0);

  IcpParams trimmed;
  trimmed.trim_distance = 0.2;
  trimmed.fix_scale = true;
  const RegistrationResult r = icp(noisy_source, target, SimilarityTransformY::identity(), trimmed);
  CHECK(angle_distance(r.transform.theta, 0.1) < 1e-6);
  CHECK((r.transform.translation - Point3(0.05, 0, 0)).norm() < 1e-6);

  IcpParams bad;
  bad.trim_distance = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("scale clamp marks the result unconverged") {
  // Target spread is tiny relative to the source: the fitted scale would drop
  // below the lower clamp.
  const PointCloud source = testing::random_box_cloud(50, 71, 1e4);
  const PointCloud target = map_cloud(testing::random_box_cloud(50, 72), 0, 1e-4, Point3::Zero());
  IcpParams params;
  params.normalization = Normalization::None;
  const RegistrationResult r = icp(source, target, SimilarityTransformY::uniform(0, 1e-6, Point3::Zero()), params);
  CHECK(r.transform.uniform_scale() >= 1e-6);
  CHECK_FALSE(r.converged);
}
