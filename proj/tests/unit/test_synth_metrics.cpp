#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "ndp/metrics.hpp"
#include "ndp/normalize.hpp"
#include "ndp/synth.hpp"

using namespace ndp;
using synth::DeformationSpec;

TEST_CASE("surface sampling") {
  for (auto shape : {synth::Shape::Plane, synth::Shape::Cylinder, synth::Shape::Sphere, synth::Shape::Torus}) {
    CAPTURE(synth::to_string(shape));
    const auto a = synth::sample_surface(shape, 500, 7);
    const auto b = synth::sample_surface(shape, 500, 7);
    CHECK(a.size() == 500);
    CHECK(a.points == b.points);
    CHECK(synth::parse_shape(synth::to_string(shape)) == shape);
  }
  const synth::SurfaceSize size;
  for (const auto& p : synth::sample_surface(synth::Shape::Sphere, 300, 1).points) {
    CHECK(p.norm() == doctest::Approx(size.sphere_radius).epsilon(1e-12));
  }
  for (const auto& p : synth::sample_surface(synth::Shape::Cylinder, 300, 1).points) {
    CHECK(std::hypot(p.x(), p.y()) == doctest::Approx(size.cylinder_radius).epsilon(1e-12));
    CHECK(std::abs(p.z()) <= 0.5 * size.cylinder_height);
  }
  for (const auto& p : synth::sample_surface(synth::Shape::Torus, 300, 1).points) {
    const double ring = std::hypot(p.x(), p.y()) - size.torus_major;
    CHECK(std::hypot(ring, p.z()) == doctest::Approx(size.torus_minor).epsilon(1e-12));
  }
  CHECK_THROWS_AS(synth::sample_surface(synth::Shape::Plane, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(synth::parse_shape("cube"), InvalidArgument);
}

TEST_CASE("deformation ground truth") {
  const auto cloud = synth::sample_surface(synth::Shape::Cylinder, 400, 2);
  const auto rigid = synth::apply_deformation(cloud, synth::parse_deformation("rigid"));
  for (const auto& g : rigid.ground_truth) CHECK(g == Vec3::Zero());

  const auto sim = synth::apply_deformation(PointCloud({Vec3(1, 1, 1)}), synth::parse_deformation("similarity:s=1.5"));
  CHECK((sim.ground_truth[0] - Vec3(0.5, 0.5, 0.5)).norm() < 1e-15);

  const double rate = std::numbers::pi / 6.0;
  const auto twisted = synth::apply_deformation(cloud, synth::parse_deformation("twist:axis=z,rate=0.52359877559829887"));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const Vec3 expect = Eigen::AngleAxisd(rate * p.z(), Vec3::UnitZ()) * p;
    CHECK((twisted.cloud.points[i] - expect).norm() < 1e-14);
    CHECK((twisted.ground_truth[i] - (expect - p)).norm() < 1e-14);
  }
}

TEST_CASE("bend and sine deformations") {
  DeformationSpec bend = synth::parse_deformation("bend:axis=x,normal=z,curvature=2");
  // points on the bent line stay at their arc length from the origin
  for (double s : {-0.4, -0.1, 0.2, 0.5}) {
    const Vec3 q = synth::deform_point(Vec3(s, 0, 0), bend);
    const Vec3 center(0, 0, 0.5);
    CHECK((q - center).norm() == doctest::Approx(0.5).epsilon(1e-12));
  }
  DeformationSpec sine = synth::parse_deformation("sine:axis=x,normal=z,amplitude=0.1,frequency=1");
  const Vec3 q = synth::deform_point(Vec3(0.25, 0.3, 0), sine);
  CHECK((q - Vec3(0.25, 0.3, 0.1)).norm() < 1e-15);
  CHECK(synth::format_deformation(synth::parse_deformation(synth::format_deformation(sine))) ==
        synth::format_deformation(sine));
  CHECK_THROWS_AS(synth::parse_deformation("melt"), InvalidArgument);
  CHECK_THROWS_AS(synth::parse_deformation("twist:rate=abc"), InvalidArgument);
  CHECK_THROWS_AS(synth::parse_deformation("twist:speed=1"), InvalidArgument);
}

TEST_CASE("partial overlap") {
  const auto cloud = synth::sample_surface(synth::Shape::Sphere, 10000, 4);
  const auto whole = synth::make_partial(cloud, 1.0, 3);
  CHECK(whole.cloud.points == cloud.points);
  const auto half = synth::make_partial(cloud, 0.5, 3);
  CHECK(half.cloud.size() >= 4800);
  CHECK(half.cloud.size() <= 5200);
  CHECK(std::is_sorted(half.kept.begin(), half.kept.end()));
  for (std::size_t i = 0; i < half.kept.size(); ++i) CHECK(half.cloud.points[i] == cloud.points[half.kept[i]]);
  CHECK_THROWS_AS(synth::make_partial(cloud, 0.0, 3), InvalidArgument);
}

TEST_CASE("noise injection") {
  const auto cloud = synth::sample_surface(synth::Shape::Plane, 1000, 6);
  CHECK(synth::add_noise(cloud, 0.0, 0.1, 1).cloud.points == cloud.points);
  const auto tenth = synth::add_noise(cloud, 0.1, 0.1, 1);
  CHECK(tenth.perturbed.size() == 100);
  std::size_t moved = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) moved += tenth.cloud.points[i] != cloud.points[i] ? 1 : 0;
  CHECK(moved == 100);
  const auto all = synth::add_noise(cloud, 1.0, 0.05, 2);
  for (std::size_t i = 0; i < cloud.size(); ++i) CHECK((all.cloud.points[i] - cloud.points[i]).norm() <= 0.05);
}

TEST_CASE("suite instances") {
  for (std::size_t idx = 0; idx < 6; ++idx) {
    const auto inst = synth::make_suite_instance(idx, 1, {.points = 500});
    CHECK(inst.source.size() == 500);
    CHECK(inst.target.size() == 500);
    const double diag = bbox_diagonal(inst.source.points);
    CHECK(diag >= 0.8 - 1e-9);
    CHECK(diag <= 1.8 + 1e-9);
    for (std::size_t i = 0; i < 500; ++i) CHECK((inst.source.points[i] + inst.ground_truth[i] - inst.target.points[i]).norm() < 1e-15);
  }
  const auto a = synth::make_suite_instance(4, 2, {.points = 300, .overlap = 0.5, .noise_ratio = 0.1});
  CHECK(a.target.size() == 150);
  CHECK(a.ground_truth.size() == 300);
}

TEST_CASE("metric examples") {
  const std::vector<Vec3> gt{Vec3(1, 0, 0)};
  const auto same = compute_metrics(gt, gt);
  CHECK(same.epe == 0.0);
  CHECK(same.acc_s == 100.0);
  CHECK(same.acc_r == 100.0);
  CHECK(same.outlier == 0.0);

  const auto off = compute_metrics({Vec3(1.04, 0, 0)}, gt);
  CHECK(off.epe == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(off.acc_s == 0.0);
  CHECK(off.acc_r == 100.0);
  CHECK(off.outlier == 0.0);

  CHECK_THROWS_AS(compute_metrics({}, {}), InvalidArgument);
  CHECK_THROWS_AS(compute_metrics(gt, {Vec3::Zero(), Vec3::Zero()}), InvalidArgument);
}

TEST_CASE("metrics equal a straight-loop recomputation") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 0.1);
  std::vector<Vec3> gt(1000);
  std::vector<Vec3> pred(1000);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    gt[i] = Vec3(g(rng), g(rng), g(rng));
    pred[i] = gt[i] + Vec3(g(rng), g(rng), g(rng)) * 0.3;
  }
  double epe = 0;
  int s = 0;
  int r = 0;
  int o = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const Vec3 e = pred[i] - gt[i];
    const double err = std::sqrt(e.x() * e.x() + e.y() * e.y() + e.z() * e.z());
    const double rel = err / std::max(std::sqrt(gt[i].squaredNorm()), 1e-12);
    epe += err;
    s += (rel < 0.025 || err < 0.025) ? 1 : 0;
    r += (rel < 0.05 || err < 0.05) ? 1 : 0;
    o += rel > 0.3 ? 1 : 0;
  }
  const auto m = compute_metrics(pred, gt);
  CHECK(m.epe == doctest::Approx(epe / 1000).epsilon(1e-13));
  CHECK(m.acc_s == s / 10.0);
  CHECK(m.acc_r == r / 10.0);
  CHECK(m.outlier == o / 10.0);
  CHECK(m.count == 1000);
}
