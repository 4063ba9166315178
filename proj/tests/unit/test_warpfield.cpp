#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "ndp/gradient_check.hpp"
#include "ndp/warpfield.hpp"

using namespace ndp;
using ad::Matrix;

namespace {

constexpr RotationRepr kReprs[] = {RotationRepr::AxisAngle, RotationRepr::EulerXYZ, RotationRepr::Quaternion,
                                   RotationRepr::SixD};

std::vector<double> random_params(RotationRepr repr, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> p(rotation_param_count(repr));
  for (auto& v : p) v = u(rng);
  return p;
}

double orthonormality_error(const Mat3& r) { return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("exp_so3 examples") {
  CHECK(exp_so3(Vec3::Zero()) == Mat3::Identity());
  const Vec3 turned = exp_so3(Vec3(0, 0, std::numbers::pi / 2)) * Vec3(1, 0, 0);
  CHECK((turned - Vec3(0, 1, 0)).norm() < 1e-12);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    const Vec3 w = Vec3(g(rng), g(rng), g(rng)).normalized() * 2.5;
    const Mat3 r = exp_so3(w);
    CHECK(orthonormality_error(r) < 1e-9);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    // the axis is fixed by its own rotation
    CHECK((r * w - w).norm() < 1e-12);
    CHECK(r.isApprox(Eigen::AngleAxisd(2.5, w.normalized()).toRotationMatrix(), 1e-12));
  }
  const Mat3 tiny = exp_so3(Vec3(1e-10, -2e-10, 0));
  CHECK(orthonormality_error(tiny) < 1e-15);
}

TEST_CASE("identity parameters give the identity for every representation") {
  for (auto repr : kReprs) {
    CAPTURE(to_string(repr));
    const auto p = identity_rotation_params(repr);
    CHECK(rotation_from_repr(repr, p).isApprox(Mat3::Identity(), 1e-15));
  }
}

TEST_CASE("euler half turn about z") {
  const std::vector<double> p{0, 0, std::numbers::pi};
  const Vec3 y = rotation_from_repr(RotationRepr::EulerXYZ, p) * Vec3(1, 0, 0);
  CHECK((y - Vec3(-1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("euler, quaternion and 6D agree with Eigen's constructions") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 20; ++i) {
    const auto e = random_params(RotationRepr::EulerXYZ, rng);
    const Mat3 ref_e = (Eigen::AngleAxisd(e[2], Vec3::UnitZ()) * Eigen::AngleAxisd(e[1], Vec3::UnitY()) *
                        Eigen::AngleAxisd(e[0], Vec3::UnitX()))
                           .toRotationMatrix();
    CHECK(rotation_from_repr(RotationRepr::EulerXYZ, e).isApprox(ref_e, 1e-12));

    const auto q = random_params(RotationRepr::Quaternion, rng);
    const Mat3 ref_q = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
    CHECK(rotation_from_repr(RotationRepr::Quaternion, q).isApprox(ref_q, 1e-12));

    const auto s = random_params(RotationRepr::SixD, rng);
    const Vec3 a1(s[0], s[1], s[2]);
    const Vec3 a2(s[3], s[4], s[5]);
    const Vec3 b1 = a1.normalized();
    const Vec3 b2 = (a2 - b1.dot(a2) * b1).normalized();
    Mat3 ref_s;
    ref_s << b1, b2, b1.cross(b2);
    CHECK(rotation_from_repr(RotationRepr::SixD, s).isApprox(ref_s, 1e-12));
  }
}

TEST_CASE("rotations are orthonormal for random parameters") {
  std::mt19937_64 rng(99);
  for (auto repr : kReprs) {
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) worst = std::max(worst, orthonormality_error(rotation_from_repr(repr, random_params(repr, rng))));
    CAPTURE(to_string(repr));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("rotation parameter errors") {
  const std::vector<double> two{1, 2};
  CHECK_THROWS_AS(rotation_from_repr(RotationRepr::AxisAngle, two), InvalidArgument);
  const std::vector<double> zero_q{0, 0, 0, 0};
  CHECK_THROWS_AS(rotation_from_repr(RotationRepr::Quaternion, zero_q), InvalidArgument);
  const std::vector<double> colinear{1, 0, 0, 2, 0, 0};
  CHECK_THROWS_AS(rotation_from_repr(RotationRepr::SixD, colinear), InvalidArgument);
}

TEST_CASE("warp examples") {
  const Vec3 x(0.3, -0.2, 0.9);
  for (auto type : {WarpFieldType::VectorField, WarpFieldType::Rigid, WarpFieldType::Similarity}) {
    CHECK(warp(x, MotionParams::identity(RotationRepr::AxisAngle), type, RotationRepr::AxisAngle) == x);
  }
  MotionParams t = MotionParams::identity(RotationRepr::AxisAngle);
  t.translation = Vec3(1, 2, 3);
  CHECK(warp(Vec3::Zero(), t, WarpFieldType::Rigid, RotationRepr::AxisAngle) == Vec3(1, 2, 3));

  MotionParams s = MotionParams::identity(RotationRepr::AxisAngle);
  s.log_scale = std::log(2.0);
  CHECK((warp(Vec3(1, 1, 1), s, WarpFieldType::Similarity, RotationRepr::AxisAngle) - Vec3(2, 2, 2)).norm() < 1e-15);
}

TEST_CASE("level composition blends identity and warp") {
  MotionParams t = MotionParams::identity(RotationRepr::AxisAngle);
  t.translation = Vec3(2, 0, 0);
  const auto type = WarpFieldType::Rigid;
  const auto repr = RotationRepr::AxisAngle;
  CHECK(compose_level(Vec3(1, 1, 1), t, 0.0, type, repr) == Vec3(1, 1, 1));
  CHECK(compose_level(Vec3(1, 1, 1), t, 1.0, type, repr) == Vec3(3, 1, 1));
  CHECK(compose_level(Vec3::Zero(), t, 0.5, type, repr) == Vec3(1, 0, 0));
}

TEST_CASE("network motion layout") {
  const std::vector<double> zeros7(7, 0.0);
  for (auto repr : kReprs) {
    const std::vector<double> zeros(rotation_param_count(repr) + 3, 0.0);
    const auto m = motion_from_network(zeros, WarpFieldType::Rigid, repr);
    CHECK(m.rotation == identity_rotation_params(repr));
  }
  const auto sim = motion_from_network(std::vector<double>{0.1, 0, 0, 1, 2, 3, 0.5}, WarpFieldType::Similarity,
                                       RotationRepr::AxisAngle);
  CHECK(sim.translation == Vec3(1, 2, 3));
  CHECK(sim.log_scale == 0.5);
  CHECK_THROWS_AS(motion_from_network(zeros7, WarpFieldType::Rigid, RotationRepr::AxisAngle), InvalidArgument);
  CHECK(motion_param_count(WarpFieldType::VectorField, RotationRepr::SixD) == 3);
  CHECK(motion_param_count(WarpFieldType::Rigid, RotationRepr::Quaternion) == 7);
  CHECK(motion_param_count(WarpFieldType::Similarity, RotationRepr::AxisAngle) == 7);
}

TEST_CASE("batched composition matches the per-point route") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (auto type : {WarpFieldType::VectorField, WarpFieldType::Rigid, WarpFieldType::Similarity}) {
    for (auto repr : kReprs) {
      CAPTURE(to_string(type));
      CAPTURE(to_string(repr));
      const auto dim = static_cast<Eigen::Index>(motion_param_count(type, repr));
      Matrix pts(8, 3);
      Matrix xi(8, dim);
      Matrix alpha(8, 1);
      for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = u(rng);
      for (Eigen::Index i = 0; i < xi.size(); ++i) xi.data()[i] = u(rng);
      for (Eigen::Index i = 0; i < 8; ++i) alpha(i, 0) = 0.5 + 0.5 * u(rng);
      ad::Tape tape;
      const auto out = compose_level(tape.constant(pts), tape.constant(xi), tape.constant(alpha), type, repr);
      for (Eigen::Index r = 0; r < 8; ++r) {
        std::vector<double> row(xi.row(r).data(), xi.row(r).data() + dim);
        const auto m = motion_from_network(row, type, repr);
        const Vec3 expect = compose_level(Vec3(pts(r, 0), pts(r, 1), pts(r, 2)), m, alpha(r, 0), type, repr);
        // the batched quaternion and 6D routes pad their normalizers by 1e-12
        CHECK((Vec3(out.value()(r, 0), out.value()(r, 1), out.value()(r, 2)) - expect).norm() < 1e-11);
      }
    }
  }
}

TEST_CASE("composition gradients match finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (auto type : {WarpFieldType::Rigid, WarpFieldType::Similarity}) {
    for (auto repr : kReprs) {
      CAPTURE(to_string(type));
      CAPTURE(to_string(repr));
      const auto dim = static_cast<Eigen::Index>(motion_param_count(type, repr));
      Matrix pts(6, 3);
      Matrix xi(6, dim);
      Matrix logit(6, 1);
      for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = u(rng);
      for (Eigen::Index i = 0; i < xi.size(); ++i) xi.data()[i] = u(rng);
      for (Eigen::Index i = 0; i < logit.size(); ++i) logit.data()[i] = u(rng);
      auto fn = [&](ad::Tape&, std::span<const ad::Tensor> p) {
        const auto moved = compose_level(p[0], p[1], ad::sigmoid(p[2]), type, repr);
        return ad::sum(ad::square(ad::sin(moved)));
      };
      const auto report = ad::gradient_check(fn, {pts, xi, logit});
      CHECK_MESSAGE(report.passed, report.message);
    }
  }
}

TEST_CASE("axis-angle gradient is finite at the zero rotation") {
  auto fn = [](ad::Tape& tape, std::span<const ad::Tensor> p) {
    Matrix pts(1, 3);
    pts << 0.3, -0.4, 0.5;
    return ad::sum(warp(tape.constant(pts), p[0], WarpFieldType::Rigid, RotationRepr::AxisAngle));
  };
  const auto report = ad::gradient_check(fn, {Matrix::Zero(1, 6)});
  CHECK_MESSAGE(report.passed, report.message);
}
