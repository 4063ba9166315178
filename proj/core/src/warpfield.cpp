#include "ndp/warpfield.hpp"

#include <cmath>
#include <string>

namespace ndp {

namespace {

constexpr double kNormEps = 1e-12;

void require_count(RotationRepr repr, std::size_t got) {
  const std::size_t want = rotation_param_count(repr);
  if (got != want) {
    throw InvalidArgument(to_string(repr) + " expects " + std::to_string(want) + " parameters, got " +
                          std::to_string(got));
  }
}

Mat3 euler_xyz(double a, double b, double c) {
  const double ca = std::cos(a), sa = std::sin(a);
  const double cb = std::cos(b), sb = std::sin(b);
  const double cc = std::cos(c), sc = std::sin(c);
  Mat3 r;
  r << cc * cb, cc * sb * sa - sc * ca, cc * sb * ca + sc * sa,  //
      sc * cb, sc * sb * sa + cc * ca, sc * sb * ca - cc * sa,   //
      -sb, cb * sa, cb * ca;
  return r;
}

Mat3 quaternion_matrix(double w, double x, double y, double z) {
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),   //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

}  // namespace

Mat3 exp_so3(const Vec3& omega) {
  const double s = omega.squaredNorm();
  const double a = ad::so3_coeff_a_value(s);
  const double b = ad::so3_coeff_b_value(s);
  Mat3 k;
  k << 0, -omega.z(), omega.y(),  //
      omega.z(), 0, -omega.x(),   //
      -omega.y(), omega.x(), 0;
  return Mat3::Identity() + a * k + b * (k * k);
}

std::vector<double> identity_rotation_params(RotationRepr repr) {
  switch (repr) {
    case RotationRepr::AxisAngle:
    case RotationRepr::EulerXYZ: return {0.0, 0.0, 0.0};
    case RotationRepr::Quaternion: return {1.0, 0.0, 0.0, 0.0};
    case RotationRepr::SixD: return {1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
  }
  return {};
}

Mat3 rotation_from_repr(RotationRepr repr, std::span<const double> p) {
  require_count(repr, p.size());
  switch (repr) {
    case RotationRepr::AxisAngle: return exp_so3(Vec3(p[0], p[1], p[2]));
    case RotationRepr::EulerXYZ: return euler_xyz(p[0], p[1], p[2]);
    case RotationRepr::Quaternion: {
      const double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3]);
      if (n == 0.0) throw InvalidArgument("zero-norm quaternion");
      return quaternion_matrix(p[0] / n, p[1] / n, p[2] / n, p[3] / n);
    }
    case RotationRepr::SixD: {
      const Vec3 a1(p[0], p[1], p[2]);
      const Vec3 a2(p[3], p[4], p[5]);
      if (a1.norm() == 0.0) throw InvalidArgument("6D rotation: zero first vector");
      const Vec3 b1 = a1 / a1.norm();
      const Vec3 u2 = a2 - b1.dot(a2) * b1;
      if (u2.norm() <= kNormEps * std::max(1.0, a2.norm())) {
        throw InvalidArgument("6D rotation: vectors are colinear or zero");
      }
      const Vec3 b2 = u2 / u2.norm();
      Mat3 r;
      r.col(0) = b1;
      r.col(1) = b2;
      r.col(2) = b1.cross(b2);
      return r;
    }
  }
  return Mat3::Identity();
}

Vec3 warp(const Vec3& x, const MotionParams& xi, WarpFieldType type, RotationRepr repr) {
  switch (type) {
    case WarpFieldType::VectorField: return x + xi.translation;
    case WarpFieldType::Rigid: return rotation_from_repr(repr, xi.rotation) * x + xi.translation;
    case WarpFieldType::Similarity:
      return std::exp(xi.log_scale) * (rotation_from_repr(repr, xi.rotation) * x) + xi.translation;
  }
  return x;
}

Vec3 compose_level(const Vec3& x_prev, const MotionParams& xi, double alpha, WarpFieldType type, RotationRepr repr) {
  return x_prev + alpha * (warp(x_prev, xi, type, repr) - x_prev);
}

MotionParams motion_from_network(std::span<const double> xi, WarpFieldType type, RotationRepr repr) {
  const std::size_t want = motion_param_count(type, repr);
  if (xi.size() != want) {
    throw InvalidArgument("motion vector has " + std::to_string(xi.size()) + " entries, expected " +
                          std::to_string(want));
  }
  MotionParams out = MotionParams::identity(repr);
  std::size_t offset = 0;
  if (type != WarpFieldType::VectorField) {
    for (std::size_t i = 0; i < out.rotation.size(); ++i) out.rotation[i] += xi[i];
    offset = out.rotation.size();
  }
  out.translation = Vec3(xi[offset], xi[offset + 1], xi[offset + 2]);
  if (type == WarpFieldType::Similarity) out.log_scale = xi[offset + 3];
  return out;
}

namespace {

using ad::Tensor;

Tensor col(Tensor t, std::size_t j) { return ad::slice_cols(t, j, 1); }

RotationEntries axis_angle_entries(Tensor p) {
  const Tensor w0 = col(p, 0), w1 = col(p, 1), w2 = col(p, 2);
  const Tensor q0 = ad::square(w0), q1 = ad::square(w1), q2 = ad::square(w2);
  const Tensor s = q0 + q1 + q2;
  const Tensor a = ad::so3_coeff_a(s);
  const Tensor b = ad::so3_coeff_b(s);
  const Tensor aw0 = a * w0, aw1 = a * w1, aw2 = a * w2;
  const Tensor b01 = b * (w0 * w1), b02 = b * (w0 * w2), b12 = b * (w1 * w2);
  return {1.0 + b * (q0 - s), b01 - aw2, b02 + aw1,  //
          b01 + aw2, 1.0 + b * (q1 - s), b12 - aw0,  //
          b02 - aw1, b12 + aw0, 1.0 + b * (q2 - s)};
}

RotationEntries euler_entries(Tensor p) {
  const Tensor a = col(p, 0), b = col(p, 1), c = col(p, 2);
  const Tensor ca = ad::cos(a), sa = ad::sin(a);
  const Tensor cb = ad::cos(b), sb = ad::sin(b);
  const Tensor cc = ad::cos(c), sc = ad::sin(c);
  const Tensor sbsa = sb * sa, sbca = sb * ca;
  return {cc * cb, cc * sbsa - sc * ca, cc * sbca + sc * sa,  //
          sc * cb, sc * sbsa + cc * ca, sc * sbca - cc * sa,  //
          -sb, cb * sa, cb * ca};
}

RotationEntries quaternion_entries(Tensor p) {
  const Tensor n = ad::sqrt(ad::row_sum(ad::square(p))) + kNormEps;
  const Tensor w = col(p, 0) / n, x = col(p, 1) / n, y = col(p, 2) / n, z = col(p, 3) / n;
  const Tensor xx = ad::square(x), yy = ad::square(y), zz = ad::square(z);
  const Tensor xy = x * y, xz = x * z, yz = y * z, wx = w * x, wy = w * y, wz = w * z;
  return {1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy),  //
          2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx),  //
          2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)};
}

RotationEntries sixd_entries(Tensor p) {
  const Tensor a1 = ad::slice_cols(p, 0, 3);
  const Tensor a2 = ad::slice_cols(p, 3, 3);
  const Tensor n1 = ad::row_norm(a1) + kNormEps;
  const Tensor b1x = col(a1, 0) / n1, b1y = col(a1, 1) / n1, b1z = col(a1, 2) / n1;
  const Tensor a2x = col(a2, 0), a2y = col(a2, 1), a2z = col(a2, 2);
  const Tensor d = b1x * a2x + b1y * a2y + b1z * a2z;
  const Tensor ux = a2x - d * b1x, uy = a2y - d * b1y, uz = a2z - d * b1z;
  const Tensor n2 = ad::sqrt(ad::square(ux) + ad::square(uy) + ad::square(uz)) + kNormEps;
  const Tensor b2x = ux / n2, b2y = uy / n2, b2z = uz / n2;
  const Tensor b3x = b1y * b2z - b1z * b2y;
  const Tensor b3y = b1z * b2x - b1x * b2z;
  const Tensor b3z = b1x * b2y - b1y * b2x;
  return {b1x, b2x, b3x,  //
          b1y, b2y, b3y,  //
          b1z, b2z, b3z};
}

std::array<Tensor, 3> rotate(const RotationEntries& r, const std::array<Tensor, 3>& x) {
  std::array<Tensor, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = r[3 * i] * x[0] + r[3 * i + 1] * x[1] + r[3 * i + 2] * x[2];
  }
  return out;
}

std::array<Tensor, 3> columns3(Tensor t) { return {col(t, 0), col(t, 1), col(t, 2)}; }

std::array<Tensor, 3> warp_columns(const std::array<Tensor, 3>& x, Tensor xi, WarpFieldType type,
                                   RotationRepr repr) {
  const std::size_t want = motion_param_count(type, repr);
  if (xi.cols() != want || xi.rows() != x[0].rows()) {
    throw InvalidArgument("warp: motion batch shape (" + std::to_string(xi.rows()) + "x" +
                          std::to_string(xi.cols()) + ") does not match " + std::to_string(x[0].rows()) + " points x " +
                          std::to_string(want) + " parameters");
  }
  if (type == WarpFieldType::VectorField) {
    return {x[0] + col(xi, 0), x[1] + col(xi, 1), x[2] + col(xi, 2)};
  }
  const std::size_t nr = rotation_param_count(repr);
  Tensor rot = ad::slice_cols(xi, 0, nr);
  if (repr == RotationRepr::Quaternion || repr == RotationRepr::SixD) {
    const auto ident = identity_rotation_params(repr);
    ad::Matrix offset(static_cast<Eigen::Index>(xi.rows()), static_cast<Eigen::Index>(nr));
    for (std::size_t j = 0; j < nr; ++j) offset.col(static_cast<Eigen::Index>(j)).setConstant(ident[j]);
    rot = rot + xi.tape()->constant(std::move(offset));
  }
  const RotationEntries r = rotation_from_repr(rot, repr);
  std::array<Tensor, 3> y = rotate(r, x);
  if (type == WarpFieldType::Similarity) {
    const Tensor s = ad::exp(col(xi, nr + 3));
    for (auto& c : y) c = s * c;
  }
  for (std::size_t i = 0; i < 3; ++i) y[i] = y[i] + col(xi, nr + i);
  return y;
}

}  // namespace

RotationEntries rotation_from_repr(ad::Tensor params, RotationRepr repr) {
  require_count(repr, params.cols());
  switch (repr) {
    case RotationRepr::AxisAngle: return axis_angle_entries(params);
    case RotationRepr::EulerXYZ: return euler_entries(params);
    case RotationRepr::Quaternion: return quaternion_entries(params);
    case RotationRepr::SixD: return sixd_entries(params);
  }
  return axis_angle_entries(params);
}

ad::Tensor warp(ad::Tensor points, ad::Tensor xi, WarpFieldType type, RotationRepr repr) {
  if (points.cols() != 3) throw InvalidArgument("warp expects (n x 3) points");
  const auto y = warp_columns(columns3(points), xi, type, repr);
  return ad::concat_cols({y[0], y[1], y[2]});
}

ad::Tensor compose_level(ad::Tensor x_prev, ad::Tensor xi, ad::Tensor alpha, WarpFieldType type, RotationRepr repr) {
  if (x_prev.cols() != 3) throw InvalidArgument("compose_level expects (n x 3) points");
  if (alpha.cols() != 1 || alpha.rows() != x_prev.rows()) {
    throw InvalidArgument("compose_level: alpha must be (n x 1) with n = " + std::to_string(x_prev.rows()));
  }
  const auto x = columns3(x_prev);
  const auto w = warp_columns(x, xi, type, repr);
  std::array<Tensor, 3> out;
  for (std::size_t i = 0; i < 3; ++i) out[i] = x[i] + alpha * (w[i] - x[i]);
  return ad::concat_cols({out[0], out[1], out[2]});
}

}  // namespace ndp
