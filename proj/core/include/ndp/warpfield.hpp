#pragma once

#include <array>
#include <span>
#include <vector>

#include "ndp/autodiff.hpp"
#include "ndp/types.hpp"

namespace ndp {

/// Exponential map so(3) -> SO(3) (Rodrigues). Uses the Taylor expansion of
/// the coefficients below |omega| = 1e-8.
Mat3 exp_so3(const Vec3& omega);

/// Rotation parameters that map to the identity: zeros for axis-angle and
/// Euler, (1,0,0,0) for a (w,x,y,z) quaternion, ((1,0,0),(0,1,0)) for 6D.
std::vector<double> identity_rotation_params(RotationRepr repr);

/// Rotation matrix from explicit parameters.
///  - AxisAngle: exp_so3
///  - EulerXYZ (a, b, c): Rz(c) * Ry(b) * Rx(a)
///  - Quaternion (w, x, y, z): normalized, then the standard conversion
///  - SixD (a1, a2): Gram-Schmidt; columns b1, b2, b1 x b2
/// Throws InvalidArgument for a wrong parameter count, a zero quaternion or
/// zero/colinear 6D vectors.
Mat3 rotation_from_repr(RotationRepr repr, std::span<const double> params);

/// Per-point motion in explicit form. `rotation` holds actual parameters of
/// the representation (not offsets); `log_scale` is used by Similarity only.
struct MotionParams {
  std::vector<double> rotation;
  Vec3 translation = Vec3::Zero();
  double log_scale = 0.0;

  static MotionParams identity(RotationRepr repr) { return {identity_rotation_params(repr), Vec3::Zero(), 0.0}; }
};

/// R3: x + t.  SE(3): R x + t.  Sim(3): exp(log_scale) R x + t.
Vec3 warp(const Vec3& x, const MotionParams& xi, WarpFieldType type, RotationRepr repr);

/// Blend between identity and the warped point: x + alpha (W(x) - x).
Vec3 compose_level(const Vec3& x_prev, const MotionParams& xi, double alpha, WarpFieldType type, RotationRepr repr);

/// Layout of the network's motion vector, per point: rotation offsets
/// (added to `identity_rotation_params`), translation (3), then log-scale for
/// Similarity. VectorField carries translation only. An all-zero vector is the
/// identity motion for every type and representation.
MotionParams motion_from_network(std::span<const double> xi, WarpFieldType type, RotationRepr repr);

/// The nine entries of a batch of rotations, row-major, each n x 1.
using RotationEntries = std::array<ad::Tensor, 9>;

/// Batched `rotation_from_repr` on the tape; `params` is n x param_count of
/// actual parameters. Quaternion and 6D normalizations add 1e-12 to their
/// denominators instead of failing.
RotationEntries rotation_from_repr(ad::Tensor params, RotationRepr repr);

/// Batched warp; `xi` uses the network layout (see motion_from_network).
ad::Tensor warp(ad::Tensor points, ad::Tensor xi, WarpFieldType type, RotationRepr repr);

/// Batched level composition; `alpha` is n x 1.
ad::Tensor compose_level(ad::Tensor x_prev, ad::Tensor xi, ad::Tensor alpha, WarpFieldType type, RotationRepr repr);

}  // namespace ndp
