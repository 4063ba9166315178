#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ndp/types.hpp"

namespace ndp::synth {

enum class Shape { Plane, Cylinder, Sphere, Torus };

std::string to_string(Shape s);
Shape parse_shape(const std::string& s);

/// Surface dimensions. Plane: width x height rectangle in z = 0 centered at
/// the origin. Cylinder: lateral surface, axis z, centered. Sphere: centered.
/// Torus: axis z, major/minor radius.
struct SurfaceSize {
  double plane_width = 1.0;
  double plane_height = 0.5;
  double cylinder_radius = 0.25;
  double cylinder_height = 1.0;
  double sphere_radius = 0.5;
  double torus_major = 0.5;
  double torus_minor = 0.15;
};

/// `n` points uniformly distributed (by area) on the surface.
PointCloud sample_surface(Shape shape, std::size_t n, std::uint64_t seed, const SurfaceSize& size = {});

struct DeformationSpec {
  enum class Kind { Rigid, Similarity, Twist, Bend, SineWave };

  Kind kind = Kind::Rigid;
  Vec3 rotation = Vec3::Zero();     ///< axis-angle (rigid, similarity)
  Vec3 translation = Vec3::Zero();  ///< rigid, similarity
  double scale = 1.0;               ///< similarity
  Vec3 axis = Vec3::UnitZ();        ///< twist axis / bend direction / sine direction
  double rate = 0.0;                ///< twist: radians per unit length along axis
  double curvature = 0.0;           ///< bend: 1 / radius
  double amplitude = 0.0;           ///< sine wave displacement amplitude
  double frequency = 0.0;           ///< sine wave cycles per unit length
  Vec3 normal = Vec3::UnitZ();      ///< bend / sine displacement direction
};

/// Parses `kind[:key=value,...]`, e.g. `twist:axis=z,rate=0.5236`,
/// `bend:axis=x,curvature=1.2`, `sine:amplitude=0.1,frequency=1`,
/// `rigid:rx=0.1,ty=0.2`, `similarity:s=1.5`. Axes accept x|y|z or
/// `ax;ay;az`. Throws InvalidArgument on a malformed spec.
DeformationSpec parse_deformation(const std::string& text);
std::string format_deformation(const DeformationSpec& spec);

/// Applies the deformation to one point.
///  - twist: rotation about `axis` (through the origin) by rate * (p . axis)
///  - bend: the line along `axis` is rolled onto a circle of radius
///    1/curvature in the (axis, normal) plane
///  - sine: p + amplitude * sin(2 pi frequency (p . axis)) * normal
Vec3 deform_point(const Vec3& p, const DeformationSpec& spec);

struct DeformedCloud {
  PointCloud cloud;
  std::vector<Vec3> ground_truth;  ///< deformed - original, per point
};

DeformedCloud apply_deformation(const PointCloud& cloud, const DeformationSpec& spec);

struct PartialCloud {
  PointCloud cloud;
  std::vector<std::size_t> kept;  ///< indices into the input, ascending
};

/// Keeps the `round(fraction * n)` points with the smallest projection onto
/// a seeded random direction (one side of a half-space). Throws
/// InvalidArgument unless 0 < fraction <= 1.
PartialCloud make_partial(const PointCloud& cloud, double fraction, std::uint64_t seed);

struct NoisyCloud {
  PointCloud cloud;
  std::vector<std::size_t> perturbed;  ///< ascending
};

/// Moves exactly `round(ratio * n)` seeded points to a uniform random
/// location inside the ball of `radius` around them.
NoisyCloud add_noise(const PointCloud& cloud, double ratio, double radius, std::uint64_t seed);

/// One ground-truth benchmark instance.
struct Instance {
  PointCloud source;
  PointCloud target;
  std::vector<Vec3> ground_truth;  ///< per source point
  DeformationSpec deformation;
  Shape shape = Shape::Plane;
};

/// Options for the seeded benchmark suite.
struct SuiteOptions {
  std::size_t points = 2000;
  double overlap = 1.0;      ///< fraction of the deformed cloud kept as target
  double noise_ratio = 0.0;  ///< fraction of target points perturbed
  double noise_radius_fraction = 0.25;  ///< noise ball radius / object bbox diagonal
};

/// Instance `index` of the non-rigid suite: a rectangular sheet under a
/// twist, bend or sine deformation (cycled by index) composed with a small
/// rigid motion; parameters and object scale (bbox diagonal in [0.8, 1.8])
/// are drawn from `seed`.
Instance make_suite_instance(std::size_t index, std::uint64_t seed, const SuiteOptions& options = {});

/// Source and target related by the deformation only (no partiality/noise).
Instance make_instance(Shape shape, const DeformationSpec& spec, std::size_t n, std::uint64_t seed,
                       const SurfaceSize& size = {});

}  // namespace ndp::synth
