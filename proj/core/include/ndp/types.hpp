#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ndp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or unparsable config file.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// File format or filesystem failure.
class IoError : public Error {
public:
  using Error::Error;
};

/// Non-finite values during optimization, or a numerically degenerate input.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Shape mismatch or malformed argument passed to an operation.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// PLY scalar types, kept so extra vertex properties can be written back unchanged.
enum class PlyScalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

/// Extra per-vertex property (color, normal, ...) carried alongside positions.
struct VertexAttribute {
  std::string name;
  PlyScalar type = PlyScalar::Float32;
  std::vector<double> values;
};

/// Ordered set of 3D points. Warping moves positions only; attributes ride along.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<VertexAttribute> attributes;

  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)) {}

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] bool empty() const { return points.empty(); }

  /// Throws NumericalError naming the first non-finite point.
  void validate() const;
};

enum class WarpFieldType { VectorField, Rigid, Similarity };

enum class RotationRepr { AxisAngle, EulerXYZ, Quaternion, SixD };

enum class NormKind { L1, L2 };

enum class InitScheme { XavierUniform, KaimingUniform, Zeros };

enum class Activation { ReLU, Sigmoid };

enum class OptimizerKind { Adam, GradientDescent };

/// Number of rotation parameters for a representation: 3, 3, 4 or 6.
std::size_t rotation_param_count(RotationRepr repr);

/// Per-point motion parameter count for a warp type: translation (3), plus
/// rotation parameters for Rigid/Similarity, plus one log-scale for Similarity.
std::size_t motion_param_count(WarpFieldType type, RotationRepr repr);

std::string to_string(WarpFieldType v);
std::string to_string(RotationRepr v);
std::string to_string(NormKind v);
std::string to_string(InitScheme v);
std::string to_string(Activation v);
std::string to_string(OptimizerKind v);

WarpFieldType parse_warp_type(const std::string& s);
RotationRepr parse_rotation_repr(const std::string& s);
NormKind parse_norm_kind(const std::string& s);
InitScheme parse_init_scheme(const std::string& s);
Activation parse_activation(const std::string& s);
OptimizerKind parse_optimizer(const std::string& s);

/// One putative match between source point `u` and target point `v`.
struct Correspondence {
  std::size_t u = 0;
  std::size_t v = 0;
  double confidence = 1.0;
};

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;

  [[nodiscard]] std::size_t size() const { return pairs.size(); }
  [[nodiscard]] bool empty() const { return pairs.empty(); }

  /// Throws InvalidArgument if any index is out of range or a confidence is
  /// outside [0, 1].
  void validate(std::size_t source_count, std::size_t target_count) const;
};

}  // namespace ndp
