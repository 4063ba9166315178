#include "ndp/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

namespace ndp {

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw NumericalError("point " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
  for (const auto& attr : attributes) {
    if (attr.values.size() != points.size()) {
      throw InvalidArgument("attribute '" + attr.name + "' has " + std::to_string(attr.values.size()) +
                            " values for " + std::to_string(points.size()) + " points");
    }
  }
}

void CorrespondenceSet::validate(std::size_t source_count, std::size_t target_count) const {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& c = pairs[i];
    if (c.u >= source_count) {
      throw InvalidArgument("correspondence " + std::to_string(i) + ": source index " + std::to_string(c.u) +
                            " out of range (n1=" + std::to_string(source_count) + ")");
    }
    if (c.v >= target_count) {
      throw InvalidArgument("correspondence " + std::to_string(i) + ": target index " + std::to_string(c.v) +
                            " out of range (n2=" + std::to_string(target_count) + ")");
    }
    if (!std::isfinite(c.confidence) || c.confidence < 0.0 || c.confidence > 1.0) {
      throw InvalidArgument("correspondence " + std::to_string(i) + ": confidence must be in [0, 1]");
    }
  }
}

std::size_t rotation_param_count(RotationRepr repr) {
  switch (repr) {
    case RotationRepr::AxisAngle: return 3;
    case RotationRepr::EulerXYZ: return 3;
    case RotationRepr::Quaternion: return 4;
    case RotationRepr::SixD: return 6;
  }
  return 0;
}

std::size_t motion_param_count(WarpFieldType type, RotationRepr repr) {
  switch (type) {
    case WarpFieldType::VectorField: return 3;
    case WarpFieldType::Rigid: return rotation_param_count(repr) + 3;
    case WarpFieldType::Similarity: return rotation_param_count(repr) + 4;
  }
  return 0;
}

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<WarpFieldType, 3> kWarpNames{{
    {WarpFieldType::VectorField, "R3"},
    {WarpFieldType::Rigid, "SE3"},
    {WarpFieldType::Similarity, "Sim3"},
}};
constexpr NameTable<RotationRepr, 4> kRotNames{{
    {RotationRepr::AxisAngle, "axis_angle"},
    {RotationRepr::EulerXYZ, "euler_xyz"},
    {RotationRepr::Quaternion, "quaternion"},
    {RotationRepr::SixD, "6d"},
}};
constexpr NameTable<NormKind, 2> kNormNames{{{NormKind::L1, "L1"}, {NormKind::L2, "L2"}}};
constexpr NameTable<InitScheme, 3> kInitNames{{
    {InitScheme::XavierUniform, "xavier_uniform"},
    {InitScheme::KaimingUniform, "kaiming_uniform"},
    {InitScheme::Zeros, "zeros"},
}};
constexpr NameTable<Activation, 2> kActNames{{{Activation::ReLU, "relu"}, {Activation::Sigmoid, "sigmoid"}}};
constexpr NameTable<OptimizerKind, 2> kOptNames{{{OptimizerKind::Adam, "adam"}, {OptimizerKind::GradientDescent, "gd"}}};

template <typename E, std::size_t N>
std::string name_of(const NameTable<E, N>& table, E v) {
  for (const auto& [e, name] : table) {
    if (e == v) return std::string(name);
  }
  return "?";
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

template <typename E, std::size_t N>
E parse_of(const NameTable<E, N>& table, const std::string& s, const char* what) {
  const std::string key = lower(s);
  std::string options;
  for (const auto& [e, name] : table) {
    if (lower(std::string(name)) == key) return e;
    options += (options.empty() ? "" : ", ") + std::string(name);
  }
  throw ConfigError(std::string("unknown ") + what + " '" + s + "' (expected one of: " + options + ")");
}

}  // namespace

std::string to_string(WarpFieldType v) { return name_of(kWarpNames, v); }
std::string to_string(RotationRepr v) { return name_of(kRotNames, v); }
std::string to_string(NormKind v) { return name_of(kNormNames, v); }
std::string to_string(InitScheme v) { return name_of(kInitNames, v); }
std::string to_string(Activation v) { return name_of(kActNames, v); }
std::string to_string(OptimizerKind v) { return name_of(kOptNames, v); }

WarpFieldType parse_warp_type(const std::string& s) { return parse_of(kWarpNames, s, "warp type"); }
RotationRepr parse_rotation_repr(const std::string& s) { return parse_of(kRotNames, s, "rotation representation"); }
NormKind parse_norm_kind(const std::string& s) { return parse_of(kNormNames, s, "norm"); }
InitScheme parse_init_scheme(const std::string& s) { return parse_of(kInitNames, s, "init scheme"); }
Activation parse_activation(const std::string& s) { return parse_of(kActNames, s, "activation"); }
OptimizerKind parse_optimizer(const std::string& s) { return parse_of(kOptNames, s, "optimizer"); }

}  // namespace ndp
