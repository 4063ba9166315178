#pragma once

#include <vector>

#include "ndp/types.hpp"

namespace ndp {

/// Similarity that maps input coordinates into the normalized frame:
/// p_norm = (p - center) / scale.
struct NormalizationRecord {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  [[nodiscard]] Vec3 to_normalized(const Vec3& p) const { return (p - center) / scale; }
  [[nodiscard]] Vec3 to_input(const Vec3& p) const { return p * scale + center; }
  /// Displacements only scale; they do not translate.
  [[nodiscard]] Vec3 vector_to_input(const Vec3& v) const { return v * scale; }
  [[nodiscard]] Vec3 vector_to_normalized(const Vec3& v) const { return v / scale; }

  [[nodiscard]] PointCloud normalize(const PointCloud& cloud) const;
  [[nodiscard]] PointCloud denormalize(const PointCloud& cloud) const;

  static NormalizationRecord identity() { return {}; }
};

struct NormalizedPair {
  PointCloud source;
  PointCloud target;
  NormalizationRecord record;
};

/// Centers the joint bounding box of both clouds at the origin and scales it
/// to unit diagonal. Throws InvalidArgument on an empty cloud and
/// NumericalError when the joint bounding box has zero diagonal.
NormalizedPair normalize_clouds(const PointCloud& source, const PointCloud& target);

/// Axis-aligned bounding box diagonal length.
double bbox_diagonal(const std::vector<Vec3>& points);

}  // namespace ndp
