#include "ndp/normalize.hpp"

#include <limits>

namespace ndp {

namespace {

struct Box {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const std::vector<Vec3>& points) {
    for (const auto& p : points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
};

}  // namespace

double bbox_diagonal(const std::vector<Vec3>& points) {
  if (points.empty()) return 0.0;
  Box box;
  box.extend(points);
  return (box.hi - box.lo).norm();
}

PointCloud NormalizationRecord::normalize(const PointCloud& cloud) const {
  PointCloud out = cloud;
  for (auto& p : out.points) p = to_normalized(p);
  return out;
}

PointCloud NormalizationRecord::denormalize(const PointCloud& cloud) const {
  PointCloud out = cloud;
  for (auto& p : out.points) p = to_input(p);
  return out;
}

NormalizedPair normalize_clouds(const PointCloud& source, const PointCloud& target) {
  if (source.empty()) throw InvalidArgument("source point cloud is empty");
  if (target.empty()) throw InvalidArgument("target point cloud is empty");
  source.validate();
  target.validate();

  Box box;
  box.extend(source.points);
  box.extend(target.points);
  const double diagonal = (box.hi - box.lo).norm();
  if (!(diagonal > 0.0)) throw NumericalError("degenerate bounding box: joint diagonal is zero");

  NormalizationRecord record;
  record.center = 0.5 * (box.lo + box.hi);
  record.scale = diagonal;
  return {record.normalize(source), record.normalize(target), record};
}

}  // namespace ndp
