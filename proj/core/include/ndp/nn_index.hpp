#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ndp/types.hpp"

namespace ndp {

/// Exact nearest-neighbor index over a fixed point set. Small sets are
/// scanned linearly, larger ones go through a KD-tree; both routes break
/// distance ties toward the lowest point index, so they agree exactly.
class NnIndex {
public:
  struct Hit {
    std::size_t index = 0;
    double distance = 0.0;
  };

  static constexpr std::size_t kDefaultBruteForceBelow = 64;

  /// Throws InvalidArgument on an empty point set.
  explicit NnIndex(std::vector<Vec3> points, std::size_t brute_force_below = kDefaultBruteForceBelow);

  [[nodiscard]] Hit nearest(const Vec3& query) const;
  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] bool uses_tree() const { return !nodes_.empty(); }
  [[nodiscard]] const std::vector<Vec3>& points() const { return points_; }

private:
  struct TreeNode {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& q, double& best_d2, std::size_t& best) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<TreeNode> nodes_;
};

struct NnResult {
  std::vector<std::size_t> indices;
  std::vector<double> distances;
};

/// Exact nearest neighbor in `index` for every query point.
NnResult nearest_neighbors(std::span<const Vec3> queries, const NnIndex& index);

/// Squared distance with a fixed evaluation order, shared by every route.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace ndp
