#include "ndp/nn_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ndp {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

NnIndex::NnIndex(std::vector<Vec3> points, std::size_t brute_force_below) : points_(std::move(points)) {
  if (points_.empty()) throw InvalidArgument("nearest-neighbor index over an empty point set");
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("point set too large");
  if (points_.size() < brute_force_below) return;
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t NnIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all points coincide

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  TreeNode& node = nodes_[static_cast<std::size_t>(id)];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void NnIndex::search(std::int32_t id, const Vec3& q, double& best_d2, std::size_t& best) const {
  const TreeNode& node = nodes_[static_cast<std::size_t>(id)];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t p = order_[i];
      const double d2 = squared_distance(q, points_[p]);
      if (d2 < best_d2 || (d2 == best_d2 && p < best)) {
        best_d2 = d2;
        best = p;
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff <= 0.0 ? node.left : node.right;
  const std::int32_t far = diff <= 0.0 ? node.right : node.left;
  search(near, q, best_d2, best);
  if (diff * diff <= best_d2) search(far, q, best_d2, best);
}

NnIndex::Hit NnIndex::nearest(const Vec3& query) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best = std::numeric_limits<std::size_t>::max();
  if (nodes_.empty()) {
    for (std::size_t p = 0; p < points_.size(); ++p) {
      const double d2 = squared_distance(query, points_[p]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = p;
      }
    }
  } else {
    search(0, query, best_d2, best);
  }
  return {best, std::sqrt(best_d2)};
}

NnResult nearest_neighbors(std::span<const Vec3> queries, const NnIndex& index) {
  NnResult out;
  out.indices.resize(queries.size());
  out.distances.resize(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto hit = index.nearest(queries[i]);
    out.indices[i] = hit.index;
    out.distances[i] = hit.distance;
  }
  return out;
}

}  // namespace ndp
