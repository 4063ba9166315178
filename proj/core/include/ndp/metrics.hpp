#pragma once

#include <vector>

#include "ndp/types.hpp"

namespace ndp {

/// Scene-flow quality of a predicted warp against ground truth.
struct FlowMetrics {
  double epe = 0.0;      ///< mean error norm, input units
  double acc_s = 0.0;    ///< percent
  double acc_r = 0.0;    ///< percent
  double outlier = 0.0;  ///< percent
  std::size_t count = 0;

  friend bool operator==(const FlowMetrics&, const FlowMetrics&) = default;
};

/// Thresholds of the accuracy metrics. Absolute thresholds are in input
/// units (meters for metric data).
struct MetricThresholds {
  double strict = 0.025;
  double relaxed = 0.05;
  double outlier = 0.30;
};

/// Per point: e = predicted - gt, relative error = |e| / max(|gt|, 1e-12).
/// AccS counts points with relative error < strict or |e| < strict;
/// AccR the same with `relaxed`; Outlier counts relative error > outlier.
/// Throws InvalidArgument on empty input or a count mismatch.
FlowMetrics compute_metrics(const std::vector<Vec3>& predicted_warp, const std::vector<Vec3>& ground_truth_warp,
                            const MetricThresholds& thresholds = {});

/// Per-point displacement `warped - source`.
std::vector<Vec3> displacement(const std::vector<Vec3>& source, const std::vector<Vec3>& warped);

}  // namespace ndp
