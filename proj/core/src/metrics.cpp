#include "ndp/metrics.hpp"

#include <algorithm>
#include <string>

namespace ndp {

FlowMetrics compute_metrics(const std::vector<Vec3>& predicted_warp, const std::vector<Vec3>& ground_truth_warp,
                            const MetricThresholds& thresholds) {
  if (predicted_warp.empty()) throw InvalidArgument("compute_metrics: empty input");
  if (predicted_warp.size() != ground_truth_warp.size()) {
    throw InvalidArgument("compute_metrics: count mismatch (" + std::to_string(predicted_warp.size()) + " predicted vs " +
                          std::to_string(ground_truth_warp.size()) + " ground truth)");
  }
  double epe_sum = 0.0;
  std::size_t strict = 0;
  std::size_t relaxed = 0;
  std::size_t outliers = 0;
  for (std::size_t i = 0; i < predicted_warp.size(); ++i) {
    const double err = (predicted_warp[i] - ground_truth_warp[i]).norm();
    const double rel = err / std::max(ground_truth_warp[i].norm(), 1e-12);
    epe_sum += err;
    if (rel < thresholds.strict || err < thresholds.strict) ++strict;
    if (rel < thresholds.relaxed || err < thresholds.relaxed) ++relaxed;
    if (rel > thresholds.outlier) ++outliers;
  }
  const auto n = static_cast<double>(predicted_warp.size());
  FlowMetrics m;
  m.count = predicted_warp.size();
  m.epe = epe_sum / n;
  m.acc_s = 100.0 * static_cast<double>(strict) / n;
  m.acc_r = 100.0 * static_cast<double>(relaxed) / n;
  m.outlier = 100.0 * static_cast<double>(outliers) / n;
  return m;
}

std::vector<Vec3> displacement(const std::vector<Vec3>& source, const std::vector<Vec3>& warped) {
  if (source.size() != warped.size()) {
    throw InvalidArgument("displacement: count mismatch (" + std::to_string(source.size()) + " vs " +
                          std::to_string(warped.size()) + ")");
  }
  std::vector<Vec3> out(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) out[i] = warped[i] - source[i];
  return out;
}

}  // namespace ndp
