#pragma once

#include <cstdint>
#include <vector>

#include "ndp/config.hpp"
#include "ndp/cost.hpp"
#include "ndp/mlp.hpp"
#include "ndp/normalize.hpp"
#include "ndp/optimizer.hpp"
#include "ndp/types.hpp"

namespace ndp {

struct AlphaStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct LevelTrace {
  int level = 0;
  int iterations = 0;  ///< cost evaluations; equals cost_history.size()
  std::vector<double> cost_history;
  StopReason stop_reason = StopReason::MaxIter;
  CostBreakdown final_cost;  ///< of the kept iterate, the lowest-cost one
  AlphaStats alpha;
  double seconds = 0.0;
  PointCloud warped;  ///< full source after this level, input units
};

/// Converged level networks plus the frame they were optimized in. Applies
/// the learned warp to arbitrary points, such as mesh vertices or a denser
/// sampling of the source surface.
class FrozenPyramid {
public:
  FrozenPyramid() = default;
  FrozenPyramid(PyramidConfig cfg, NormalizationRecord record, std::vector<MlpLevel> levels);

  /// Points in input units through every level; result in input units.
  [[nodiscard]] std::vector<Vec3> query(const std::vector<Vec3>& points) const;
  /// Output after each level (entry k-1 is after level k), input units.
  [[nodiscard]] std::vector<std::vector<Vec3>> query_levels(const std::vector<Vec3>& points) const;

  [[nodiscard]] const std::vector<MlpLevel>& levels() const { return levels_; }
  [[nodiscard]] const PyramidConfig& config() const { return cfg_; }
  [[nodiscard]] const NormalizationRecord& normalization() const { return record_; }

private:
  PyramidConfig cfg_;
  NormalizationRecord record_;
  std::vector<MlpLevel> levels_;
};

struct RegistrationResult {
  PointCloud warped;  ///< same count, order and attributes as the source
  std::vector<LevelTrace> levels;
  int total_iterations = 0;
  double wall_seconds = 0.0;
  /// True when a level hit the cost threshold and the remaining levels were
  /// skipped.
  bool reached_cost_threshold = false;
  NormalizationRecord normalization;
  FrozenPyramid pyramid;

  /// Warped source after level `k`; levels past an early termination return
  /// the last computed level.
  [[nodiscard]] const PointCloud& level_output(int k) const;
};

/// Coarse-to-fine registration of `source` onto `target`. Level k (1..m)
/// gets a freshly initialized network that sees the output of level k-1,
/// and is optimized alone until an early-stop rule fires; its lowest-cost
/// iterate is then frozen. With `matches` the correspondence term is added.
///
/// Throws ConfigError, InvalidArgument for degenerate inputs, and
/// NumericalError (with level and iteration) if the cost or a gradient
/// becomes non-finite.
RegistrationResult register_clouds(const PointCloud& source, const PointCloud& target, const PyramidConfig& cfg,
                                   const CorrespondenceSet* matches = nullptr);

/// Seed used for the network of `level`, derived from the run seed.
std::uint64_t level_seed(std::uint64_t run_seed, int level);

/// Sorted, seeded subset of `count` indices out of `n` (all when count >= n).
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t count, std::uint64_t seed);

}  // namespace ndp
