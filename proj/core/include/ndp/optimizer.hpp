#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ndp/autodiff.hpp"
#include "ndp/config.hpp"

namespace ndp {

/// First-order update rule over a fixed list of parameter matrices.
/// Adam uses decay rates 0.9 / 0.999 and epsilon 1e-8 with bias correction.
class Optimizer {
public:
  Optimizer(OptimizerKind kind, double learning_rate);

  /// Applies one update. `grads[i]` must match `params[i]` in shape. Throws
  /// NumericalError (naming the parameter) on a non-finite gradient, leaving
  /// every parameter untouched.
  void step(std::span<ad::Matrix* const> params, std::span<const ad::Matrix> grads);

  [[nodiscard]] int steps() const { return steps_; }
  [[nodiscard]] OptimizerKind kind() const { return kind_; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

private:
  OptimizerKind kind_;
  double lr_;
  int steps_ = 0;
  std::vector<ad::Matrix> first_;
  std::vector<ad::Matrix> second_;
};

enum class StopReason { MaxIter, CostThreshold, Stalled };

std::string to_string(StopReason r);
StopReason parse_stop_reason(const std::string& s);

/// Early-stop rule for one level, evaluated after the cost of iteration
/// `iter` (1-based) has been appended to `history`:
///  - cost <= cost_threshold           -> CostThreshold
///  - iter >= max_iter                 -> MaxIter
///  - the best cost so far has not improved by a relative stall_rel_tol for
///    stall_window consecutive iterations -> Stalled
/// Checked in that order. Returns nullopt to continue.
std::optional<StopReason> check_convergence(std::span<const double> history, int iter, const PyramidConfig& cfg);

}  // namespace ndp
