#include "ndp/optimizer.hpp"

#include <cmath>

namespace ndp {

Optimizer::Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning rate must be finite and > 0");
  }
}

void Optimizer::step(std::span<ad::Matrix* const> params, std::span<const ad::Matrix> grads) {
  if (params.size() != grads.size()) throw InvalidArgument("optimizer: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols()) {
      throw InvalidArgument("optimizer: gradient shape mismatch for parameter " + std::to_string(i));
    }
    if (!ad::all_finite(grads[i])) throw NumericalError("non-finite gradient for parameter " + std::to_string(i));
  }
  ++steps_;
  if (kind_ == OptimizerKind::GradientDescent) {
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr_ * grads[i];
    return;
  }

  if (first_.empty()) {
    for (auto* p : params) {
      first_.push_back(ad::Matrix::Zero(p->rows(), p->cols()));
      second_.push_back(ad::Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (first_.size() != params.size()) throw InvalidArgument("optimizer: parameter list changed between steps");
  const double c1 = 1.0 - std::pow(kBeta1, steps_);
  const double c2 = 1.0 - std::pow(kBeta2, steps_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = first_[i].array();
    auto v = second_[i].array();
    const auto g = grads[i].array();
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.square();
    params[i]->array() -= lr_ * (m / c1) / ((v / c2).sqrt() + kEpsilon);
  }
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIter: return "max_iter";
    case StopReason::CostThreshold: return "cost_threshold";
    case StopReason::Stalled: return "stalled";
  }
  return "?";
}

StopReason parse_stop_reason(const std::string& s) {
  if (s == "max_iter") return StopReason::MaxIter;
  if (s == "cost_threshold") return StopReason::CostThreshold;
  if (s == "stalled") return StopReason::Stalled;
  throw InvalidArgument("unknown stop reason '" + s + "'");
}

std::optional<StopReason> check_convergence(std::span<const double> history, int iter, const PyramidConfig& cfg) {
  if (history.empty()) throw InvalidArgument("check_convergence: empty cost history");
  if (history.back() <= cfg.cost_threshold) return StopReason::CostThreshold;
  if (iter >= cfg.max_iter) return StopReason::MaxIter;

  double best = history.front();
  std::size_t best_at = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (best - history[i] > cfg.stall_rel_tol * std::abs(best)) {
      best = history[i];
      best_at = i;
    }
  }
  if (history.size() - 1 - best_at >= static_cast<std::size_t>(cfg.stall_window)) return StopReason::Stalled;
  return std::nullopt;
}

}  // namespace ndp
