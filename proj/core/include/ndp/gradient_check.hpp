#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ndp/autodiff.hpp"

namespace ndp::ad {

/// Builds a scalar on `tape` from leaf tensors holding the parameters.
using ScalarFn = std::function<Tensor(Tape& tape, std::span<const Tensor> params)>;

struct GradCheckOptions {
  double step = 1e-5;
  double tol = 1e-4;
  /// Denominator floor of the relative error, so gradients that vanish in
  /// both routes compare on an absolute scale.
  double abs_floor = 1e-6;
  /// When nonzero, only this many entries per parameter (chosen with
  /// `sample_seed`) are perturbed; smaller parameters are checked fully.
  std::size_t max_entries_per_param = 0;
  std::uint64_t sample_seed = 0;
};

struct GradCheckReport {
  bool passed = true;
  double max_rel_error = 0.0;
  std::size_t checked_entries = 0;
  /// Entries where one side of the central difference crossed a branch of a
  /// piecewise op (ReLU, |x|, clamp, nearest-neighbor choice) and the other
  /// side's one-sided difference was used instead.
  std::size_t one_sided_entries = 0;
  /// Entries where both sides crossed a branch; not compared.
  std::size_t skipped_entries = 0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  /// On failure: the first recorded op whose backward rule disagrees with a
  /// finite-difference probe of its own forward rule (empty if none found).
  std::string failing_op;
  std::string message;
};

/// Compares reverse-mode gradients of `fn` with central finite differences,
/// entry by entry. Never throws for a mismatch; it reports it.
/// `checked_entries` counts compared entries only.
GradCheckReport gradient_check(const ScalarFn& fn, const std::vector<Matrix>& params, const GradCheckOptions& opts = {});

/// Probes every recorded op on `tape` independently: a random cotangent is
/// pulled back through the op's backward rule and compared with central
/// differences of its forward rule. Returns the first failing op name.
std::string localize_backward_error(const Tape& tape, double step = 1e-6, double tol = 1e-4, std::uint64_t seed = 0);

}  // namespace ndp::ad
