#include "ndp/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace ndp::ad {

namespace {

double rel_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

std::vector<Eigen::Index> pick_entries(Eigen::Index size, std::size_t limit, std::mt19937_64& rng) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(size));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  if (limit == 0 || all.size() <= limit) return all;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(limit);
  std::sort(all.begin(), all.end());
  return all;
}

struct Evaluation {
  double value = 0.0;
  std::uint64_t branches = 0;
};

Evaluation evaluate(const ScalarFn& fn, const std::vector<Matrix>& params) {
  Tape tape;
  tape.set_track_branches(true);
  std::vector<Tensor> leaves;
  leaves.reserve(params.size());
  for (const auto& p : params) leaves.push_back(tape.constant(p));
  const double v = fn(tape, leaves).item();
  return {v, tape.branch_signature()};
}

}  // namespace

GradCheckReport gradient_check(const ScalarFn& fn, const std::vector<Matrix>& params, const GradCheckOptions& opts) {
  GradCheckReport report;

  Tape tape;
  tape.set_track_branches(true);
  std::vector<Tensor> leaves;
  for (const auto& p : params) leaves.push_back(tape.variable(p));
  Tensor loss = fn(tape, leaves);
  tape.backward(loss);
  const double base = loss.item();
  const std::uint64_t base_branches = tape.branch_signature();

  std::mt19937_64 rng(opts.sample_seed);
  std::vector<Matrix> work = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Matrix& analytic = tape.grad(leaves[p]);
    for (Eigen::Index e : pick_entries(params[p].size(), opts.max_entries_per_param, rng)) {
      const double original = work[p].data()[e];
      work[p].data()[e] = original + opts.step;
      const Evaluation plus = evaluate(fn, work);
      work[p].data()[e] = original - opts.step;
      const Evaluation minus = evaluate(fn, work);
      work[p].data()[e] = original;

      // A perturbation that changes a piecewise branch measures the kink,
      // not the derivative; use the side that stayed on the base branch.
      const bool plus_ok = plus.branches == base_branches;
      const bool minus_ok = minus.branches == base_branches;
      double numeric = 0.0;
      if (plus_ok && minus_ok) {
        numeric = (plus.value - minus.value) / (2.0 * opts.step);
      } else if (plus_ok) {
        numeric = (plus.value - base) / opts.step;
        ++report.one_sided_entries;
      } else if (minus_ok) {
        numeric = (base - minus.value) / opts.step;
        ++report.one_sided_entries;
      } else {
        ++report.skipped_entries;
        continue;
      }
      const double a = analytic.data()[e];
      const double err = rel_error(a, numeric, opts.abs_floor);
      ++report.checked_entries;
      if (err > report.max_rel_error || report.checked_entries == 1) {
        report.max_rel_error = err;
        report.worst_param = p;
        report.worst_index = static_cast<std::size_t>(e);
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }

  report.passed = report.max_rel_error <= opts.tol;
  std::ostringstream msg;
  msg << (report.passed ? "passed" : "FAILED") << ": max relative error " << report.max_rel_error << " at param "
      << report.worst_param << " entry " << report.worst_index << " (analytic " << report.worst_analytic
      << ", numeric " << report.worst_numeric << ") over " << report.checked_entries << " entries";
  if (report.one_sided_entries > 0 || report.skipped_entries > 0) {
    msg << " (" << report.one_sided_entries << " one-sided, " << report.skipped_entries << " skipped at kinks)";
  }
  if (!report.passed) {
    report.failing_op = localize_backward_error(tape);
    if (!report.failing_op.empty()) msg << "; suspect op '" << report.failing_op << "'";
  }
  report.message = msg.str();
  return report;
}

std::string localize_backward_error(const Tape& tape, double step, double tol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  constexpr std::size_t kEntriesPerInput = 32;

  for (std::size_t id = 0; id < tape.size(); ++id) {
    const Node& n = tape.node(id);
    if (n.is_leaf || !n.requires_grad || !n.forward || !n.backward) continue;

    std::vector<Matrix> inputs;
    for (auto in : n.inputs) inputs.push_back(tape.node(in).value);
    auto views = [&inputs] {
      std::vector<const Matrix*> v;
      for (const auto& m : inputs) v.push_back(&m);
      return v;
    };

    Matrix cotangent = n.value.unaryExpr([&](double) { return uni(rng); });
    const auto base_views = views();
    std::vector<Matrix> analytic = n.backward(base_views, n.value, cotangent);

    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (!tape.node(n.inputs[i]).requires_grad) continue;
      if (i >= analytic.size() || analytic[i].size() == 0) continue;
      for (Eigen::Index e : pick_entries(inputs[i].size(), kEntriesPerInput, rng)) {
        const double original = inputs[i].data()[e];
        // Stay on the same side of zero, where most domain edges and kinks sit.
        const double h = original == 0.0 ? step : std::min(step, 0.5 * std::abs(original));
        inputs[i].data()[e] = original + h;
        const double plus = n.forward(views()).cwiseProduct(cotangent).sum();
        inputs[i].data()[e] = original - h;
        const double minus = n.forward(views()).cwiseProduct(cotangent).sum();
        inputs[i].data()[e] = original;
        const double numeric = (plus - minus) / (2.0 * h);
        if (rel_error(analytic[i].data()[e], numeric, 1e-6) > tol) return n.op;
      }
    }
  }
  return {};
}

}  // namespace ndp::ad
