#include "ndp/pyramid.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>
#include <utility>

#include "allocator.hpp"
#include "ndp/encoding.hpp"
#include "ndp/warpfield.hpp"

namespace ndp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

MlpShape level_shape(const PyramidConfig& cfg) {
  MlpShape shape;
  shape.input_dim = 6;
  shape.width = cfg.mlp_width;
  shape.depth = cfg.mlp_depth;
  shape.xi_dim = static_cast<int>(motion_param_count(cfg.warp_type, cfg.rot_repr));
  return shape;
}

ad::Matrix encode(const ad::Matrix& points, int level, int k0) {
  ad::Tape tape;
  return positional_encode(tape.constant(points), level, k0).value();
}

// Applies one frozen level to normalized points.
ad::Matrix apply_level(const MlpLevel& net, const ad::Matrix& points, int level, const PyramidConfig& cfg) {
  ad::Tape tape;
  const auto params = net.bind(tape, false);
  const ad::Tensor x = tape.constant(points);
  const auto out = net.forward(params, positional_encode(x, level, cfg.k0));
  return compose_level(x, out.xi, out.alpha, cfg.warp_type, cfg.rot_repr).value();
}

AlphaStats alpha_stats(const ad::Matrix& alpha) {
  return {alpha.mean(), alpha.minCoeff(), alpha.maxCoeff()};
}

CorrespondenceSet remap_matches(const CorrespondenceSet& matches, const std::vector<std::size_t>& src_keep,
                                const std::vector<std::size_t>& tgt_keep) {
  std::unordered_map<std::size_t, std::size_t> src_pos;
  std::unordered_map<std::size_t, std::size_t> tgt_pos;
  for (std::size_t i = 0; i < src_keep.size(); ++i) src_pos.emplace(src_keep[i], i);
  for (std::size_t i = 0; i < tgt_keep.size(); ++i) tgt_pos.emplace(tgt_keep[i], i);
  CorrespondenceSet out;
  for (const auto& c : matches.pairs) {
    const auto su = src_pos.find(c.u);
    const auto tv = tgt_pos.find(c.v);
    if (su != src_pos.end() && tv != tgt_pos.end()) out.pairs.push_back({su->second, tv->second, c.confidence});
  }
  return out;
}

std::vector<Vec3> pick(const std::vector<Vec3>& points, const std::vector<std::size_t>& idx) {
  std::vector<Vec3> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(points[i]);
  return out;
}

}  // namespace

std::uint64_t level_seed(std::uint64_t run_seed, int level) {
  // splitmix64 finalizer over (seed, level)
  std::uint64_t z = run_seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(level + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= n) return idx;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick_one(i, n - 1);
    std::swap(idx[i], idx[pick_one(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

FrozenPyramid::FrozenPyramid(PyramidConfig cfg, NormalizationRecord record, std::vector<MlpLevel> levels)
    : cfg_(std::move(cfg)), record_(record), levels_(std::move(levels)) {}

std::vector<std::vector<Vec3>> FrozenPyramid::query_levels(const std::vector<Vec3>& points) const {
  std::vector<Vec3> normalized;
  normalized.reserve(points.size());
  for (const auto& p : points) normalized.push_back(record_.to_normalized(p));
  ad::Matrix x = to_matrix(normalized);

  std::vector<std::vector<Vec3>> out;
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (x.rows() > 0) x = apply_level(levels_[k], x, static_cast<int>(k + 1), cfg_);
    std::vector<Vec3> level_pts = to_points(x);
    for (auto& p : level_pts) p = record_.to_input(p);
    out.push_back(std::move(level_pts));
  }
  return out;
}

std::vector<Vec3> FrozenPyramid::query(const std::vector<Vec3>& points) const {
  if (levels_.empty()) return points;
  auto all = query_levels(points);
  return std::move(all.back());
}

const PointCloud& RegistrationResult::level_output(int k) const {
  if (levels.empty()) throw InvalidArgument("registration has no levels");
  if (k < 1) throw InvalidArgument("level index must be >= 1");
  const auto i = std::min(static_cast<std::size_t>(k), levels.size()) - 1;
  return levels[i].warped;
}

RegistrationResult register_clouds(const PointCloud& source, const PointCloud& target, const PyramidConfig& cfg,
                                   const CorrespondenceSet* matches) {
  validate_config(cfg);
  detail::retain_freed_memory();
  const auto t0 = Clock::now();

  NormalizationRecord record = NormalizationRecord::identity();
  std::vector<Vec3> src_all;
  std::vector<Vec3> tgt_all;
  if (cfg.normalize) {
    auto pair = normalize_clouds(source, target);
    record = pair.record;
    src_all = std::move(pair.source.points);
    tgt_all = std::move(pair.target.points);
  } else {
    if (source.empty() || target.empty()) throw InvalidArgument("source and target must be non-empty");
    source.validate();
    target.validate();
    src_all = source.points;
    tgt_all = target.points;
  }
  if (matches != nullptr) matches->validate(src_all.size(), tgt_all.size());

  // Optimization-time subsampling; the final warp is re-queried on all points.
  std::vector<Vec3> src_opt = src_all;
  std::vector<Vec3> tgt_opt = tgt_all;
  CorrespondenceSet sub_matches;
  const CorrespondenceSet* opt_matches = (matches != nullptr && !matches->empty()) ? matches : nullptr;
  if (cfg.subsample) {
    const auto budget = static_cast<std::size_t>(cfg.subsample_points);
    const auto src_keep = subsample_indices(src_all.size(), budget, level_seed(cfg.rng_seed, -1));
    const auto tgt_keep = subsample_indices(tgt_all.size(), budget, level_seed(cfg.rng_seed, -2));
    src_opt = pick(src_all, src_keep);
    tgt_opt = pick(tgt_all, tgt_keep);
    if (opt_matches != nullptr) {
      sub_matches = remap_matches(*matches, src_keep, tgt_keep);
      opt_matches = sub_matches.empty() ? nullptr : &sub_matches;
    }
  }

  const TargetCloud target_cloud(tgt_opt);
  const MlpShape shape = level_shape(cfg);

  RegistrationResult result;
  result.normalization = record;
  std::vector<MlpLevel> frozen;
  ad::Matrix x_prev = to_matrix(src_opt);

  for (int k = 1; k <= cfg.m; ++k) {
    const auto level_t0 = Clock::now();
    MlpLevel net = MlpLevel::init(shape, level_seed(cfg.rng_seed, k), cfg.init, cfg.output_scale, cfg.activation);
    Optimizer optimizer(cfg.optimizer, cfg.learning_rate);
    const ad::Matrix encoded = encode(x_prev, k, cfg.k0);

    LevelTrace trace;
    trace.level = k;
    ad::Matrix x_next;
    // The level keeps its lowest-cost iterate, not the last one.
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<ad::Matrix> best_params;
    ad::Matrix best_x;
    CostBreakdown best_breakdown;
    AlphaStats best_alpha;
    for (int iter = 1;; ++iter) {
      ad::Tape tape;
      const auto params = net.bind(tape, true);
      CostTerms cost;
      ad::Tensor x_k;
      ad::Tensor alpha;
      try {
        const auto out = net.forward(params, tape.constant(encoded));
        alpha = out.alpha;
        x_k = compose_level(tape.constant(x_prev), out.xi, out.alpha, cfg.warp_type, cfg.rot_repr);
        cost = total_cost(x_k, target_cloud, out.alpha, opt_matches, cfg);
      } catch (const NumericalError& e) {
        throw NumericalError("level " + std::to_string(k) + ", iteration " + std::to_string(iter) + ": " + e.what());
      }
      trace.cost_history.push_back(cost.breakdown.e_total);
      if (cost.breakdown.e_total < best_cost) {
        best_cost = cost.breakdown.e_total;
        best_params.clear();
        for (const ad::Matrix* p : std::as_const(net).parameters()) best_params.push_back(*p);
        best_x = x_k.value();
        best_breakdown = cost.breakdown;
        best_alpha = alpha_stats(alpha.value());
      }

      if (const auto stop = check_convergence(trace.cost_history, iter, cfg)) {
        trace.stop_reason = *stop;
        trace.final_cost = best_breakdown;
        trace.alpha = best_alpha;
        const auto targets = net.parameters();
        for (std::size_t i = 0; i < targets.size(); ++i) *targets[i] = std::move(best_params[i]);
        x_next = std::move(best_x);
        break;
      }

      tape.backward(cost.total);
      std::vector<ad::Matrix> grads;
      grads.reserve(params.size());
      for (const auto& p : params) grads.push_back(tape.grad(p));
      try {
        const auto targets = net.parameters();
        optimizer.step(targets, grads);
      } catch (const NumericalError& e) {
        throw NumericalError("level " + std::to_string(k) + ", iteration " + std::to_string(iter) + ": " + e.what());
      }
    }

    trace.iterations = static_cast<int>(trace.cost_history.size());
    trace.seconds = seconds_since(level_t0);
    result.total_iterations += trace.iterations;
    x_prev = std::move(x_next);
    frozen.push_back(std::move(net));
    const bool done = trace.stop_reason == StopReason::CostThreshold;
    result.levels.push_back(std::move(trace));
    if (done) {
      result.reached_cost_threshold = true;
      break;
    }
  }

  result.pyramid = FrozenPyramid(cfg, record, std::move(frozen));
  auto per_level = result.pyramid.query_levels(source.points);
  for (std::size_t k = 0; k < per_level.size(); ++k) {
    PointCloud snapshot;
    snapshot.points = std::move(per_level[k]);
    snapshot.attributes = source.attributes;
    result.levels[k].warped = std::move(snapshot);
  }
  result.warped = result.levels.back().warped;
  result.wall_seconds = seconds_since(t0);
  return result;
}

}  // namespace ndp
