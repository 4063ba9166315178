#include <benchmark/benchmark.h>

#include <random>

#include "ndp/cost.hpp"
#include "ndp/encoding.hpp"
#include "ndp/mlp.hpp"
#include "ndp/nn_index.hpp"
#include "ndp/pyramid.hpp"
#include "ndp/synth.hpp"
#include "ndp/warpfield.hpp"

using namespace ndp;

namespace {

std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  return pts;
}

void BM_NearestKdTree(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const NnIndex index(random_points(n, 1));
  const auto queries = random_points(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nearest_neighbors(queries, index));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_NearestBruteForce(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const NnIndex index(random_points(n, 1), n + 1);
  const auto queries = random_points(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nearest_neighbors(queries, index));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_ChamferL1(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto src = random_points(n, 3);
  const TargetCloud target(random_points(n, 4));
  for (auto _ : state) {
    ad::Tape tape;
    auto x = tape.variable(to_matrix(src));
    auto c = chamfer_cost(x, target, NormKind::L1);
    tape.backward(c);
    benchmark::DoNotOptimize(tape.grad(x).data());
  }
}

ad::Matrix encoded_points(std::size_t n) {
  ad::Tape tape;
  return positional_encode(tape.constant(to_matrix(random_points(n, 5))), 9, -8).value();
}

void BM_MlpForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto net = MlpLevel::init({}, 1, InitScheme::XavierUniform, 1e-4);
  const ad::Matrix enc = encoded_points(n);
  for (auto _ : state) {
    ad::Tape tape;
    const auto out = net.forward(net.bind(tape, false), tape.constant(enc));
    benchmark::DoNotOptimize(out.xi.value().data());
  }
}

void BM_MlpForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto net = MlpLevel::init({}, 1, InitScheme::XavierUniform, 1e-4);
  const ad::Matrix enc = encoded_points(n);
  for (auto _ : state) {
    ad::Tape tape;
    const auto params = net.bind(tape, true);
    const auto out = net.forward(params, tape.constant(enc));
    tape.backward(ad::sum(out.xi) + ad::sum(out.alpha));
    benchmark::DoNotOptimize(tape.grad(params[0]).data());
  }
}

void BM_LevelIteration(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto inst = synth::make_suite_instance(0, 1, {.points = n});
  const TargetCloud target(inst.target.points);
  const PyramidConfig cfg;
  const auto net = MlpLevel::init({}, 1, cfg.init, cfg.output_scale);
  const ad::Matrix x_prev = to_matrix(inst.source.points);
  for (auto _ : state) {
    ad::Tape tape;
    const auto params = net.bind(tape, true);
    const auto x = tape.constant(x_prev);
    const auto out = net.forward(params, positional_encode(x, 5, cfg.k0));
    const auto warped = compose_level(x, out.xi, out.alpha, cfg.warp_type, cfg.rot_repr);
    const auto cost = total_cost(warped, target, out.alpha, nullptr, cfg);
    tape.backward(cost.total);
    benchmark::DoNotOptimize(tape.grad(params[0]).data());
  }
}

}  // namespace

BENCHMARK(BM_NearestKdTree)->Arg(2048)->Arg(20000);
BENCHMARK(BM_NearestBruteForce)->Arg(2048);
BENCHMARK(BM_ChamferL1)->Arg(2048);
BENCHMARK(BM_MlpForward)->Arg(2048);
BENCHMARK(BM_MlpForwardBackward)->Arg(2048);
BENCHMARK(BM_LevelIteration)->Arg(2048)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
