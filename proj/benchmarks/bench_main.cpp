#include <benchmark/benchmark.h>

#include <random>

#include "herosnet/cassi.hpp"
#include "herosnet/ops.hpp"
#include "herosnet/recovery.hpp"
#include "herosnet/trainer.hpp"

using namespace herosnet;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, bool grad = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v), grad);
}

void BM_Conv2d(benchmark::State& state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const auto side = static_cast<std::size_t>(state.range(1));
  const auto x = random_tensor({1, ch, side, side}, 1);
  const auto w = random_tensor({ch, ch, 3, 3}, 2);
  const auto b = random_tensor({ch}, 3);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b, 1, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(ch * ch * 9 * side * side));
}
BENCHMARK(BM_Conv2d)->Args({8, 32})->Args({32, 32})->Args({32, 64});

void BM_Conv2dBackward(benchmark::State& state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({1, ch, 32, 32}, 1, true);
  const auto w = random_tensor({ch, ch, 3, 3}, 2, true);
  const auto b = random_tensor({ch}, 3, true);
  for (auto _ : state) backward(ops::sum(ops::conv2d(x, w, b, 1, 1)));
}
BENCHMARK(BM_Conv2dBackward)->Arg(8)->Arg(32);

void BM_ForwardAdjoint(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const std::size_t c = 28;
  const auto rule = DispersionRule::unit(c);
  const auto mask = Mask::bernoulli(side, side, 0.5, 4);
  HyperspectralCube cube(side, side, c, 0.5);
  for (auto _ : state) {
    const auto y = cassi::forward(cube, mask, rule);
    benchmark::DoNotOptimize(cassi::adjoint(y, mask, rule));
  }
}
BENCHMARK(BM_ForwardAdjoint)->Arg(64)->Arg(256);

void BM_ReconstructToy(benchmark::State& state) {
  const auto cfg = RecoveryConfig::toy();
  const auto net = init_network(cfg, 5);
  const auto rule = DispersionRule::unit(8);
  const auto mask = Mask::bernoulli(32, 32, 0.5, 6);
  const auto y = cassi::forward(random_tensor({1, 8, 32, 32}, 7), mask.to_tensor(), rule);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(recovery::reconstruct(y, mask.to_tensor(), rule, net));
}
BENCHMARK(BM_ReconstructToy)->Unit(benchmark::kMillisecond);

void BM_TrainStepToy(benchmark::State& state) {
  const auto cfg = RecoveryConfig::toy();
  TrainConfig tcfg;
  auto st = init_train_state(32, 32, tcfg, cfg);
  auto params = st.trainable();
  const auto rule = DispersionRule::unit(8);
  const auto gt = random_tensor({1, 8, 32, 32}, 8);
  for (auto _ : state) {
    const auto mask = st.mask.binary_tensor();
    const auto rec = recovery::reconstruct(cassi::forward(gt, mask, rule), mask, rule, st.net);
    backward(training_loss(rec.estimates, gt, 0.5));
    adam_step(params, st.optimizer, 1e-4);
  }
}
BENCHMARK(BM_TrainStepToy)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
