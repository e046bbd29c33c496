#include <benchmark/benchmark.h>

#include "scanet/arch/gradient_map.hpp"
#include "scanet/arch/network.hpp"
#include "scanet/nn/conv.hpp"
#include "scanet/nn/parameters.hpp"
#include "scanet/profile/cost.hpp"
#include "scanet/tensor/ops.hpp"
#include "scanet/tensor/random.hpp"

using namespace scanet;

namespace {

Tensor random_input(Shape s) {
  std::vector<float> v(s.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = float(random::uniform(1, 0, i));
  return Tensor::from_data(s, std::move(v));
}

void BM_Forward(benchmark::State& state) {
  const auto hw = static_cast<std::size_t>(state.range(0));
  const arch::NetworkConfig cfg;
  const arch::ScaNet<float> net(cfg, 0);
  const Tensor x = random_input({1, 3, hw, hw});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, arch::Phase::inference).denoised);
  const double macs = double(profile::count_costs(cfg, hw, hw).total_macs);
  state.counters["GMAC/s"] = benchmark::Counter(macs * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const arch::NetworkConfig cfg;
  arch::ScaNet<float> net(cfg, 0);
  const Tensor x = random_input({8, 3, 32, 32});
  for (auto _ : state) {
    net.parameters().zero_grad();
    const auto out = net.forward(x);
    mean(out.denoised).backward();
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_Conv3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  nn::ParameterSet<float> ps;
  nn::ParamFactory<float> factory(ps, 0);
  const auto conv = factory.conv("c", nn::conv_geometry(c, c, 3));
  const Tensor x = random_input({1, c, 64, 64});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(x, conv));
  state.counters["GMAC/s"] = benchmark::Counter(double(64 * 64 * c * c * 9) * 1e-9,
                                                benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv3x3)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_GradientMap(benchmark::State& state) {
  const Tensor x = random_input({1, 3, 256, 256});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(arch::extract_gradient_map(x));
}
BENCHMARK(BM_GradientMap)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
