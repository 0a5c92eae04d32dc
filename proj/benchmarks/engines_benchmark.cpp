#include <benchmark/benchmark.h>

#include "homeostat/analytic.hpp"
#include "homeostat/kinetics.hpp"
#include "homeostat/network.hpp"
#include "homeostat/simulate.hpp"

namespace {

using namespace homeostat;

// Linear chain of `depth` + 1 compartments fed at the head, Gamma(2, 2) hops.
Network chain(int depth) {
  NetworkSpec spec;
  spec.compartments = depth + 1;
  spec.types = 1;
  for (int k = 1; k <= depth; ++k) {
    spec.edges.push_back({{k, 1}, {k + 1, 1}, 1.0, DelayDistribution::gamma(2.0, 2.0)});
  }
  spec.exits.push_back({{depth + 1, 1}, 1.0, DelayDistribution::exponential(1.0)});
  spec.inputs.push_back({{1, 1}, "s"});
  return Network(spec);
}

const AlmostPeriodicSignal kDrive{2.0, {{5.0, {0.5, 0.0}}}};

void BM_TransitionKernel(benchmark::State& state) {
  const Network net = chain(static_cast<int>(state.range(0)));
  const auto grid = TimeGrid::with_horizon(20.0, 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(transition_kernel(net, grid));
  }
  state.counters["nodes"] = static_cast<double>(net.size());
}
BENCHMARK(BM_TransitionKernel)->Arg(1)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_TransientMean(benchmark::State& state) {
  const Network net = chain(3);
  const auto kernel = transition_kernel(net, TimeGrid::with_horizon(20.0, 0.01));
  const std::vector<BoundInput> inputs{{0, kDrive}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(transient_mean(net, kernel, inputs));
  }
}
BENCHMARK(BM_TransientMean)->Unit(benchmark::kMillisecond);

void BM_SpectralResponse(benchmark::State& state) {
  const Network net = chain(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(spectral_response(net, 5.0));
  }
}
BENCHMARK(BM_SpectralResponse)->Arg(1)->Arg(6)->Arg(24);

void BM_Simulate(benchmark::State& state) {
  const Network net = chain(3);
  const std::vector<BoundInput> inputs{{0, kDrive}};
  SimConfig cfg;
  cfg.horizon = 20.0;
  cfg.replications = static_cast<std::size_t>(state.range(0));
  cfg.seed = 1;
  cfg.threads = 1;
  for (int k = 1; k <= 40; ++k) cfg.sample_times.push_back(0.5 * k);
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(net, inputs, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_DelayKinetics(benchmark::State& state) {
  KineticsSpec k;
  k.reactions.compartments = 2;
  k.reactions.types = 2;
  k.reactions.jumps = {{{1, 1}, {1, 2}, 0.8}, {{2, 1}, {2, 2}, 0.5}};
  k.reactions.exits = {{{1, 2}, 0.4}, {{2, 2}, 1.0}};
  k.transport = {{{1, 1}, {2, 1}, 1.5, DelayDistribution::gamma(2.0, 3.0)}};
  k.inputs = {{{1, 1}, "s"}};
  const SignalSet signals{{"s", kDrive}};
  const auto grid = TimeGrid::with_horizon(static_cast<double>(state.range(0)), 0.02);
  for (auto _ : state) {
    benchmark::DoNotOptimize(delay_kinetics(k, signals, grid));
  }
}
BENCHMARK(BM_DelayKinetics)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
