#include <benchmark/benchmark.h>

#include <vector>

#include "felce/ce_strategy.hpp"
#include "felce/dynamics.hpp"
#include "felce/experiment.hpp"
#include "felce/markov.hpp"

namespace {

using namespace felce;

GameConfig config(std::size_t n) {
  ParameterSampler s = ParameterSampler::with_devices(n);
  s.require_positive_extortion_payoffs = false;
  Rng rng(derive_seed(kDefaultSeed, {n}));
  const std::vector<double> chis{1.0};
  return sample_config(s, chis, rng).config;
}

void BM_UtilityTable(benchmark::State& state) {
  const GameConfig cfg = config(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_utility_table(cfg));
}
BENCHMARK(BM_UtilityTable)->DenseRange(2, 12, 2);

void BM_FeasibleRegion(benchmark::State& state) {
  const UtilityTable t = build_utility_table(config(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(feasible_region(t, 2.0));
}
BENCHMARK(BM_FeasibleRegion)->Arg(8)->Arg(12);

void BM_StationarySolve(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const UtilityTable t = build_utility_table(config(n));
  const CEStrategy ce = derive_ce_strategy(t, 1.0, *feasible_region(t, 1.0).default_gamma());
  Rng rng(7);
  std::vector<DeviceStrategy> devices;
  for (std::size_t i = 0; i < n; ++i) devices.push_back(DeviceStrategy::scalar(uniform01(rng)));
  for (auto _ : state) {
    const TransitionMatrix m = build_transition_matrix(ce.p, devices);
    benchmark::DoNotOptimize(stationary_distribution(m));
  }
  state.SetLabel("eta=" + std::to_string(t.num_outcomes()));
}
BENCHMARK(BM_StationarySolve)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const std::vector<double> chis{1.0};
  const PreparedGame g = prepare_game(std::nullopt, ParameterSampler{}, chis, kDefaultSeed);
  const ServerAgent agent = make_agent(AgentKind::kCE, g.table, 1.0, std::nullopt, 0);
  const std::vector<double> q0(g.config.num_devices(), 0.4);
  SimulationOptions o;
  o.rounds = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    ++o.seed;
    benchmark::DoNotOptimize(simulate(g.config, g.table, agent, q0, o));
  }
}
BENCHMARK(BM_Simulate)->Arg(200)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
