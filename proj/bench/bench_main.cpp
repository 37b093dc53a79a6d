#include <benchmark/benchmark.h>

#include "fairmon/harness.hpp"
#include "fairmon/markov.hpp"
#include "fairmon/parser.hpp"

using namespace fairmon;

namespace {

ExperimentConfig coverage_config(std::int64_t runs) {
  ExperimentConfig c;
  c.kind = ExperimentKind::coverage;
  c.chain = lending_chain();
  c.pse = kDemographicParityText;
  c.runs = static_cast<std::uint64_t>(runs);
  c.steps = 10000;
  c.seed = 1;
  return c;
}

void BM_CoverageSerial(benchmark::State& state) {
  const auto c = coverage_config(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(coverage_serial(c));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 10000);
}

void BM_CoverageParallel(benchmark::State& state) {
  const auto c = coverage_config(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(coverage(c));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 10000);
}

// Per-update cost on the size-19 social-burden expression.
void BM_MonitorUpdate(benchmark::State& state) {
  const ChainSpec chain = admission_chain();
  const Pse phi = parse_pse(social_burden_text(10), chain.states);
  const Path path = simulate(chain.chain, 1 << 16, 3);
  const auto kind = static_cast<MonitorKind>(state.range(0));
  auto monitor = make_monitor(kind, chain.states, phi, 0.05, std::nullopt, 7, chain.chain.initial());
  std::size_t t = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(monitor->next(path[t]));
    if (++t == path.size()) t = 1;
  }
  state.SetLabel(std::string(monitor_kind_name(kind)));
}

}  // namespace

BENCHMARK(BM_CoverageSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CoverageParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MonitorUpdate)
    ->Arg(static_cast<int>(MonitorKind::freq))
    ->Arg(static_cast<int>(MonitorKind::freq_baseline))
    ->Arg(static_cast<int>(MonitorKind::bayes));

BENCHMARK_MAIN();
