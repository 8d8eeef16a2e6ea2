// Serial reference scorer vs the OpenMP scorer on a simulated task.

#include <benchmark/benchmark.h>

#include <map>
#include <string>
#include <vector>

#include "rapidcs/decoder.hpp"
#include "rapidcs/simulator.hpp"

using namespace rapidcs;

namespace {

struct Fixture {
  std::vector<WorkerSession> sessions;
  PriorMap priors;
  ScoreOptions options;
};

const Fixture& fixture(std::size_t items, int redundancy) {
  static std::map<std::pair<std::size_t, int>, Fixture> cache;
  auto& f = cache[{items, redundancy}];
  if (!f.sessions.empty()) return f;
  std::vector<Item> xs;
  TruthMap truth;
  for (std::size_t i = 0; i < items; ++i) {
    Item it;
    it.item_id = "i" + std::to_string(i);
    it.prior = 0.05;
    truth[it.item_id] = i % 20 == 0;
    xs.push_back(it);
  }
  TaskConfig c;
  c.redundancy = redundancy;
  c.rng_seed = 11;
  std::vector<WorkerProfile> profiles(static_cast<std::size_t>(redundancy));
  f.sessions = simulate_experiment(xs, truth, c, profiles, 12);
  f.priors = resolve_priors(xs, c);
  f.options.lookback_ms = c.effective_lookback_ms(DelayModel{});
  return f;
}

void BM_ScoreSerial(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::score_items_serial(f.sessions, DelayModel{}, f.priors, f.options));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_ScoreOpenMP(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_items(f.sessions, DelayModel{}, f.priors, f.options));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

}  // namespace

BENCHMARK(BM_ScoreSerial)->Args({1000, 5})->Args({10000, 5})->Args({10000, 10});
BENCHMARK(BM_ScoreOpenMP)->Args({1000, 5})->Args({10000, 5})->Args({10000, 10});

BENCHMARK_MAIN();
