#include <benchmark/benchmark.h>

#include "bapusim/engine.hpp"
#include "bapusim/experiments.hpp"
#include "bapusim/rng.hpp"
#include "bapusim/simulation.hpp"

namespace {

using namespace bapusim;

void BM_EventQueue(benchmark::State& state) {
  for (auto _ : state) {
    Engine eng;
    RngStream rng(7, 0);
    for (int i = 0; i < 10000; ++i) {
      eng.schedule(static_cast<SimTime>(rng.uniform_int(0, 1'000'000)), 0,
                   EventKind::TimerExpiry, [] {});
    }
    eng.run_until(sec(2));
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_EventQueue);

void BM_RngDraw(benchmark::State& state) {
  RngStream rng(1, 2);
  uint64_t acc = 0;
  for (auto _ : state) acc += rng.next_u64();
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_RngDraw);

void BM_UdpScenarioSecond(benchmark::State& state) {
  for (auto _ : state) {
    Scenario sc;
    sc.proto = Proto::Udp;
    sc.mode = Mode::Basic;
    sc.n_aps = static_cast<int>(state.range(0));
    sc.duration_s = 2.0;
    sc.warmup_s = 0.5;
    Simulation sim(sc);
    sim.run();
    benchmark::DoNotOptimize(sim.metrics().app_bytes_window);
  }
}
BENCHMARK(BM_UdpScenarioSecond)->Arg(3)->Arg(7);

void BM_TcpProactiveSecond(benchmark::State& state) {
  for (auto _ : state) {
    Scenario sc;
    sc.proto = Proto::Tcp;
    sc.mode = Mode::Proactive;
    sc.n_aps = 7;
    sc.duration_s = 2.0;
    sc.warmup_s = 0.5;
    Simulation sim(sc);
    sim.run();
    benchmark::DoNotOptimize(sim.metrics().app_bytes_window);
  }
}
BENCHMARK(BM_TcpProactiveSecond);

}  // namespace

BENCHMARK_MAIN();
