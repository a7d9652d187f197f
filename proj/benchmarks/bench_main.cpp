#include <benchmark/benchmark.h>

#include <cmath>

#include "cpol/entanglement.hpp"
#include "cpol/montecarlo.hpp"
#include "cpol/rng.hpp"

using namespace cpol;

static void BM_SampleCompton(benchmark::State& state) {
  RngStream rng(1, 0);
  physics::PhotonState photon;
  photon.energy_kev = 511.0;
  photon.polarization = {0.3, 1.0};
  for (auto _ : state) {
    auto s = mc::sample_compton(photon, rng);
    benchmark::DoNotOptimize(s.out.energy_kev);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SampleCompton);

static void BM_TransportIdealPair(benchmark::State& state) {
  RngStream rng(2, 0);
  SourceConfig src{511.0, 0, 2};
  GeometryConfig cfg = tuned_geometry(GeometryMode::ideal);
  cfg.prescatter_arm = PrescatterArm::random;
  std::uint64_t id = 0;
  for (auto _ : state) {
    const auto pair = mc::generate_pair(src, rng);
    auto rec = mc::transport_ideal(pair, cfg, rng, id++);
    benchmark::DoNotOptimize(rec.counter_b);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TransportIdealPair);

static void BM_TransportRealisticPair(benchmark::State& state) {
  RngStream rng(3, 0);
  SourceConfig src{511.0, 0, 3};
  GeometryConfig cfg = tuned_geometry(GeometryMode::realistic);
  std::uint64_t id = 0;
  for (auto _ : state) {
    const auto pair = mc::generate_pair(src, rng);
    auto rec = mc::transport_realistic(pair, cfg, rng, id++);
    benchmark::DoNotOptimize(rec.lost);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TransportRealisticPair);

// Pairs per second for the full parallel run, the soft throughput target.
static void BM_RunSimulationIdeal(benchmark::State& state) {
  const auto workers = static_cast<int>(state.range(0));
  GeometryConfig cfg = tuned_geometry(GeometryMode::ideal);
  SourceConfig src{511.0, 500000, 5};
  for (auto _ : state) {
    std::uint64_t sum = 0;
    mc::run_simulation(src, cfg, workers, [&](std::span<const events::EventRecord> chunk) {
      sum += chunk.size();
    });
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * src.pair_count);
}
BENCHMARK(BM_RunSimulationIdeal)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_CorrelationQuadrature(benchmark::State& state) {
  const entanglement::ThreeComptonConfig cfg{511.0, 0.9, 1.4, 1.8};
  double phi = 0.0;
  for (auto _ : state) {
    const double r = entanglement::correlation_r(cfg, phi, entanglement::convention_for(cfg));
    benchmark::DoNotOptimize(r);
    phi += 0.01;
  }
}
BENCHMARK(BM_CorrelationQuadrature);

static void BM_VisibilityFromQuadrature(benchmark::State& state) {
  const entanglement::ThreeComptonConfig cfg{511.0, 0.9, 1.4, 1.8};
  for (auto _ : state) {
    benchmark::DoNotOptimize(entanglement::visibility_from_quadrature(cfg));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_VisibilityFromQuadrature)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
