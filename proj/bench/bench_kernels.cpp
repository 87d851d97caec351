// Serial reference against the OpenMP kernel for each parallel path, plus
// single-state evaluation latency. Set OMP_NUM_THREADS to compare scaling.
#include <benchmark/benchmark.h>

#include <string>

#include "btrisk/io.hpp"
#include "btrisk/risk.hpp"
#include "btrisk/sdl.hpp"
#include "btrisk/simulation.hpp"

using namespace btrisk;

namespace {

std::string fixture(const std::string& rel) { return std::string(BTRISK_FIXTURE_DIR) + "/" + rel; }

const BowTie& roadway() {
  static const BowTie m = load_model(fixture("roadway.btd.json"));
  return m;
}

const GroundTruth& truth() {
  static const GroundTruth t = load_truth(fixture("truth.json"));
  return t;
}

StatePrior roadway_prior() {
  StatePrior p;
  for (const auto& v : roadway().state_schema) {
    if (v.is_discrete()) p.set(v.name, DiscreteMarginal{{{"0", 0.75}, {"1", 0.25}}});
    else p.set(v.name, UniformMarginal{v.continuous().lower, v.continuous().upper});
  }
  return p;
}

void BM_Episodes(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_episodes(truth(), roadway(), n, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EpisodesSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_episodes_serial(truth(), roadway(), n, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Marginal(benchmark::State& state) {
  const RiskEngine engine(roadway());
  const StatePrior prior = roadway_prior();
  const MonteCarlo mc{static_cast<std::size_t>(state.range(0)), 3};
  for (auto _ : state) benchmark::DoNotOptimize(marginal_consequence_rate(engine, "C1", prior, mc));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MarginalSerial(benchmark::State& state) {
  const RiskEngine engine(roadway());
  const StatePrior prior = roadway_prior();
  const MonteCarlo mc{static_cast<std::size_t>(state.range(0)), 3};
  for (auto _ : state) benchmark::DoNotOptimize(marginal_consequence_rate_serial(engine, "C1", prior, mc));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SdlSample(benchmark::State& state) {
  const auto scene = sdl::parse(read_file(fixture("roadway_scenes.sdl")));
  for (auto _ : state) benchmark::DoNotOptimize(sdl::sample(scene, static_cast<std::size_t>(state.range(0)), 5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SdlSampleSerial(benchmark::State& state) {
  const auto scene = sdl::parse(read_file(fixture("roadway_scenes.sdl")));
  for (auto _ : state)
    benchmark::DoNotOptimize(sdl::sample_serial(scene, static_cast<std::size_t>(state.range(0)), 5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ConsequenceRate(benchmark::State& state) {
  const RiskEngine engine(roadway());
  const StateVector s = draw_state(truth(), 1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(engine.consequence_rate("C1", s));
}

}  // namespace

BENCHMARK(BM_Episodes)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EpisodesSerial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Marginal)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MarginalSerial)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SdlSample)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SdlSampleSerial)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConsequenceRate);

BENCHMARK_MAIN();
