// Per-solver timings on pre-generated noiseless samples.

#include <vector>

#include <benchmark/benchmark.h>

#include "relpose/solvers.h"
#include "relpose/synthetic.h"

namespace {

using namespace relpose;

constexpr int kSamples = 256;

const std::vector<MinimalSample>& samples(SolverKind kind) {
  static std::vector<std::vector<MinimalSample>> cache(kAllSolvers.size());
  auto& s = cache[static_cast<int>(kind)];
  if (s.empty()) {
    for (int i = 0; i < kSamples; ++i) {
      SceneConfig cfg;
      cfg.rng_seed = 17;
      cfg.instance = i;
      s.push_back(sample_scene(kind, cfg).sample);
    }
  }
  return s;
}

void BM_Solve(benchmark::State& state) {
  const auto kind = static_cast<SolverKind>(state.range(0));
  const auto& in = samples(kind);
  state.SetLabel(std::string(solver_tag(kind)));
  std::size_t i = 0, candidates = 0;
  for (auto _ : state) {
    const SolverResult r = solve(kind, in[i++ % in.size()]);
    candidates += r.candidates.size();
    benchmark::DoNotOptimize(r);
  }
  state.counters["candidates"] =
      benchmark::Counter(static_cast<double>(candidates), benchmark::Counter::kAvgIterations);
}

void all_solvers(benchmark::internal::Benchmark* b) {
  for (SolverKind k : kAllSolvers) b->Arg(static_cast<int>(k));
}

BENCHMARK(BM_Solve)->Apply(all_solvers)->Unit(benchmark::kMicrosecond);

void BM_UprightQuartic(benchmark::State& state) {
  const auto& in = samples(SolverKind::P3V1);
  std::size_t i = 0;
  for (auto _ : state) {
    const MinimalSample& s = in[i++ % in.size()];
    benchmark::DoNotOptimize(solve_3_0_1(s.points, s.vps[0]));
  }
}
BENCHMARK(BM_UprightQuartic)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
