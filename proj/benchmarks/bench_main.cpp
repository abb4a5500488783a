// Microbenchmarks for the hot paths: counter-based sketch entry generation,
// turnstile ingestion, sketched matrix products, and the small solvers.

#include "sketchfactor/hardinstance.hpp"
#include "sketchfactor/rng.hpp"
#include "sketchfactor/sketch.hpp"
#include "sketchfactor/solvers.hpp"
#include "sketchfactor/stream.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace sketchfactor;

void BM_SketchColumn(benchmark::State& state) {
  const SketchSpec spec = sign_sketch(static_cast<int>(state.range(0)), 1 << 16, 42);
  int col = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sketch_column(spec, col));
    col = (col + 1) & 0xffff;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SketchColumn)->Arg(64)->Arg(256)->Arg(1024);

void BM_CountSketchColumn(benchmark::State& state) {
  const SketchSpec spec = count_sketch(static_cast<int>(state.range(0)), 1 << 16, 42);
  int col = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sketch_column(spec, col));
    col = (col + 1) & 0xffff;
  }
}
BENCHMARK(BM_CountSketchColumn)->Arg(256);

void BM_TurnstileIngest(benchmark::State& state) {
  const int n = 256;
  const int d = 64;
  SketchState sk = SketchState::for_kmeans(n, d, 4, 0.5, 7);
  Rng rng(3);
  std::vector<TurnstileUpdate> updates;
  for (int u = 0; u < 4096; ++u)
    updates.push_back({static_cast<int>(rng.below(n)), static_cast<int>(rng.below(d)),
                       rng.gaussian()});
  std::size_t at = 0;
  for (auto _ : state) {
    sk.ingest(updates[at]);
    at = (at + 1) & 4095;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TurnstileIngest);

void BM_ApplyLeft(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(11);
  Matrix a(n, 32);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 32; ++j) a(i, j) = rng.gaussian();
  const SketchSpec spec = count_sketch(64, n, 5);
  for (auto _ : state) benchmark::DoNotOptimize(apply_left(spec, a));
}
BENCHMARK(BM_ApplyLeft)->Arg(256)->Arg(1024);

void BM_Lloyd(benchmark::State& state) {
  HardInstanceSpec spec;
  spec.n = static_cast<int>(state.range(0));
  spec.d = 16;
  spec.alpha = 1.0;
  spec.seed = 9;
  const HardInstance inst = generate_hard_instance(spec);
  for (auto _ : state)
    benchmark::DoNotOptimize(lloyd(inst.rows, 4, 17, {.restarts = 2}));
}
BENCHMARK(BM_Lloyd)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_PatternSolver(benchmark::State& state) {
  Rng rng(21);
  const int m = 8;
  const int d = 6;
  const int k = 3;
  Matrix rows(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) rows(i, j) = rng.gaussian();
  SparsityPattern pattern;
  for (int i = 0; i < m; ++i)
    pattern.supports.push_back({static_cast<int>(rng.below(k))});
  PatternSolverOptions opts;
  opts.starts = 4;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        pattern_solver(rows, Vector::Ones(m), pattern, k, opts));
  state.SetLabel("8x6, r=1");
}
BENCHMARK(BM_PatternSolver)->Unit(benchmark::kMicrosecond);

void BM_GuessSketchKmeans(benchmark::State& state) {
  const int n = 6;
  const int d = 12;
  const int k = 2;
  Rng rng(31);
  Matrix a(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = (i % k) * 4.0 + 0.05 * rng.gaussian();
  SketchState sk = SketchState::for_kmeans(n, d, k, 0.5, 13);
  for (int i = 0; i < n; ++i) sk.ingest_row(i, a.row(i).transpose());
  for (auto _ : state)
    benchmark::DoNotOptimize(guess_sketch_kmeans(sk, k, 0.5, 1 << 20));
  state.SetLabel("2^6 candidates");
}
BENCHMARK(BM_GuessSketchKmeans)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
