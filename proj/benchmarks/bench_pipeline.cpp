#include <benchmark/benchmark.h>

#include "fnf/fastica.hpp"
#include "fnf/networks.hpp"
#include "fnf/similarity.hpp"
#include "fnf/synth.hpp"
#include "fnf/whitening.hpp"

namespace {

fnf::SynthPair pair_for(std::size_t dim) {
  fnf::SynthScenario s;
  s.dim_a = dim;
  return fnf::gen_pair(s);
}

void BM_FitPca(benchmark::State& state) {
  const auto pair = pair_for(static_cast<std::size_t>(state.range(0)));
  const auto group = fnf::concat_samples(pair.a.samples);
  for (auto _ : state) benchmark::DoNotOptimize(fnf::fit_pca(group, 16));
}
BENCHMARK(BM_FitPca)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_FastIca(benchmark::State& state) {
  const auto pair = pair_for(512);
  const auto group = fnf::concat_samples(pair.a.samples);
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto white = fnf::whiten(group, fnf::fit_pca(group, k));
  fnf::IcaConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(fnf::run_fastica(white.spatial, cfg));
}
BENCHMARK(BM_FastIca)->Arg(8)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FnfMatrix(benchmark::State& state) {
  const auto pair = pair_for(512);
  fnf::FitConfig cfg;
  cfg.k = static_cast<std::size_t>(state.range(0));
  const auto na = fnf::fit_networks(pair.a, cfg);
  const auto nb = fnf::fit_networks(pair.b, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(fnf::fnf_matrix(na, pair.a, nb, pair.b));
}
BENCHMARK(BM_FnfMatrix)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LinearCka(benchmark::State& state) {
  const auto pair = pair_for(512);
  for (auto _ : state) benchmark::DoNotOptimize(fnf::linear_cka(pair.a, pair.b));
}
BENCHMARK(BM_LinearCka)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
