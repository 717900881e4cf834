#include <benchmark/benchmark.h>

#include "fpm/protocol.hpp"
#include "fpm/synthetic.hpp"
#include "fpm/zncc.hpp"

using namespace fpm;

namespace {

const PatchSet& patches() {
  static const PatchSet p = [] {
    SyntheticDatasetConfig cfg;
    cfg.persons = 2;
    cfg.acquisitions = 2;
    return build_patch_set(generate_synthetic_dataset(cfg)).patches;
  }();
  return p;
}

void pair_score(benchmark::State& state, Method method) {
  const auto scorer = make_scorer(method);
  const auto& p = patches();
  for (auto _ : state) benchmark::DoNotOptimize(scorer->score(p[0].image, p[2].image));
}

void prepared_pair_score(benchmark::State& state, Method method) {
  const auto scorer = make_scorer(method);
  const auto& p = patches();
  const auto e = scorer->prepare(p[0].image, Role::Reference);
  const auto c = scorer->prepare(p[2].image, Role::Candidate);
  for (auto _ : state) benchmark::DoNotOptimize(scorer->score(*e, *c));
}

void surface_fft(benchmark::State& state) {
  const auto& p = patches();
  for (auto _ : state) benchmark::DoNotOptimize(correlation_surface(p[0].image, p[2].image, 0.25));
}

void surface_direct(benchmark::State& state) {
  const auto& p = patches();
  for (auto _ : state) benchmark::DoNotOptimize(correlation_surface_direct(p[0].image, p[2].image, 0.25));
}

}  // namespace

BENCHMARK_CAPTURE(pair_score, zncc, Method::Zncc)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(pair_score, harris_ssd, Method::HarrisSsd)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(pair_score, dog_hist, Method::DogHist)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(prepared_pair_score, zncc, Method::Zncc)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(prepared_pair_score, harris_ssd, Method::HarrisSsd)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(prepared_pair_score, dog_hist, Method::DogHist)->Unit(benchmark::kMillisecond);
BENCHMARK(surface_fft)->Unit(benchmark::kMillisecond);
BENCHMARK(surface_direct)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
