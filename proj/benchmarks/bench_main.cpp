#include <benchmark/benchmark.h>

#include <cmath>

#include "builders.hpp"
#include "carpetdim/approx.hpp"
#include "carpetdim/boxcount.hpp"
#include "carpetdim/moran.hpp"
#include "carpetdim/overlap.hpp"
#include "carpetdim/variational.hpp"

using namespace carpetdim;

static void BM_MoranExponents(benchmark::State& state) {
  const BaranskiSystem sys = testkit::bm_three_cell();
  for (auto _ : state) benchmark::DoNotOptimize(box_dimension_analytic(sys));
}
BENCHMARK(BM_MoranExponents);

static void BM_MaximizeG(benchmark::State& state) {
  const BaranskiSystem sys = testkit::bm_three_cell();
  for (auto _ : state) benchmark::DoNotOptimize(maximize_g(sys).value);
}
BENCHMARK(BM_MaximizeG)->Unit(benchmark::kMillisecond);

static void BM_GammaSequence(benchmark::State& state) {
  ExactIfs1D ifs;
  for (const char* t : {"0", "1/3", "2/3"}) {
    ifs.ratios.push_back(Rational::parse("1/3"));
    ifs.offsets.push_back(Rational::parse(t));
  }
  const GammaOptions opts{.k_max = static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(gamma_sequence(ifs, opts));
}
BENCHMARK(BM_GammaSequence)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_SkBox(benchmark::State& state) {
  const BaranskiSystem sys = testkit::bm_three_cell();
  for (auto _ : state) benchmark::DoNotOptimize(s_k_box(sys, state.range(0)));
}
BENCHMARK(BM_SkBox)->Arg(100)->Arg(100000);

static void BM_CountBoxes(benchmark::State& state) {
  const BaranskiSystem sys = testkit::sierpinski_carpet();
  const double delta = std::pow(3.0, -static_cast<double>(state.range(0)));
  ExpandOptions opts;
  opts.threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(count_boxes_at_scale(sys, delta, opts));
}
BENCHMARK(BM_CountBoxes)->Args({6, 1})->Args({7, 1})->Args({7, 4})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
