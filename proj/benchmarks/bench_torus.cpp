#include "leafwise/torus_example.hpp"

#include <benchmark/benchmark.h>

using namespace leafwise;

namespace {

void BM_TorusVerify(benchmark::State& state) {
  const int grid = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = torus::verify_example(torus::SolidTorusModel{}, grid, 1000);
    benchmark::DoNotOptimize(r.margin_min);
  }
  state.counters["points"] = static_cast<double>(grid) * grid * grid;
}
BENCHMARK(BM_TorusVerify)->Arg(12)->Arg(24)->Arg(48)->Unit(benchmark::kMillisecond);

void BM_LeafwiseMargin(benchmark::State& state) {
  const torus::SolidTorusModel m;
  double r = 0.0;
  for (auto _ : state) {
    r = r > 1.0 ? 0.0 : r + 1e-3;
    benchmark::DoNotOptimize(torus::leafwise_margin(m, torus::to_cartesian(r, 0.7, 1.3)));
  }
}
BENCHMARK(BM_LeafwiseMargin);

}  // namespace
