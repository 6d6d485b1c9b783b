#include "leafwise/presets.hpp"
#include "leafwise/triangulation.hpp"

#include <benchmark/benchmark.h>

using namespace leafwise;

namespace {

void BM_KuhnBuild(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto k = tri::kuhn_triangulation({4, l, Box::cube(4, -1, 1)});
    benchmark::DoNotOptimize(k.cell_count());
  }
  state.counters["cells"] = static_cast<double>(tri::kuhn_triangulation({4, l, Box::cube(4, -1, 1)}).cell_count());
}
BENCHMARK(BM_KuhnBuild)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

void BM_Jiggle(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const auto k = tri::kuhn_triangulation({4, l, Box::cube(4, -1, 1)});
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto j = tri::jiggle(k, 0.1 / l, seed++);
    benchmark::DoNotOptimize(j.jiggling.max_norm());
  }
}
BENCHMARK(BM_Jiggle)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

// Full-plan check of one jiggled complex for a constant plane.
void BM_GeneralPositionCheck(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const auto j = tri::jiggle(tri::kuhn_triangulation({4, l, Box::cube(4, -1, 1)}), 0.1 / l, 3);
  const auto tau = presets::coordinate_plane(4, 0, 1);
  const tri::SamplingPlan plan(4, 2);
  for (auto _ : state) {
    auto rep = tri::check_general_position(j.complex, tau, Box::cube(4, -0.5, 0.5), plan);
    benchmark::DoNotOptimize(rep.min_margin);
  }
}
BENCHMARK(BM_GeneralPositionCheck)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

// Search sweep over the refinement budget.
void BM_FindGeneralPosition(benchmark::State& state) {
  tri::SearchOptions opt;
  opt.budget = {1, static_cast<int>(state.range(0)), 50, tri::Schedule::Linear};
  const auto tau = presets::make_pair("rotating", 4, 0.05).tau;
  for (auto _ : state) {
    auto r = tri::find_general_position(tau, Box::cube(4, -0.5, 0.5), opt);
    benchmark::DoNotOptimize(r.best_margin);
  }
}
BENCHMARK(BM_FindGeneralPosition)->DenseRange(1, 2)->Unit(benchmark::kMillisecond);

}  // namespace
