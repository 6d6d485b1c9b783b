#include "leafwise/diffeo_group.hpp"

#include <benchmark/benchmark.h>

using namespace leafwise;
using namespace leafwise::diffeo;

namespace {

// One probe of [a, b] against the four-conjugate product.
void BM_TsuboiProbe(benchmark::State& state) {
  const auto s = random_tsuboi_scenario(static_cast<int>(state.range(0)), 1);
  const auto lhs = commutator(s.a, s.b);
  const auto rhs = conjugate_product(tsuboi_factors(s.a, s.b, s.h), s.h);
  const auto probes = probe_points(s.u, 256, 2);
  std::size_t i = 0;
  for (auto _ : state) {
    const Vec& x = probes[i++ % probes.size()];
    benchmark::DoNotOptimize((lhs(x) - rhs(x)).norm());
  }
}
BENCHMARK(BM_TsuboiProbe)->Arg(2)->Arg(3);

void BM_BumpFlow(benchmark::State& state) {
  const auto f = make_bump_flow(Vec::Zero(2), 1.0, Vec::Unit(2, 0), 0.5);
  const Vec x = Vec::Constant(2, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(f(x));
}
BENCHMARK(BM_BumpFlow);

void BM_VEpsNorm(benchmark::State& state) {
  const auto d = random_v_eps_element(0.01, {}, 3);
  VEpsOptions opt;
  opt.per_axis = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(v_eps_norm(d, opt));
}
BENCHMARK(BM_VEpsNorm)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_Compose72(benchmark::State& state) {
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(compose_72_check(0.005, seed++, 1).worst_norm);
}
BENCHMARK(BM_Compose72)->Unit(benchmark::kMillisecond);

}  // namespace
