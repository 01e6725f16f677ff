#include <benchmark/benchmark.h>

#include "design_fixture.h"
#include "example_systems.h"
#include "phlift/sim/simulate.h"
#include "phlift/sos/design.h"

namespace {

using namespace phlift;

void BM_LiftExponential(benchmark::State& state) {
  const auto sys = testing::exponential_example();
  for (auto _ : state) benchmark::DoNotOptimize(lift(sys));
}
BENCHMARK(BM_LiftExponential);

void BM_LiftRollingCoin(benchmark::State& state) {
  const auto sys = testing::rolling_coin();
  for (auto _ : state) benchmark::DoNotOptimize(lift(sys));
}
BENCHMARK(BM_LiftRollingCoin);

void BM_IntegrateRollingCoin(benchmark::State& state) {
  const auto L = lift(testing::rolling_coin());
  const auto model = make_model(L);
  const auto u = InputSignal::sinusoid({0.5, 0.5}, {2.0, 2.0});
  const auto x0 = L.immersion.evaluate(std::vector<double>(6, 0.0));
  for (auto _ : state) benchmark::DoNotOptimize(integrate(model, x0, u, 0.0, 10.0, 1e-3));
}
BENCHMARK(BM_IntegrateRollingCoin)->Unit(benchmark::kMillisecond);

void BM_PolynomialProduct(benchmark::State& state) {
  const std::vector<std::string> v{"a", "b", "c"};
  PolyD p = PolyD::constant(1.0, v);
  for (const auto& n : v) p += PolyD::variable(n, v);
  PolyD q = p;
  for (int k = 1; k < state.range(0); ++k) q = q * p;
  for (auto _ : state) benchmark::DoNotOptimize(q * q);
}
BENCHMARK(BM_PolynomialProduct)->Arg(2)->Arg(4)->Arg(6);

void BM_CompileDesignProgram(benchmark::State& state) {
  const auto spec = testing::design_example_spec(1.5, 4);
  const auto fam = matched_family(spec, default_template(spec));
  for (auto _ : state) {
    const auto dp = build_sos_program(spec, fam);
    benchmark::DoNotOptimize(compile_to_sdp(dp.program));
  }
}
BENCHMARK(BM_CompileDesignProgram)->Unit(benchmark::kMillisecond);

void BM_SolveDesignSdp(benchmark::State& state) {
  const auto spec = testing::design_example_spec(static_cast<double>(state.range(0)) / 10.0, 2);
  const auto fam = matched_family(spec, testing::fixed_term_template(spec, 2));
  const auto sdp = compile_to_sdp(build_sos_program(spec, fam).program).sdp;
  for (auto _ : state) benchmark::DoNotOptimize(solve_sdp(sdp));
}
BENCHMARK(BM_SolveDesignSdp)->Arg(15)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
