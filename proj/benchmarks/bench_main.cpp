#include <benchmark/benchmark.h>

#include <vector>

#include "volgram/distributions.hpp"
#include "volgram/fitting.hpp"
#include "volgram/kramers_moyal.hpp"
#include "volgram/langevin_sim.hpp"
#include "volgram/special_functions.hpp"

namespace {

void BM_IncompleteGamma(benchmark::State& state) {
  const double a = static_cast<double>(state.range(0)) / 10.0;
  double x = 0.0;
  for (auto _ : state) {
    x += 0.37;
    if (x > 3.0 * a + 5.0) x = 0.01;
    benchmark::DoNotOptimize(volgram::special::reg_inc_gamma_lower(a, x));
  }
}
BENCHMARK(BM_IncompleteGamma)->Arg(5)->Arg(9)->Arg(30)->Arg(200);

void BM_Erf(benchmark::State& state) {
  double x = -4.0;
  for (auto _ : state) {
    x = x > 4.0 ? -4.0 : x + 0.01;
    benchmark::DoNotOptimize(volgram::special::erf(x));
  }
}
BENCHMARK(BM_Erf);

void BM_FitWindow(benchmark::State& state) {
  const auto kind = static_cast<volgram::ModelKind>(state.range(0));
  const auto s = volgram::sample({volgram::ModelKind::InverseGamma, 0.93, 1.0}, 2000, 1);
  const auto ecdf = volgram::empirical_cdf(s);
  const auto guess = volgram::initial_guess(kind, s);
  for (auto _ : state) benchmark::DoNotOptimize(volgram::fit_cdf(kind, ecdf, guess));
  state.SetLabel(std::string(volgram::to_string(kind)));
}
BENCHMARK(BM_FitWindow)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_KramersMoyal(benchmark::State& state) {
  volgram::LangevinSpec spec;
  spec.drift = volgram::AffineDrift{0.05, 0.93};
  spec.diffusion = 1e-6;
  spec.n_steps = static_cast<std::size_t>(state.range(0));
  spec.initial = 0.93;
  spec.seed = 3;
  const auto series = volgram::simulate_langevin(spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(volgram::km_estimate(volgram::conditional_moments(series)));
  }
}
BENCHMARK(BM_KramersMoyal)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_MarkovTest(benchmark::State& state) {
  volgram::LangevinSpec spec;
  spec.drift = volgram::AffineDrift{0.05, 0.93};
  spec.diffusion = 1e-6;
  spec.n_steps = 100'000;
  spec.initial = 0.93;
  const auto series = volgram::simulate_langevin(spec);
  for (auto _ : state) benchmark::DoNotOptimize(volgram::markov_test(series));
}
BENCHMARK(BM_MarkovTest)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
