#include <benchmark/benchmark.h>

#include "thouless/experiments.hpp"
#include "thouless/floquet.hpp"
#include "thouless/localization.hpp"
#include "thouless/lyapunov.hpp"
#include "thouless/resonance.hpp"

using namespace thouless;

namespace {

Exec path(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "parallel" : "serial"); }

void BM_Spectrum(benchmark::State& state) {
  const PotentialSeq V = sample_iid(DistributionSpec::default_iid(), static_cast<int>(state.range(1)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(compute_spectrum(V, {0, path(state)}));
  label(state);
}
BENCHMARK(BM_Spectrum)->ArgsProduct({{0, 1}, {50, 100}})->Unit(benchmark::kMillisecond);

void BM_Eigenvalues(benchmark::State& state) {
  const Spectrum s = compute_spectrum(sample_iid(DistributionSpec::default_iid(), 100, 2));
  for (auto _ : state) benchmark::DoNotOptimize(eigenvalues(s, FloquetPhase::from_units(0.5), path(state)));
  label(state);
}
BENCHMARK(BM_Eigenvalues)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LyapunovMonteCarlo(benchmark::State& state) {
  const auto grid = energy_window(1.5).grid(33);
  for (auto _ : state)
    benchmark::DoNotOptimize(lyapunov_iid_mc(DistributionSpec::default_iid(), grid, 2000, 20, 1, path(state)));
  label(state);
}
BENCHMARK(BM_LyapunovMonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_QnrCheck(benchmark::State& state) {
  const PotentialSeq V = sample_iid(DistributionSpec::default_iid(), 80, 3);
  const auto curve = constant_curve(0.3, -14.0, 14.0);
  const auto grid = energy_window(1.5).grid(101);
  for (auto _ : state) benchmark::DoNotOptimize(qnr_check(V, 0.05, 8, curve, grid, 128, path(state)));
  label(state);
}
BENCHMARK(BM_QnrCheck)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CenterDrifts(benchmark::State& state) {
  const Spectrum s = compute_spectrum(sample_iid(DistributionSpec::default_iid(), 60, 4));
  const auto kappas = kappa_grid(5);
  for (auto _ : state) benchmark::DoNotOptimize(center_drifts(s, kappas, path(state)));
  label(state);
}
BENCHMARK(BM_CenterDrifts)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
