#include <benchmark/benchmark.h>

#include "bcpanel/analytics.hpp"
#include "bcpanel/gibbs.hpp"
#include "bcpanel/simulator.hpp"

using namespace bcpanel;

namespace {

PanelData scenario_data(const std::string& name) {
  const Scenario sc = make_scenario(name, 1);
  RandomSource rng(sc.seed);
  return simulate_panel(sc, rng);
}

void BM_GibbsStep(benchmark::State& state) {
  const std::string name = state.range(0) == 100 ? "moderate" : "large";
  const Scenario sc = make_scenario(name, 1);
  ChainConfig cc;
  cc.seed = 3;
  GibbsSampler sampler(scenario_data(name), sc.spec, PriorConfig{}, cc);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.step());
}
BENCHMARK(BM_GibbsStep)->Arg(100)->Arg(300)->Unit(benchmark::kMicrosecond);

void BM_ShortrunConditional(benchmark::State& state) {
  const Scenario sc = make_scenario("moderate", 1);
  const PanelArrays arrays = prepare_arrays(scenario_data("moderate"), sc.spec);
  std::vector<Matrix> betas;
  for (const auto& d : derive(sc.truth, sc.spec)) betas.push_back(d.beta);
  const auto sys = build_shortrun_system(arrays, sc.spec, betas);
  const Matrix prec = build_vtilde_precision(sc.spec, PriorConfig{}, betas, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(gls_conditional(sys, sc.truth.sigma, 0.3, 2.0, prec).mean);
}
BENCHMARK(BM_ShortrunConditional)->Unit(benchmark::kMicrosecond);

void BM_Ar1Precision(benchmark::State& state) {
  const auto t = static_cast<Eigen::Index>(state.range(0));
  RandomSource rng(5);
  const Matrix x = rng.normal_matrix(t, 12);
  const matrix_kit::Ar1Precision q(0.4, t);
  for (auto _ : state) benchmark::DoNotOptimize(q.apply(x));
}
BENCHMARK(BM_Ar1Precision)->Arg(100)->Arg(1000);

void BM_Fevd(benchmark::State& state) {
  const VecmParams truth = fixture_truth();
  const PanelSpec spec = fixture_spec(100);
  for (auto _ : state) benchmark::DoNotOptimize(fevd(truth, spec, static_cast<int>(state.range(0))).shares);
}
BENCHMARK(BM_Fevd)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
