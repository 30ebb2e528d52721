#include <benchmark/benchmark.h>

#include "dynhaz/gof.hpp"
#include "dynhaz/local_fit.hpp"
#include "dynhaz/nelson_aalen.hpp"
#include "dynhaz/simulate.hpp"

namespace {

dynhaz::SurvivalSample make_sample(int n) {
  dynhaz::SimulationLaw law;
  law.true_hazard = [](double t) { return 0.8 + 0.4 * t; };
  law.censoring_hazard = [](double) { return 0.3; };
  law.horizon = 3.0;
  law.seed = 17;
  return dynhaz::simulate(law, n);
}

void BM_simulate(benchmark::State& state) {
  dynhaz::SimulationLaw law;
  law.true_hazard = [](double t) { return 0.8 + 0.4 * t; };
  law.horizon = 3.0;
  law.seed = 17;
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto s = dynhaz::simulate(law, n);
    benchmark::DoNotOptimize(s);
    law.seed++;
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_simulate)->Arg(1000)->Arg(10000);

void BM_nelson_aalen(benchmark::State& state) {
  const auto sample = make_sample(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto path = dynhaz::nelson_aalen(sample);
    benchmark::DoNotOptimize(path);
  }
}
BENCHMARK(BM_nelson_aalen)->Arg(1000)->Arg(10000);

void BM_local_constant(benchmark::State& state) {
  const auto sample = make_sample(static_cast<int>(state.range(0)));
  const auto kernel = dynhaz::Kernel::epanechnikov();
  double s = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dynhaz::local_constant(sample, kernel, s, 0.6));
    s = s < 2.4 ? s + 0.01 : 0.5;
  }
}
BENCHMARK(BM_local_constant)->Arg(1000)->Arg(10000);

void BM_local_fit_gompertz(benchmark::State& state) {
  const auto sample = make_sample(static_cast<int>(state.range(0)));
  const auto kernel = dynhaz::Kernel::epanechnikov();
  double s = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dynhaz::fit_local_at(sample, "gompertz", kernel, s, 0.8, 5));
    s = s < 2.2 ? s + 0.01 : 0.5;
  }
}
BENCHMARK(BM_local_fit_gompertz)->Arg(1000)->Arg(10000);

void BM_gof_path(benchmark::State& state) {
  const auto sample = make_sample(static_cast<int>(state.range(0)));
  const auto fam = dynhaz::make_local_family("gompertz", 1.5);
  for (auto _ : state) {
    auto path = dynhaz::dn_path(sample, *fam, 0.4, 2.6);
    benchmark::DoNotOptimize(path);
  }
}
BENCHMARK(BM_gof_path)->Arg(1000)->Arg(10000);

void BM_expand_window(benchmark::State& state) {
  const auto sample = make_sample(2000);
  for (auto _ : state) {
    const auto grid = dynhaz::default_h_grid(sample, 1.5, 10);
    benchmark::DoNotOptimize(dynhaz::expand_window(
        sample, "constant", 1.5, dynhaz::GofKind::ks_const, 0.10, 10, grid));
  }
}
BENCHMARK(BM_expand_window);

void BM_estimate_curve(benchmark::State& state) {
  const auto sample = make_sample(5000);
  dynhaz::LocalFitSpec spec;
  spec.family = "gompertz";
  spec.kernel = dynhaz::Kernel::epanechnikov();
  spec.bandwidth = dynhaz::BandwidthPlan::fixed(0.6);
  for (double s = 0.4; s <= 2.6; s += 0.05) spec.grid.push_back(s);
  spec.threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto curve = dynhaz::estimate_curve(sample, spec);
    benchmark::DoNotOptimize(curve);
  }
}
BENCHMARK(BM_estimate_curve)->Arg(1)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
