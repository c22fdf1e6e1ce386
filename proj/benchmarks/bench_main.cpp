#include <benchmark/benchmark.h>

#include "qrh/impliedvol.hpp"
#include "qrh/pricing.hpp"
#include "qrh/simulate.hpp"
#include "qrh/specialfn.hpp"

namespace {

qrh::SimConfig config(std::size_t paths, double horizon) {
  qrh::SimConfig c;
  c.n_paths = paths;
  c.horizon = horizon;
  c.steps_per_year = 500;
  return c;
}

void BM_Simulate(benchmark::State& state) {
  const qrh::ModelParams p = qrh::ModelParams::reference();
  const auto curve = qrh::ForwardCurve::parametric(p);
  const qrh::SimConfig c = config(1000, static_cast<double>(state.range(0)) / 500.0);
  for (auto _ : state) benchmark::DoNotOptimize(qrh::simulate(p, curve, c));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Simulate)->Arg(41)->Arg(125)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_NestedVix(benchmark::State& state) {
  const qrh::ModelParams p = qrh::ModelParams::reference();
  const double t = 30.0 / 365.0;
  const auto outer = qrh::simulate(p, qrh::ForwardCurve::parametric(p), config(100, t));
  qrh::SimConfig inner = config(static_cast<std::size_t>(state.range(0)), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(qrh::vix_samples(outer, t, inner));
  state.SetItemsProcessed(state.iterations() * 100 * state.range(0));
}
BENCHMARK(BM_NestedVix)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_ImpliedVol(benchmark::State& state) {
  const double price = qrh::black_price(1.0, 1.1, 0.1, 0.25, qrh::OptionKind::call);
  for (auto _ : state)
    benchmark::DoNotOptimize(qrh::implied_vol(price, 1.0, 1.1, 0.1, qrh::OptionKind::call));
}
BENCHMARK(BM_ImpliedVol);

void BM_MittagLeffler(benchmark::State& state) {
  double x = -0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(qrh::mittag_leffler(0.51, 1.0, x));
    x = x < -20.0 ? -0.1 : x * 1.1;
  }
}
BENCHMARK(BM_MittagLeffler);

}  // namespace
BENCHMARK_MAIN();
