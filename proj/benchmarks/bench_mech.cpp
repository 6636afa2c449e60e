#include <benchmark/benchmark.h>

#include "cavlev/constants.hpp"
#include "cavlev/mech.hpp"

using namespace cavlev;

static void BuildModel(benchmark::State& state)
{
    const MechGeometry geometry = MechGeometry::tethered_silicon_disc();
    const int resolution = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(build_model(geometry, resolution));
}
BENCHMARK(BuildModel)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

static void UntrappedModes(benchmark::State& state)
{
    const MechModel model = build_model(MechGeometry::tethered_silicon_disc(), 10);
    const int n_modes = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(untrapped_modes(model, n_modes));
}
BENCHMARK(UntrappedModes)->Arg(40)->Arg(120)->Unit(benchmark::kMillisecond);

static void ModalSweep(benchmark::State& state)
{
    const MechModel model = build_model(MechGeometry::tethered_silicon_disc(), 10);
    const double sigma = 5e-6;
    std::vector<double> strengths;
    for (int i = 0; i < 40; ++i)
        strengths.push_back(strength_for_normalized(
            model, sigma, 2.0 * kPi * 3e4 * std::pow(1e3, i / 39.0)));
    MechSweepOptions opts;
    opts.n_basis = 120;
    for (auto _ : state)
        benchmark::DoNotOptimize(modal_sweep(model, sigma, strengths, opts));
}
BENCHMARK(ModalSweep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
