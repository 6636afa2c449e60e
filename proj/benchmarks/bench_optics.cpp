#include <benchmark/benchmark.h>

#include "cavlev/constants.hpp"
#include "cavlev/coupling.hpp"
#include "cavlev/mode_basis.hpp"
#include "cavlev/spectrum.hpp"
#include "cavlev/tm1d.hpp"

using namespace cavlev;

namespace {

struct Setup {
    CavityGeometry geometry = CavityGeometry::symmetric(4.9e-2, 2.5e-2, 1.55e-6);
    std::int64_t eta0 = eta_near_reference(geometry, 0, 0);
    ModeIndex tem00{eta0, 0, 0};
    ModeIndex tem10{eta0 - 1, 1, 0};
    BeamParams beam = BeamParams::at_waist(geometry, tem00);
    DiscParams disc;

    Setup()
    {
        disc.n_index = 2.0;
        disc.thickness = 50e-9;
        disc.radius = 5e-4;
        disc.theta_z = 2e-4;
        disc.x0 = 0.13e-6;
    }
};

const Setup& setup()
{
    static Setup s;
    return s;
}

} // namespace

static void OverlapClosedForm(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    overlap_CS(n, n, 1.0); // warm the polynomial cache
    double theta = -3.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(overlap_CS(n, n, theta));
        theta += 1e-4;
    }
}
BENCHMARK(OverlapClosedForm)->Arg(1)->Arg(6)->Arg(12);

static void VijAnalytic(benchmark::State& state)
{
    const Setup& s = setup();
    for (auto _ : state)
        benchmark::DoNotOptimize(vij_analytic(s.geometry, s.beam, s.disc, s.tem00, s.tem10));
}
BENCHMARK(VijAnalytic);

static void VijExtendedPerMode(benchmark::State& state)
{
    const Setup& s = setup();
    const ModeIndex far{s.eta0 + 40, 0, 0};
    for (auto _ : state)
        benchmark::DoNotOptimize(
            vij_extended(s.geometry, s.beam, s.disc, s.tem00, far, DiffractionModel::per_mode));
}
BENCHMARK(VijExtendedPerMode);

static void VijQuadrature(benchmark::State& state)
{
    const Setup& s = setup();
    QuadratureOptions opts;
    opts.check_convergence = false;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            vij_quadrature(s.geometry, s.beam, s.disc, s.tem00, s.tem10, opts));
}
BENCHMARK(VijQuadrature)->Unit(benchmark::kMillisecond);

static void SolveManifold(benchmark::State& state)
{
    const Setup& s = setup();
    const int half_width = static_cast<int>(state.range(0));
    VijOptions vij;
    vij.path = VijPath::extended;
    vij.diffraction = DiffractionModel::per_mode;
    const ModeManifold manifold = make_manifold(
        s.geometry, {ManifoldFamily{0, 0, s.eta0}, ManifoldFamily{1, 0, s.eta0 - 1}},
        half_width);
    for (auto _ : state) {
        const ManifoldSolution sol = solve_manifold(s.geometry, s.beam, s.disc, manifold, vij);
        benchmark::DoNotOptimize(sol.omegas);
    }
    state.SetComplexityN(static_cast<std::int64_t>(manifold.size()));
}
BENCHMARK(SolveManifold)->Arg(0)->Arg(8)->Arg(32)->Arg(100)->Unit(benchmark::kMillisecond)->Complexity();

static void TransferMatrixSpectrum(benchmark::State& state)
{
    SlabStack stack;
    stack.length = 3.5e-2;
    stack.slabs.push_back(Slab1D{3.48, 110e-9, 1e-7});
    std::vector<double> grid(512);
    const double w_ref = 2.0 * kPi * kSpeedOfLight / 1.55e-6;
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = w_ref + (static_cast<double>(i) - 256.0) * 1e7;
    for (auto _ : state)
        benchmark::DoNotOptimize(transmission_spectrum(stack, grid));
}
BENCHMARK(TransferMatrixSpectrum)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
