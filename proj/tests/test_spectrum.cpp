#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cavlev/constants.hpp"
#include "cavlev/coupling.hpp"
#include "cavlev/errors.hpp"
#include "cavlev/mode_basis.hpp"
#include "cavlev/spectrum.hpp"

using namespace cavlev;

namespace {

struct Setup {
    CavityGeometry geometry;
    BeamParams beam;
    ModeIndex tem00, tem10;
    ModeManifold pair;
};

Setup crossing_setup()
{
    Setup s;
    s.geometry = CavityGeometry::symmetric(4.9e-2, 2.5e-2, 1.55e-6);
    const std::int64_t eta0 = eta_near_reference(s.geometry, 0, 0);
    s.tem00 = ModeIndex{eta0, 0, 0};
    s.tem10 = ModeIndex{eta0 - 1, 1, 0};
    s.beam = BeamParams::at_waist(s.geometry, s.tem00);
    s.pair = ModeManifold::build(s.geometry, {s.tem00, s.tem10});
    return s;
}

DiscParams sin_disc()
{
    DiscParams d;
    d.n_index = 2.0;
    d.thickness = 50e-9;
    d.radius = 5e-4;
    return d;
}

std::vector<double> linspace(double lo, double hi, int n)
{
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return g;
}

// Coordinate of the TEM00-TEM10 crossing on the x0 axis, from the two-mode
// diagonal condition.
double crossing_x0(const Setup& s, const DiscParams& disc)
{
    const DiscDerived d = DiscDerived::from(s.geometry, s.beam, disc);
    const double delta0 = unperturbed_frequency(s.geometry, s.tem00) -
                          unperturbed_frequency(s.geometry, s.tem10);
    const double omega = unperturbed_frequency(s.geometry, s.tem00);
    const double envelope = std::exp(-0.5 * s.beam.k * s.beam.k * s.beam.sigma * s.beam.sigma *
                                     (disc.theta_y * disc.theta_y + disc.theta_z * disc.theta_z));
    const double amp = 0.5 * omega * d.alpha * d.tau * envelope * (1.0 + d.beta);
    const double cos_cross = delta0 / amp;
    REQUIRE(std::abs(cos_cross) <= 1.0);
    return std::acos(cos_cross) / (2.0 * s.beam.k);
}

} // namespace

TEST_CASE("single-mode solve matches the first-order shift")
{
    const Setup s = crossing_setup();
    const ModeManifold single = ModeManifold::build(s.geometry, {s.tem00});
    const ManifoldSolution sol = solve_manifold(s.geometry, s.beam, sin_disc(), single, {});
    const double v11 = vij_analytic(s.geometry, s.beam, sin_disc(), s.tem00, s.tem00);
    const double omega1 = unperturbed_frequency(s.geometry, s.tem00);
    CHECK(sol.omegas(0) == doctest::Approx(omega1 * (1.0 - 0.5 * v11)).epsilon(1e-10));
}

TEST_CASE("decoupled degenerate pair stays doubly degenerate")
{
    const Setup s = crossing_setup();
    // TEM10 and TEM01 share the unperturbed frequency; an aligned disc gives
    // V11 = V22 and V12 = 0.
    const ModeIndex a{s.tem00.eta, 1, 0};
    const ModeIndex b{s.tem00.eta, 0, 1};
    const ModeManifold pair = ModeManifold::build(s.geometry, {a, b});
    const PerturbationMatrix v =
        build_perturbation_matrix(s.geometry, s.beam, sin_disc(), pair.modes, {});
    CHECK(v.v(0, 1) == 0.0);
    CHECK(v.v(0, 0) == doctest::Approx(v.v(1, 1)).epsilon(1e-14));
    const ManifoldSolution sol = solve_manifold(pair, v);
    CHECK(sol.omegas(0) == doctest::Approx(sol.omegas(1)).epsilon(1e-14));
}

TEST_CASE("general solver against the two-mode closed form")
{
    const Setup s = crossing_setup();
    DiscParams disc = sin_disc();
    disc.theta_z = 2e-4;
    const double x_cross = crossing_x0(s, disc);

    for (double x0 : linspace(x_cross - 5e-9, x_cross + 5e-9, 21)) {
        const DiscParams d = disc.with_x0(x0);
        const PerturbationMatrix v =
            build_perturbation_matrix(s.geometry, s.beam, d, s.pair.modes, {});
        const ManifoldSolution sol = solve_manifold(s.pair, v);
        const auto [lo, hi] = two_mode_closed_form(s.pair.omegas[0], s.pair.omegas[1],
                                                   v.v(0, 0), v.v(1, 1), v.v(0, 1));
        CHECK(sol.omegas(0) == doctest::Approx(lo).epsilon(1e-8));
        CHECK(sol.omegas(1) == doctest::Approx(hi).epsilon(1e-8));
    }
}

TEST_CASE("flat branches for a vacuum disc")
{
    const Setup s = crossing_setup();
    DiscParams vacuum = sin_disc();
    vacuum.n_index = 1.0;
    const SpectrumBranch scan = scan_branch(s.geometry, s.beam, vacuum, s.pair,
                                            ScanCoordinate::x0, linspace(0.0, 0.5e-6, 11), {});
    std::vector<double> expected = s.pair.omegas;
    std::sort(expected.begin(), expected.end());
    for (Eigen::Index b = 0; b < scan.branches(); ++b)
        for (Eigen::Index p = 0; p < scan.points(); ++p)
            CHECK(scan.omegas(b, p) ==
                  doctest::Approx(expected[static_cast<std::size_t>(b)]).epsilon(1e-13));
}

TEST_CASE("branch detunings oscillate with period lambda/2")
{
    const Setup s = crossing_setup();
    const DiscParams disc = sin_disc();
    const double lambda = 2.0 * kPi / s.beam.k;
    const ModeManifold single = ModeManifold::build(s.geometry, {s.tem00});
    const SpectrumBranch scan = scan_branch(s.geometry, s.beam, disc, single,
                                            ScanCoordinate::x0, linspace(0.0, lambda, 81), {});
    for (int p = 0; p + 40 < 81; p += 5)
        CHECK(scan.omegas(0, p) == doctest::Approx(scan.omegas(0, p + 40)).epsilon(1e-10));
    // It actually oscillates, with swing omega alpha tau.
    const double swing = scan.omegas.row(0).maxCoeff() - scan.omegas.row(0).minCoeff();
    const DiscDerived d = DiscDerived::from(s.geometry, s.beam, disc);
    CHECK(swing == doctest::Approx(s.pair.omegas[0] * d.alpha * d.tau).epsilon(1e-5));
}

TEST_CASE("branches cross exactly when the coupling is switched off")
{
    const Setup s = crossing_setup();
    const DiscParams disc = sin_disc(); // theta_z = 0: V12 = 0
    const double x_cross = crossing_x0(s, disc);
    const SpectrumBranch scan =
        scan_branch(s.geometry, s.beam, disc, s.pair, ScanCoordinate::x0,
                    linspace(x_cross - 20e-9, x_cross + 20e-9, 41), {});
    // Tracked branches keep their identity through the exact crossing: the
    // signed difference changes sign.
    const Eigen::VectorXd diff = scan.omegas.row(0) - scan.omegas.row(1);
    CHECK(diff(0) * diff(scan.points() - 1) < 0.0);

    // At the refined crossing the minimum gap sits below the numerical floor.
    const GapEvaluator eval = make_gap_evaluator(s.geometry, s.beam, disc, s.pair,
                                                 ScanCoordinate::x0, 0.0, 1e18, {});
    double lo = x_cross - 2e-9, hi = x_cross + 2e-9;
    for (int iter = 0; iter < 80; ++iter) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        const auto g1 = eval(m1), g2 = eval(m2);
        if (g1.second - g1.first < g2.second - g2.first)
            hi = m2;
        else
            lo = m1;
    }
    const auto gap_pair = eval(0.5 * (lo + hi));
    CHECK(gap_pair.second - gap_pair.first < 1e-10 * s.geometry.fsr());
}

TEST_CASE("eigenvector continuity away from the crossing")
{
    const Setup s = crossing_setup();
    DiscParams disc = sin_disc();
    disc.theta_z = 1e-4;
    const double x_cross = crossing_x0(s, disc);
    const SpectrumBranch scan =
        scan_branch(s.geometry, s.beam, disc, s.pair, ScanCoordinate::x0,
                    linspace(x_cross - 25e-9, x_cross + 25e-9, 51), {});
    double gap_min = 1e300;
    for (Eigen::Index p = 0; p < scan.points(); ++p)
        gap_min = std::min(gap_min, std::abs(scan.omegas(0, p) - scan.omegas(1, p)));
    for (Eigen::Index p = 0; p + 1 < scan.points(); ++p) {
        const double gap = std::abs(scan.omegas(0, p) - scan.omegas(1, p));
        if (gap > 5.0 * gap_min)
            CHECK(scan.min_adjacent_overlap[static_cast<std::size_t>(p)] > 0.9);
    }
}

TEST_CASE("crossing characterization on a synthetic symmetric crossing")
{
    const double omega0 = 1.2e15;
    const double gamma = 1.5e7;
    const double g_minus = 1.3e16;
    const GapEvaluator eval = [&](double xi) {
        const double root = std::sqrt(g_minus * g_minus * xi * xi + gamma * gamma);
        return std::make_pair(omega0 - root, omega0 + root);
    };
    SpectrumBranch branch;
    branch.coordinate = ScanCoordinate::x0;
    branch.grid = linspace(-2e-8, 2e-8, 17);
    branch.omegas.resize(2, 17);
    for (int p = 0; p < 17; ++p) {
        const auto [lo, hi] = eval(branch.grid[static_cast<std::size_t>(p)]);
        branch.omegas(0, p) = lo;
        branch.omegas(1, p) = hi;
    }
    const CrossingReport report = characterize_crossing(branch, 0, 1, eval);
    CHECK(report.gamma == doctest::Approx(gamma).epsilon(1e-6));
    CHECK(report.gap == doctest::Approx(2.0 * gamma).epsilon(1e-6));
    CHECK(report.g_minus == doctest::Approx(g_minus).epsilon(1e-6));
    CHECK(std::abs(report.g_plus) < 1e-8 * g_minus); // symmetric: G+ = 0
    CHECK(report.curvature == doctest::Approx(g_minus * g_minus / gamma).epsilon(1e-5));
    CHECK(std::abs(report.location) < 2e-12);
    CHECK(report.g1 == doctest::Approx(g_minus).epsilon(1e-6));
    CHECK(report.g2 == doctest::Approx(-g_minus).epsilon(1e-6));
}

TEST_CASE("fitted gap equals omega1 |V12| at the crossing")
{
    const Setup s = crossing_setup();
    DiscParams disc = sin_disc();
    disc.theta_z = 1e-4;
    const double x_cross = crossing_x0(s, disc);
    const std::vector<double> grid = linspace(x_cross - 25e-9, x_cross + 25e-9, 51);
    const SpectrumBranch scan =
        scan_branch(s.geometry, s.beam, disc, s.pair, ScanCoordinate::x0, grid, {});
    const GapEvaluator eval = make_gap_evaluator(s.geometry, s.beam, disc, s.pair,
                                                 ScanCoordinate::x0, 0.0, 1e18, {});
    const CrossingReport report = characterize_crossing(scan, eval);

    const double v12 = vij_analytic(s.geometry, s.beam, disc.with_x0(report.location), s.tem00,
                                    s.tem10);
    CHECK(report.gap == doctest::Approx(s.pair.omegas[0] * std::abs(v12)).epsilon(0.01));

    // Curvature consistency: central finite difference of the upper branch.
    const double h = 0.3 * report.gamma / report.g_minus;
    const auto upper = [&](double xi) { return eval(xi).second; };
    const double fd = (upper(report.location + h) - 2.0 * upper(report.location) +
                       upper(report.location - h)) /
                      (h * h);
    CHECK(report.curvature == doctest::Approx(fd).epsilon(0.02));
}

TEST_CASE("no interior gap minimum is reported as an error")
{
    const Setup s = crossing_setup();
    DiscParams disc = sin_disc();
    disc.theta_z = 1e-4;
    const double x_cross = crossing_x0(s, disc);
    const SpectrumBranch scan =
        scan_branch(s.geometry, s.beam, disc, s.pair, ScanCoordinate::x0,
                    linspace(x_cross + 40e-9, x_cross + 90e-9, 21), {});
    CHECK_THROWS_AS(characterize_crossing(scan, 0, 1), NumericalError);
}

TEST_CASE("weak-disc manifolds converge with very few longitudinal modes")
{
    const Setup s = crossing_setup();
    const DiscParams disc = sin_disc();
    const double lambda = 2.0 * kPi / s.beam.k;
    const std::vector<double> grid = linspace(0.0, 0.5 * lambda, 21);
    ScanOptions opts;
    opts.track = false;
    opts.vij.path = VijPath::extended;
    opts.vij.diffraction = DiffractionModel::per_mode;
    const double omega1 = s.pair.omegas[0];
    const ConvergenceResult conv = multimode_convergence(
        s.geometry, s.beam, disc, {ManifoldFamily{0, 0, s.tem00.eta}}, {2, 20, 100},
        ScanCoordinate::x0, grid, omega1 - 0.45 * s.geometry.fsr(),
        omega1 + 0.45 * s.geometry.fsr(), opts);
    REQUIRE(conv.max_shift.size() == 2);
    // The +-2 manifold already sits within a few permille of an FSR of the
    // +-100 result, and widening further saturates quickly.
    CHECK(conv.max_shift[0] + conv.max_shift[1] < 3e-3 * s.geometry.fsr());
    CHECK(conv.max_shift[1] < 5e-4 * s.geometry.fsr());
}

TEST_CASE("manifold construction guards")
{
    const Setup s = crossing_setup();
    CHECK_THROWS_AS(ModeManifold::build(s.geometry, {s.tem00, s.tem00}), DomainError);
    CHECK_THROWS_AS(ModeManifold::build(s.geometry, {}), DomainError);
    CHECK_THROWS_AS(make_manifold(s.geometry, {ManifoldFamily{0, 0, 2}}, 5), DomainError);
    const ModeManifold m = make_manifold(s.geometry,
                                         {ManifoldFamily{0, 0, s.tem00.eta},
                                          ManifoldFamily{1, 0, s.tem00.eta - 1}},
                                         2);
    CHECK(m.size() == 10);
}
