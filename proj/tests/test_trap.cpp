#include <doctest.h>

#include <cmath>
#include <vector>

#include "cavlev/constants.hpp"
#include "cavlev/errors.hpp"
#include "cavlev/trap.hpp"

using namespace cavlev;

namespace {

struct Setup {
    CavityGeometry geometry;
    BeamParams beam;
    ModeIndex tem00, tem10;
    ModeManifold pair;
};

Setup quartic_setup() // L = 4.7 cm cavity of the double-well study
{
    Setup s;
    s.geometry = CavityGeometry::symmetric(4.7e-2, 2.5e-2, 1.55e-6);
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

} // namespace

TEST_CASE("single-mode springs and the sigma^2/4 ratio")
{
    const Setup s = quartic_setup();
    const double power = 1e-3;
    const SingleModeSprings springs = single_mode_springs(power, s.geometry, s.beam, sin_disc());
    CHECK(springs.k_cm1 > 0.0);
    CHECK(springs.k_tm1 / springs.k_cm1 ==
          doctest::Approx(s.beam.sigma * s.beam.sigma / 4.0).epsilon(1e-14));

    // With I = m r^2 / 4 the trap frequency ratio is sigma / r.
    const OscillatorParams osc = OscillatorParams::disc(2330.0, 5e-6, 110e-9, 2.0 * kPi, 1e5);
    const double omega_cm = std::sqrt(springs.k_cm1 / osc.mass);
    const double omega_tm = std::sqrt(springs.k_tm1 / osc.inertia);
    CHECK(omega_tm / omega_cm == doctest::Approx(s.beam.sigma / 5e-6).epsilon(1e-12));

    const SingleModeSprings off = single_mode_springs(0.0, s.geometry, s.beam, sin_disc());
    CHECK(off.k_cm1 == 0.0);
    CHECK(off.k_tm1 == 0.0);
}

TEST_CASE("two-mode enhancement factors")
{
    const CavityGeometry cavity = CavityGeometry::symmetric(4.9e-2, 2.5e-2, 1.55e-6);
    const double gamma = 2.0 * kPi * 1e6;
    const EnhancementRatios r = enhancement_ratios(cavity, sin_disc(), gamma);
    CHECK(r.cm2 / 200.0 > 0.5); // "factor of order ~200", within x2
    CHECK(r.cm2 / 200.0 < 2.0);
    CHECK(r.cm2 / r.tm2 == doctest::Approx(kEuler).epsilon(1e-14));

    const CavityGeometry short_cavity = CavityGeometry::symmetric(1e-3, 2.5e-2, 1.55e-6);
    const EnhancementRatios r_short = enhancement_ratios(short_cavity, sin_disc(), gamma);
    CHECK(r_short.cm2 / 15000.0 > 0.5); // "of order ~15,000", within x2
    CHECK(r_short.cm2 / 15000.0 < 2.0);

    // Exact 1/L scaling between the two cavities.
    CHECK(r.cm2 * 4.9e-2 == doctest::Approx(r_short.cm2 * 1e-3).epsilon(1e-12));

    CHECK_THROWS_AS(enhancement_ratios(cavity, sin_disc(), 0.0), DomainError);
}

TEST_CASE("ultimate traps for the fiber-cavity example")
{
    const double power = 30e-3;
    const double lambda = 1.55e-6;
    const double length = 100e-6;
    const double gamma = 2.0 * kPi * 500e6;
    const UltimateTraps u = ultimate_traps(power, lambda, length, gamma, 1500.0);
    // Direct arithmetic oracle: 16 pi P / (lambda L Gamma).
    CHECK(u.k_gamma ==
          doctest::Approx(16.0 * kPi * power / (lambda * length * gamma)).epsilon(1e-14));
    CHECK(u.k_gamma == doctest::Approx(3.1).epsilon(0.02));
    CHECK(u.g_max == doctest::Approx(4.0 * kPi * kSpeedOfLight / (lambda * length)).epsilon(1e-14));

    // Trapped frequency of a 110-nm, r = 5 um Si disc: MHz-scale in Hz,
    // ~1e7 in rad/s.
    const OscillatorParams disc = OscillatorParams::disc(2330.0, 5e-6, 110e-9, 1.0, 1e5);
    const double omega = std::sqrt(u.k_gamma / disc.mass);
    CHECK(omega / (2.0 * kPi) > 1e6);
    CHECK(omega / (2.0 * kPi) < 1e7);
    CHECK(omega > 1e7);
    CHECK(omega < 1e8);

    // Finesse-limited bound reproduces the gap-limited one when
    // F = omega_FSR / (2 Gamma).
    const double fsr = kPi * kSpeedOfLight / length;
    const UltimateTraps u2 = ultimate_traps(power, lambda, length, gamma, fsr / (2.0 * gamma));
    CHECK(u2.k_finesse == doctest::Approx(u2.k_gamma).epsilon(1e-12));

    const UltimateTraps off = ultimate_traps(0.0, lambda, length, gamma, 1500.0);
    CHECK(off.k_gamma == 0.0);
    CHECK(off.k_finesse == 0.0);
}

TEST_CASE("per-photon bounds")
{
    const double g_minus = 1e16;
    const double omega_m = 2.0 * kPi * 1e6;
    const double omega_0 = 1.216e15;
    const double fsr = kPi * kSpeedOfLight / 4.9e-2;
    const double finesse = 5e4;
    const double q_gamma = finesse * omega_0 / fsr;

    const PerPhotonBounds b = per_photon_bounds(g_minus, omega_m, omega_0, q_gamma);
    CHECK(b.adiabatic == doctest::Approx(kHbar * g_minus * g_minus / omega_m).epsilon(1e-14));
    // 2 hbar G-^2 Q / omega0 == 2 hbar G-^2 F / omega_FSR.
    CHECK(b.finesse ==
          doctest::Approx(2.0 * kHbar * g_minus * g_minus * finesse / fsr).epsilon(1e-12));

    // omega_m -> infinity kills the adiabatic bound; G- doubling quadruples both.
    CHECK(per_photon_bounds(g_minus, 1e30, omega_0, q_gamma).adiabatic < 1e-30);
    const PerPhotonBounds b2 = per_photon_bounds(2.0 * g_minus, omega_m, omega_0, q_gamma);
    CHECK(b2.adiabatic == doctest::Approx(4.0 * b.adiabatic).epsilon(1e-14));
    CHECK(b2.finesse == doctest::Approx(4.0 * b.finesse).epsilon(1e-14));
}

TEST_CASE("anti-damping of a delayed spring")
{
    const double omega_m = 2.0 * kPi * 1e6;
    const double delay = 2.0 * 3e-2 / kSpeedOfLight; // 3-cm round trip
    const double rate = anti_damping_rate(omega_m, delay);
    CHECK(rate == doctest::Approx(3.9e3).epsilon(0.05));
    CHECK(rate > 1e3);
    CHECK(anti_damping_rate(omega_m, 0.0) == 0.0);
    CHECK(anti_damping_rate(2.0 * omega_m, delay) == doctest::Approx(4.0 * rate).epsilon(1e-14));
}

TEST_CASE("trapped oscillator frequency and quality factor")
{
    OscillatorParams osc;
    osc.mass = 2e-14;
    osc.inertia = 1.25e-25;
    osc.omega_mat = 2.0 * kPi * 25e3;
    osc.q_mat = 1e5;

    const TrappedOscillator identity = trapped_oscillator(osc, 0.0);
    CHECK(identity.omega_m == doctest::Approx(osc.omega_mat).epsilon(1e-14));
    CHECK(identity.q_m == doctest::Approx(osc.q_mat).epsilon(1e-14));

    const TrappedOscillator doubled = trapped_oscillator(osc, osc.k_mat());
    CHECK(doubled.omega_m == doctest::Approx(std::sqrt(2.0) * osc.omega_mat).epsilon(1e-14));
    CHECK(doubled.q_m == doctest::Approx(2.0 * osc.q_mat).epsilon(1e-14));

    // Q_m / Q_mat = (omega_m / omega_mat)^2 across a sweep.
    for (double k_opt : {0.0, 1e-5, 1e-3, 1e-1}) {
        const TrappedOscillator t = trapped_oscillator(osc, k_opt);
        CHECK(t.q_m / osc.q_mat ==
              doctest::Approx(std::pow(t.omega_m / osc.omega_mat, 2)).epsilon(1e-12));
    }
}

TEST_CASE("monotonicity of the bounds")
{
    const double power = 30e-3, lambda = 1.55e-6;
    double previous = 1e300;
    for (double gamma : {1e8, 3e8, 1e9, 3e9}) {
        const double k = ultimate_traps(power, lambda, 1e-4, gamma, 100.0).k_gamma;
        CHECK(k < previous);
        previous = k;
    }
    previous = 1e300;
    for (double length : {1e-4, 1e-3, 1e-2}) {
        const double k = ultimate_traps(power, lambda, length, 1e9, 100.0).k_gamma;
        CHECK(k < previous);
        previous = k;
    }
    const CavityGeometry cavity = CavityGeometry::symmetric(4.9e-2, 2.5e-2, 1.55e-6);
    previous = 1e300;
    for (double gamma : {1e6, 3e6, 1e7}) {
        const double r = enhancement_ratios(cavity, sin_disc(), gamma).cm2;
        CHECK(r < previous);
        previous = r;
    }
}

TEST_CASE("quartic scan classifies the double-well to quadratic transition")
{
    const Setup s = quartic_setup();
    const DiscParams disc = sin_disc();
    QuarticScanOptions opts;
    opts.points = 31;

    const QuarticScanResult result = quartic_scan(
        s.geometry, s.beam, disc, s.pair, {2e-3, 6e-3}, ScanCoordinate::x0, opts);
    REQUIRE(result.classifications.size() == 2);
    CHECK(result.classifications[0].shape == PotentialShape::double_well);
    CHECK(result.classifications[1].shape == PotentialShape::quadratic);
    REQUIRE(result.quartic_point.has_value());
    CHECK(*result.quartic_point > 2e-3);
    CHECK(*result.quartic_point < 6e-3);

    // Quadratic coefficient against a finite-difference second derivative of
    // the upper branch at the clearly quadratic tilt.
    {
        const DiscParams tilted = disc.with_theta_z(6e-3);
        const auto upper = [&](double x0) {
            const ManifoldSolution sol =
                solve_manifold(s.geometry, s.beam, tilted.with_x0(x0), s.pair, {}, false);
            return sol.omegas(1);
        };
        const double h = 2e-9;
        const double fd = (upper(h) - 2.0 * upper(0.0) + upper(-h)) / (h * h);
        CHECK(result.classifications[1].c2 == doctest::Approx(0.5 * fd).epsilon(0.02));
    }

    // Even symmetry: the upper branch has no measurable slope at the center.
    {
        const DiscParams tilted = disc.with_theta_z(6e-3);
        const auto upper = [&](double x0) {
            const ManifoldSolution sol =
                solve_manifold(s.geometry, s.beam, tilted.with_x0(x0), s.pair, {}, false);
            return sol.omegas(1);
        };
        const double h = 5e-9;
        const double slope = (upper(h) - upper(-h)) / (2.0 * h);
        CHECK(std::abs(slope * h) < 1e-3 * std::abs(result.classifications[1].c2 * h * h));
    }

    // A window with no sign change reports no quartic point.
    const QuarticScanResult none = quartic_scan(
        s.geometry, s.beam, disc, s.pair, {5e-3, 6e-3}, ScanCoordinate::x0, opts);
    CHECK(!none.quartic_point.has_value());

    // The tilt axis shows the same double-well to quadratic transition.
    const QuarticScanResult tilt = quartic_scan(
        s.geometry, s.beam, disc, s.pair, {2e-3, 6e-3}, ScanCoordinate::theta_y, opts);
    CHECK(tilt.classifications[0].shape == PotentialShape::double_well);
    CHECK(tilt.classifications[1].shape == PotentialShape::quadratic);
    REQUIRE(tilt.quartic_point.has_value());
    CHECK(*tilt.quartic_point > 2e-3);
    CHECK(*tilt.quartic_point < 6e-3);
}

TEST_CASE("trap report plumbing")
{
    const CavityGeometry cavity =
        CavityGeometry::symmetric(100e-6, 2.5e-4, 1.55e-6, 1500.0);
    const ModeIndex ref{eta_near_reference(cavity, 0, 0), 0, 0};
    const BeamParams beam = BeamParams::at_waist(cavity, ref);
    DiscParams disc;
    disc.n_index = 3.48;
    disc.thickness = 110e-9;
    disc.radius = 5e-6;
    const OscillatorParams osc = OscillatorParams::disc(2330.0, 5e-6, 110e-9, 2.0 * kPi * 10.0, 1e5);

    const TrapReport report =
        make_trap_report(30e-3, cavity, beam, disc, osc, 2.0 * kPi * 500e6);
    CHECK(report.k_ultimate_gamma == doctest::Approx(3.1).epsilon(0.02));
    CHECK(report.omega_ultimate > 1e7);
    CHECK(report.omega_ultimate < 1e8);

    const TrapReport zero = make_trap_report(0.0, cavity, beam, disc, osc, 2.0 * kPi * 500e6);
    CHECK(zero.k_cm1 == 0.0);
    CHECK(zero.k_ultimate_gamma == 0.0);
}
