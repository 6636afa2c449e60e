#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "cavlev/constants.hpp"
#include "cavlev/coupling.hpp"
#include "cavlev/errors.hpp"
#include "cavlev/mode_basis.hpp"
#include "cavlev/spectrum.hpp"
#include "cavlev/tm1d.hpp"
#include "cavlev/trap.hpp"

using namespace cavlev;

namespace {

SlabStack bare_cavity(double length)
{
    SlabStack stack;
    stack.length = length;
    stack.mirror_left.amplitude_t = 0.3;
    stack.mirror_right.amplitude_t = 0.3;
    return stack;
}

SlabStack cavity_with_slab(double length, double n, double t, double x0)
{
    SlabStack stack = bare_cavity(length);
    stack.slabs.push_back(Slab1D{n, t, x0});
    return stack;
}

std::vector<double> linspace(double lo, double hi, int n)
{
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return g;
}

double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

} // namespace

TEST_CASE("bare cavity: peaks spaced by exactly pi c / L, unit peak transmission")
{
    const SlabStack stack = bare_cavity(3.5e-2);
    const double omega_ref = 2.0 * kPi * kSpeedOfLight / 1.55e-6;
    const double fsr = stack.fsr();

    const double w0 = find_resonance_near(stack, omega_ref, 0.6 * fsr);
    const double w1 = find_resonance_near(stack, w0 + fsr, 0.3 * fsr);
    CHECK((w1 - w0) == doctest::Approx(fsr).epsilon(1e-9));
    CHECK(std::norm(stack_coefficients(stack, w0).t) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("lossless stacks: unitarity and reciprocity")
{
    const SlabStack stack = cavity_with_slab(3.5e-2, 3.48, 110e-9, 1.1e-7);
    const double omega_ref = 2.0 * kPi * kSpeedOfLight / 1.55e-6;
    for (double detuning : {-2.3e9, 0.0, 0.7e9, 1.9e10}) {
        const FieldCoefficients f = stack_coefficients(stack, omega_ref + detuning);
        CHECK(std::norm(f.t) + std::norm(f.r) == doctest::Approx(1.0).epsilon(1e-12));

        // Reversed stack (mirror image) transmits identically.
        SlabStack reversed = stack;
        reversed.slabs[0].position = -stack.slabs[0].position;
        const FieldCoefficients g = stack_coefficients(reversed, omega_ref + detuning);
        CHECK(std::abs(f.t) == doctest::Approx(std::abs(g.t)).epsilon(1e-12));

        // Unimodular total transfer matrix.
        CHECK(std::abs(transfer_total(stack, omega_ref + detuning).determinant()) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("110-nm silicon slab is a near-quarter-wave reflector at 1550 nm")
{
    // A slab between transparent mirrors leaves just the slab response.
    SlabStack stack = cavity_with_slab(3.5e-2, 3.48, 110e-9, 0.0);
    stack.mirror_left.amplitude_t = 1.0;
    stack.mirror_right.amplitude_t = 1.0;

    const double n = 3.48, t = 110e-9;
    const double r_max = (n * n - 1.0) / (n * n + 1.0);

    // Exactly quarter-wave: lambda = 4 n t.
    const double omega_qw = 2.0 * kPi * kSpeedOfLight / (4.0 * n * t);
    const FieldCoefficients f_qw = stack_coefficients(stack, omega_qw);
    CHECK(std::abs(f_qw.r) == doctest::Approx(r_max).epsilon(1e-9));

    const double omega_1550 = 2.0 * kPi * kSpeedOfLight / 1.55e-6;
    CHECK(std::abs(stack_coefficients(stack, omega_1550).r) > 0.84);
}

TEST_CASE("resonance shifts: symmetry at the waist and weak-slab perturbation theory")
{
    const double length = 4.9e-2;
    const double omega_ref = 2.0 * kPi * kSpeedOfLight / 1.55e-6;
    const double lambda = 2.0 * kPi * kSpeedOfLight / omega_ref;

    SUBCASE("slab centered in the cavity tunes symmetrically")
    {
        const SlabStack stack = cavity_with_slab(length, 2.0, 50e-9, 0.0);
        const double h = lambda / 64.0;
        const std::vector<double> w =
            resonance_shift(stack, 0, {-h, 0.0, h}, omega_ref, 0);
        CHECK(w[0] == doctest::Approx(w[2]).epsilon(1e-12));
    }

    SUBCASE("thin weak slab follows the diagonal first-order shift")
    {
        // 50-nm SiN: agreement within a few percent of the peak-to-peak swing.
        const SlabStack stack = cavity_with_slab(length, 2.0, 50e-9, 0.0);
        const std::vector<double> x0 = linspace(-lambda / 4.0, lambda / 4.0, 41);
        const std::vector<double> w = resonance_shift(stack, 0, x0, omega_ref, 0);

        const CavityGeometry geometry = CavityGeometry::symmetric(length, 2.5e-2, 1.55e-6);
        const std::int64_t eta0 = eta_near_reference(geometry, 0, 0);
        const ModeIndex tem00{eta0, 0, 0};
        const BeamParams beam = BeamParams::at_waist(geometry, tem00);
        DiscParams disc;
        disc.n_index = 2.0;
        disc.thickness = 50e-9;
        disc.radius = 1.0; // effectively infinite
        const double omega1 = unperturbed_frequency(geometry, tem00);

        std::vector<double> pt(x0.size());
        for (std::size_t i = 0; i < x0.size(); ++i) {
            const double v11 =
                vij_analytic(geometry, beam, disc.with_x0(x0[i]), tem00, tem00);
            pt[i] = omega1 * (1.0 - 0.5 * v11);
        }
        const double w_mean = mean(w), pt_mean = mean(pt);
        double pk = 0.0, err = 0.0;
        for (std::size_t i = 0; i < x0.size(); ++i) {
            pk = std::max(pk, std::abs(pt[i] - pt_mean));
            err = std::max(err, std::abs((w[i] - w_mean) - (pt[i] - pt_mean)));
        }
        CHECK(err < 0.05 * (2.0 * pk));
    }
}

TEST_CASE("transfer-matrix spring oracle against the single-mode spring constant")
{
    const double length = 4.9e-2;
    const double omega_ref = 2.0 * kPi * kSpeedOfLight / 1.55e-6;
    const double lambda = 2.0 * kPi * kSpeedOfLight / omega_ref;
    const double power = 1e-3;

    const CavityGeometry geometry = CavityGeometry::symmetric(length, 2.5e-2, 1.55e-6);
    const ModeIndex tem00{eta_near_reference(geometry, 0, 0), 0, 0};
    const BeamParams beam = BeamParams::at_waist(geometry, tem00);
    DiscParams disc;
    disc.n_index = 2.0;
    disc.thickness = 50e-9;
    disc.radius = 1.0;
    const double k_cm1 = single_mode_springs(power, geometry, beam, disc).k_cm1;

    // Stable trap points sit a quarter wavelength apart; pick the stable one.
    SpringEstimate estimate;
    bool found = false;
    for (double x0 : {0.0, lambda / 4.0}) {
        const SlabStack stack = cavity_with_slab(length, 2.0, 50e-9, x0);
        estimate = cm_spring_oracle(stack, 0, power, omega_ref);
        if (estimate.stable && estimate.k > 0.0) {
            found = true;
            break;
        }
    }
    REQUIRE(found);
    CHECK(estimate.k == doctest::Approx(k_cm1).epsilon(0.05));

    // Vacuum slab exerts no spring; doubling the power doubles the spring.
    SlabStack vacuum = cavity_with_slab(length, 1.0 + 1e-12, 50e-9, 0.0);
    CHECK(std::abs(cm_spring_oracle(vacuum, 0, power, omega_ref).k) < 1e-4 * k_cm1);
    const SlabStack stable = cavity_with_slab(length, 2.0, 50e-9, 0.0);
    const SpringEstimate base = cm_spring_oracle(stable, 0, power, omega_ref);
    const SpringEstimate doubled = cm_spring_oracle(stable, 0, 2.0 * power, omega_ref);
    CHECK(doubled.k == doctest::Approx(2.0 * base.k).epsilon(1e-12));
}

TEST_CASE("losing the tracked branch is an error carrying the last good point")
{
    // Quarter-wave silicon shifts resonances by more than half an FSR between
    // two distant slab positions.
    const double omega_ref = 2.0 * kPi * kSpeedOfLight / 1.55e-6;
    const double lambda = 2.0 * kPi * kSpeedOfLight / omega_ref;
    const SlabStack stack = cavity_with_slab(3.5e-2, 3.48, 110e-9, 0.0);
    CHECK_THROWS_AS(resonance_shift(stack, 0, {0.0, lambda / 4.0}, omega_ref, 0),
                    NumericalError);
}

TEST_CASE("stack validation")
{
    SlabStack stack = bare_cavity(3.5e-2);
    stack.slabs.push_back(Slab1D{2.0, 50e-9, 0.0});
    stack.slabs.push_back(Slab1D{2.0, 50e-9, -1e-6}); // out of order
    CHECK_THROWS_AS(stack.validate(), DomainError);

    SlabStack outside = bare_cavity(3.5e-2);
    outside.slabs.push_back(Slab1D{2.0, 50e-9, 2.0e-2});
    CHECK_THROWS_AS(outside.validate(), DomainError);

    SlabStack bad_mirror = bare_cavity(3.5e-2);
    bad_mirror.mirror_left.amplitude_t = 1.5;
    CHECK_THROWS_AS(bad_mirror.validate(), DomainError);
}
