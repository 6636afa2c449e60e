#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "cavlev/constants.hpp"
#include "cavlev/errors.hpp"
#include "cavlev/mech.hpp"

using namespace cavlev;

namespace {

// Beam-theory oracles for the tethered disc, evaluated from first principles.
struct BeamOracles {
    double piston_hz;  // disc on two guided-guided tether springs
    double torsion_hz; // disc inertia on two tether torsion springs
    double violin_hz;  // clamped-clamped fundamental of one tether
};

BeamOracles beam_oracles(const MechGeometry& g)
{
    const double ei = g.material.youngs_modulus * g.tether_width *
                      std::pow(g.thickness, 3) / 12.0;
    const double mu = g.material.density * g.tether_width * g.thickness;
    const double l = g.tether_length;
    const double m_disc = g.material.density * g.thickness * kPi * g.disc_radius * g.disc_radius;

    BeamOracles o;
    o.piston_hz = std::sqrt(2.0 * 12.0 * ei / (l * l * l) / m_disc) / (2.0 * kPi);

    const double b = std::min(g.thickness, g.tether_width);
    const double c = std::max(g.thickness, g.tether_width);
    const double j = c * b * b * b * (1.0 / 3.0 - 0.21 * (b / c) * (1.0 - std::pow(b / c, 4) / 12.0));
    const double shear = g.material.youngs_modulus / (2.0 * (1.0 + g.material.poisson));
    const double i_disc = 0.25 * m_disc * g.disc_radius * g.disc_radius;
    o.torsion_hz = std::sqrt(2.0 * shear * j / l / i_disc) / (2.0 * kPi);

    o.violin_hz = (22.373 / (2.0 * kPi)) * std::sqrt(ei / mu) / (l * l);
    return o;
}

std::vector<double> lowest_frequencies(const MechModel& model, int count)
{
    const ModalBasis basis = untrapped_modes(model, count);
    std::vector<double> hz;
    for (int i = 0; i < count; ++i)
        hz.push_back(std::sqrt(std::max(0.0, basis.lambda(i))) / (2.0 * kPi));
    return hz;
}

} // namespace

TEST_CASE("rigid motions carry no strain energy")
{
    const MechModel model = build_model(MechGeometry::tethered_silicon_disc(), 8, false);

    // w = const, w = y, w = z with matching slopes are exact null vectors;
    // compare Rayleigh quotients against a genuinely bent field.
    const auto rayleigh = [&](auto field, auto sy, auto sz) {
        Eigen::VectorXd q = Eigen::VectorXd::Zero(model.n_free);
        for (std::size_t node = 0; node < model.nodes.size(); ++node) {
            const double y = model.nodes[node][0];
            const double z = model.nodes[node][1];
            if (const int d = model.free_dof(static_cast<int>(node), 0); d >= 0)
                q(d) = field(y, z);
            if (const int d = model.free_dof(static_cast<int>(node), 1); d >= 0)
                q(d) = sy(y, z);
            if (const int d = model.free_dof(static_cast<int>(node), 2); d >= 0)
                q(d) = sz(y, z);
        }
        return q.dot(model.k_mat * q) / q.dot(model.m_diag.asDiagonal() * q);
    };
    const double piston = rayleigh([](double, double) { return 1.0; },
                                   [](double, double) { return 0.0; },
                                   [](double, double) { return 0.0; });
    const double tilt_y = rayleigh([](double y, double) { return y; },
                                   [](double, double) { return 1.0; },
                                   [](double, double) { return 0.0; });
    const double tilt_z = rayleigh([](double, double z) { return z; },
                                   [](double, double) { return 0.0; },
                                   [](double, double) { return 1.0; });
    const double bend = rayleigh([](double y, double) { return y * y; },
                                 [](double y, double) { return 2.0 * y; },
                                 [](double, double) { return 0.0; });
    CHECK(piston < 1e-8 * bend);
    CHECK(tilt_y < 1e-8 * bend);
    CHECK(tilt_z < 1e-8 * bend);

    // Free structure: exactly three near-zero modes in the out-of-plane DOF
    // space (piston and the two tilts).
    const std::vector<double> hz = lowest_frequencies(model, 6);
    CHECK(hz[0] < 1e3);
    CHECK(hz[1] < 1e3);
    CHECK(hz[2] < 1e3);
    CHECK(hz[3] > 1e4);
}

TEST_CASE("clamped circular plate fundamental against the textbook constant")
{
    // Clamp the outer disc ring by hand and solve only the interior: the
    // lowest frequency must approach 10.2158/(2 pi R^2) sqrt(D / rho t).
    const MechGeometry g = MechGeometry::tethered_silicon_disc();
    const MechModel model = build_model(g, 12, false);

    std::vector<int> keep;
    const double r_clamp = 0.999 * g.disc_radius;
    for (std::size_t node = 0; node < model.nodes.size(); ++node) {
        const double rho = std::hypot(model.nodes[node][0], model.nodes[node][1]);
        if (model.on_disc[node] && rho < r_clamp)
            for (int c = 0; c < 3; ++c)
                keep.push_back(model.free_dof(static_cast<int>(node), c));
    }
    Eigen::MatrixXd k_dense(keep.size(), keep.size());
    Eigen::MatrixXd m_dense = Eigen::MatrixXd::Zero(keep.size(), keep.size());
    const Eigen::MatrixXd k_full = Eigen::MatrixXd(model.k_mat);
    for (std::size_t a = 0; a < keep.size(); ++a) {
        for (std::size_t b = 0; b < keep.size(); ++b)
            k_dense(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                k_full(keep[a], keep[b]);
        m_dense(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) =
            model.m_diag(keep[a]);
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(k_dense, m_dense);
    const double f0 = std::sqrt(solver.eigenvalues()(0)) / (2.0 * kPi);

    const double d_rigidity = g.bending_rigidity();
    const double rho_t = g.material.density * g.thickness;
    const double f_ref = 10.2158 / (2.0 * kPi * g.disc_radius * g.disc_radius) *
                         std::sqrt(d_rigidity / rho_t);
    CHECK(f0 == doctest::Approx(f_ref).epsilon(0.02));
}

TEST_CASE("untrapped census and beam-theory oracles")
{
    const MechGeometry g = MechGeometry::tethered_silicon_disc();
    const MechModel model = build_model(g, 10);
    const ModalBasis basis = untrapped_modes(model, 24);
    const BeamOracles oracle = beam_oracles(g);

    // Lowest symmetric (center-of-mass-like) mode and lowest torsional mode.
    double f_s1 = 0.0, f_t1 = 0.0, f_s2 = 0.0;
    for (int i = 0; i < 24; ++i) {
        const double hz = std::sqrt(std::max(0.0, basis.lambda(i))) / (2.0 * kPi);
        if (basis.symmetry[static_cast<std::size_t>(i)] == SymmetryClass::symmetric) {
            if (f_s1 == 0.0)
                f_s1 = hz;
            else if (f_s2 == 0.0)
                f_s2 = hz;
        }
        if (f_t1 == 0.0 && basis.symmetry[static_cast<std::size_t>(i)] == SymmetryClass::torsional)
            f_t1 = hz;
    }
    REQUIRE(f_s1 > 0.0);
    REQUIRE(f_t1 > 0.0);
    REQUIRE(f_s2 > 0.0);

    CHECK(f_s1 == doctest::Approx(oracle.piston_hz).epsilon(0.10));
    CHECK(f_t1 == doctest::Approx(oracle.torsion_hz).epsilon(0.10));
    CHECK(f_s1 < f_t1); // the torsional mode starts higher
    CHECK(f_s2 == doctest::Approx(oracle.violin_hz).epsilon(0.15));
}

TEST_CASE("mesh refinement: lowest frequencies stable under doubling")
{
    const MechGeometry g = MechGeometry::tethered_silicon_disc();
    const std::vector<double> coarse = lowest_frequencies(build_model(g, 10), 5);
    const std::vector<double> fine = lowest_frequencies(build_model(g, 20), 5);
    for (int i = 0; i < 5; ++i)
        CHECK(std::abs(coarse[static_cast<std::size_t>(i)] - fine[static_cast<std::size_t>(i)]) <
              0.01 * fine[static_cast<std::size_t>(i)]);
}

TEST_CASE("optical stiffness limits")
{
    const MechGeometry g = MechGeometry::tethered_silicon_disc();
    const MechModel model = build_model(g, 10);

    SUBCASE("uniform limit recovers strength times area")
    {
        const double sigma = 1e3 * g.disc_radius;
        const double strength = 7.5;
        const Eigen::SparseMatrix<double> k_opt = optical_stiffness(model, sigma, strength);
        const Eigen::VectorXd piston = model.rigid_piston();
        const double tether_area = 2.0 * g.tether_length * g.tether_width;
        const double expected = strength * (model.mesh_disc_area + tether_area);
        CHECK(piston.dot(k_opt * piston) == doctest::Approx(expected).epsilon(1e-3));
    }

    SUBCASE("zero strength gives a zero matrix")
    {
        const Eigen::SparseMatrix<double> k_opt = optical_stiffness(model, 5e-6, 0.0);
        CHECK(k_opt.norm() == 0.0);
    }

    SUBCASE("rigid twist and piston respond within 10% at sigma = r")
    {
        // Normalized by the free-disc response: omega^2 ratios of the rigid
        // shapes; the closed-form value at sigma = r is 0.917.
        const Eigen::SparseMatrix<double> k_opt = optical_stiffness(model, g.disc_radius, 1.0);
        const Eigen::VectorXd piston = model.rigid_piston();
        const Eigen::VectorXd twist = model.rigid_twist();
        const auto m_norm = [&](const Eigen::VectorXd& q) {
            return q.dot(model.m_diag.asDiagonal() * q);
        };
        const double w2_piston = piston.dot(k_opt * piston) / m_norm(piston);
        const double w2_twist = twist.dot(k_opt * twist) / m_norm(twist);
        const double ratio = w2_twist / w2_piston;
        CHECK(ratio > 0.9);
        CHECK(ratio < 1.0);
        CHECK(ratio == doctest::Approx(0.9171).epsilon(0.02));
    }
}

TEST_CASE("normalization line is its own inverse")
{
    const MechModel model = build_model(MechGeometry::tethered_silicon_disc(), 8);
    const double sigma = 5e-6;
    for (double omega : {2.0 * kPi * 1e5, 2.0 * kPi * 2e6}) {
        const double strength = strength_for_normalized(model, sigma, omega);
        CHECK(normalize_trap_strength(model, sigma, strength) ==
              doctest::Approx(omega).epsilon(1e-12));
    }
    CHECK(normalize_trap_strength(model, sigma, 0.0) == 0.0);
}

TEST_CASE("modal sweep: energies, symmetry selection, tracking")
{
    const MechGeometry g = MechGeometry::tethered_silicon_disc();
    const MechModel model = build_model(g, 10);
    const double sigma = 5e-6;

    std::vector<double> strengths;
    for (double f = 50e3; f <= 1.0e6; f *= 1.2)
        strengths.push_back(strength_for_normalized(model, sigma, 2.0 * kPi * f));

    MechSweepOptions opts;
    opts.n_basis = 90;
    opts.n_track = 8;
    opts.store_shapes = true;
    const MechSweep sweep = modal_sweep(model, sigma, strengths, opts);
    const ModalBasis basis = untrapped_modes(model, opts.n_basis, opts.subspace);

    SUBCASE("energy identity for every tracked eigenpair")
    {
        const Eigen::SparseMatrix<double> k_opt_unit = optical_stiffness(model, sigma, 1.0);
        for (std::size_t is = 0; is < sweep.strengths.size(); is += 5) {
            for (std::size_t t = 0; t < sweep.reduced[is].size(); t += 3) {
                const Eigen::VectorXd q = lift(basis, sweep.reduced[is][t]);
                const double omega = sweep.modes[is][t].omega;
                const double kinetic = omega * omega * q.dot(model.m_diag.asDiagonal() * q);
                const double elastic = q.dot(model.k_mat * q) +
                                       sweep.strengths[is] * q.dot(k_opt_unit * q);
                CHECK(kinetic == doctest::Approx(elastic).epsilon(1e-8));
            }
        }
    }

    SUBCASE("mirror-symmetric trap never couples s to t")
    {
        const Eigen::SparseMatrix<double> k_opt_unit = optical_stiffness(model, sigma, 1.0);
        const Eigen::MatrixXd reduced = basis.phi.transpose() * (k_opt_unit * basis.phi);
        double cross = 0.0, diag = 0.0;
        for (int a = 0; a < opts.n_basis; ++a) {
            for (int b = 0; b < opts.n_basis; ++b) {
                const bool a_t = basis.symmetry[static_cast<std::size_t>(a)] == SymmetryClass::torsional;
                const bool b_s = basis.symmetry[static_cast<std::size_t>(b)] == SymmetryClass::symmetric;
                if (a_t && b_s)
                    cross = std::max(cross, std::abs(reduced(a, b)));
                if (a == b)
                    diag = std::max(diag, std::abs(reduced(a, b)));
            }
        }
        CHECK(cross < 1e-10 * diag);
    }

    SUBCASE("weak-trap enhancement scales as frequency squared")
    {
        // For the tracked s1 branch: 1 + U_opt/U_mat = (omega/omega_mat)^2
        // within 5% while the shape is unchanged. The baseline is the
        // untrapped symmetric fundamental.
        double omega_mat = 0.0;
        for (int i = 0; i < opts.n_basis; ++i)
            if (basis.symmetry[static_cast<std::size_t>(i)] == SymmetryClass::symmetric) {
                omega_mat = std::sqrt(basis.lambda(i));
                break;
            }
        REQUIRE(omega_mat > 0.0);
        // "Weak to moderate" ends well below the first symmetric tether mode
        // (478 kHz); beyond a quarter of it the hybridization tail bends the
        // curve.
        int checked = 0;
        for (std::size_t is = 0; is < sweep.strengths.size(); ++is) {
            const ModalResult& s1 = sweep.modes[is][0];
            if (s1.omega > 2.0 * kPi * 1.2e5)
                break;
            const double lhs = 1.0 + s1.u_opt_over_u_mat;
            const double rhs = std::pow(s1.omega / omega_mat, 2);
            CHECK(lhs == doctest::Approx(rhs).epsilon(0.05));
            ++checked;
        }
        CHECK(checked >= 5);
    }

    SUBCASE("tracking overlap stays high away from crossings")
    {
        int strong = 0;
        for (double overlap : sweep.min_tracking_overlap)
            if (overlap > 0.8)
                ++strong;
        CHECK(strong >= static_cast<int>(sweep.min_tracking_overlap.size()) - 3);
    }

    SUBCASE("census of tracked symmetries")
    {
        std::set<SymmetryClass> seen;
        for (const auto& mode : sweep.modes[0])
            seen.insert(mode.symmetry);
        CHECK(seen.count(SymmetryClass::symmetric) == 1);
        CHECK(seen.count(SymmetryClass::torsional) == 1);
        CHECK(seen.count(SymmetryClass::antisymmetric) == 1);
    }
}

TEST_CASE("first tether-torsion resonance sits in the tens of MHz")
{
    const MechModel model = build_model(MechGeometry::tethered_silicon_disc(), 12);
    const ModalBasis basis = untrapped_modes(model, 200);
    double f_torsion = 0.0;
    for (int i = 0; i < 200 && f_torsion == 0.0; ++i) {
        const Eigen::VectorXd q = basis.phi.col(i);
        double torsional = 0.0, total = 0.0;
        for (std::size_t n = 0; n < model.nodes.size(); ++n) {
            for (int c = 0; c < 3; ++c) {
                const int dof = model.free_dof(static_cast<int>(n), c);
                if (dof < 0)
                    continue;
                const double e = model.m_diag(dof) * q(dof) * q(dof);
                total += e;
                if (!model.on_disc[n] && c == 2)
                    torsional += e;
            }
        }
        if (torsional / total > 0.5)
            f_torsion = std::sqrt(std::max(0.0, basis.lambda(i))) / (2.0 * kPi);
    }
    REQUIRE(f_torsion > 0.0);
    CHECK(f_torsion > 28.5e6); // around 57 MHz, within a factor of two
    CHECK(f_torsion < 114e6);
}

TEST_CASE("geometry validation")
{
    MechGeometry bad = MechGeometry::tethered_silicon_disc();
    bad.tether_width = -1.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    CHECK_THROWS_AS(build_model(MechGeometry::tethered_silicon_disc(), 2), DomainError);
}
