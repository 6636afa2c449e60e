#include "cavlev/trap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cavlev/constants.hpp"
#include "cavlev/errors.hpp"

namespace cavlev {

void OscillatorParams::validate() const
{
    if (!(mass > 0.0) || !(inertia > 0.0))
        throw DomainError("OscillatorParams: mass and inertia must be > 0");
    if (!(omega_mat > 0.0) || !(q_mat > 0.0))
        throw DomainError("OscillatorParams: omega_mat and Q_mat must be > 0");
}

OscillatorParams OscillatorParams::disc(double density, double radius, double thickness,
                                        double omega_mat, double q_mat)
{
    if (!(density > 0.0) || !(radius > 0.0) || !(thickness > 0.0))
        throw DomainError("OscillatorParams::disc: density, radius, thickness must be > 0");
    OscillatorParams osc;
    osc.mass = density * kPi * radius * radius * thickness;
    osc.inertia = 0.25 * osc.mass * radius * radius;
    osc.omega_mat = omega_mat;
    osc.q_mat = q_mat;
    return osc;
}

SingleModeSprings single_mode_springs(double power, const CavityGeometry& geometry,
                                      const BeamParams& beam, const DiscParams& disc)
{
    if (power < 0.0)
        throw DomainError("single_mode_springs: power must be >= 0");
    const DiscDerived d = DiscDerived::from(geometry, beam, disc);
    const double k2 = beam.k * beam.k;
    SingleModeSprings springs;
    springs.k_cm1 = 4.0 * geometry.length * power * d.alpha * d.tau * k2 / kSpeedOfLight;
    springs.k_tm1 = springs.k_cm1 * beam.sigma * beam.sigma / 4.0;
    return springs;
}

EnhancementRatios enhancement_ratios(const CavityGeometry& geometry, const DiscParams& disc,
                                     double gamma)
{
    disc.validate();
    geometry.validate();
    if (!(gamma > 0.0))
        throw DomainError("enhancement_ratios: gap closed (Gamma <= 0), adiabatic model invalid");
    const double k = 2.0 * kPi / geometry.lambda_ref;
    const double t_theta =
        disc.thickness / (std::cos(disc.theta_y) * std::cos(disc.theta_z));
    const double kt = k * t_theta;
    const double tau = std::abs(kt) < 1e-4 ? 1.0 - kt * kt / 6.0 : std::sin(kt) / kt;
    EnhancementRatios r;
    r.cm2 = geometry.fsr() / gamma * (disc.n_index * disc.n_index - 1.0) * tau * t_theta /
            geometry.lambda_ref;
    r.tm2 = r.cm2 / kEuler;
    return r;
}

UltimateTraps ultimate_traps(double power, double lambda, double length, double gamma,
                             double finesse)
{
    if (power < 0.0 || !(lambda > 0.0) || !(length > 0.0) || !(gamma > 0.0) || finesse < 0.0)
        throw DomainError("ultimate_traps: non-positive input");
    UltimateTraps u;
    u.k_gamma = 16.0 * kPi * power / (lambda * length * gamma);
    u.k_finesse = 32.0 * power * finesse / (lambda * kSpeedOfLight);
    u.g_max = 4.0 * kPi * kSpeedOfLight / (lambda * length);
    return u;
}

PerPhotonBounds per_photon_bounds(double g_minus, double omega_m, double omega_0,
                                  double q_gamma)
{
    if (!(omega_m > 0.0) || !(omega_0 > 0.0) || !(q_gamma > 0.0))
        throw DomainError("per_photon_bounds: inputs must be > 0");
    PerPhotonBounds b;
    b.adiabatic = kHbar * g_minus * g_minus / omega_m;
    b.finesse = 2.0 * kHbar * g_minus * g_minus * q_gamma / omega_0;
    return b;
}

double photon_number(double power, double length, double omega_0)
{
    if (power < 0.0 || !(length > 0.0) || !(omega_0 > 0.0))
        throw DomainError("photon_number: bad input");
    return 2.0 * power * length / (kHbar * omega_0 * kSpeedOfLight);
}

double anti_damping_rate(double omega_m, double delay)
{
    if (delay < 0.0)
        throw DomainError("anti_damping_rate: delay must be >= 0");
    return 0.5 * omega_m * omega_m * delay;
}

TrappedOscillator trapped_oscillator(const OscillatorParams& osc, double k_opt)
{
    osc.validate();
    if (k_opt < 0.0)
        throw DomainError("trapped_oscillator: K_opt must be >= 0");
    TrappedOscillator t;
    t.omega_m = std::sqrt(osc.omega_mat * osc.omega_mat + k_opt / osc.mass);
    t.q_m = osc.q_mat * (osc.k_mat() + k_opt) / osc.k_mat();
    return t;
}

namespace {

// Least-squares fit of omega(xi) = c0 + c2 xi^2 + c4 xi^4 on a symmetric grid
// (odd powers excluded by the symmetry of the crossing).
std::array<double, 3> fit_even_quartic(const std::vector<double>& xi,
                                       const std::vector<double>& omega)
{
    Eigen::MatrixXd a(static_cast<Eigen::Index>(xi.size()), 3);
    Eigen::VectorXd b(static_cast<Eigen::Index>(xi.size()));
    for (std::size_t i = 0; i < xi.size(); ++i) {
        const double u = xi[i] * xi[i];
        a(static_cast<Eigen::Index>(i), 0) = 1.0;
        a(static_cast<Eigen::Index>(i), 1) = u;
        a(static_cast<Eigen::Index>(i), 2) = u * u;
        b(static_cast<Eigen::Index>(i)) = omega[i];
    }
    const Eigen::Vector3d c = (a.transpose() * a).ldlt().solve(a.transpose() * b);
    return {c(0), c(1), c(2)};
}

} // namespace

QuarticScanResult quartic_scan(const CavityGeometry& geometry, const BeamParams& beam,
                               const DiscParams& disc_template, const ModeManifold& manifold,
                               const std::vector<double>& theta_z_grid,
                               ScanCoordinate coordinate, const QuarticScanOptions& opts)
{
    if (theta_z_grid.size() < 2)
        throw DomainError("quartic_scan: need at least two theta_z values");
    if (coordinate == ScanCoordinate::theta_z)
        throw DomainError("quartic_scan: scan coordinate must be x0 or theta_y");

    const double lambda = 2.0 * kPi / beam.k;
    double window = opts.window > 0.0 ? opts.window : lambda / 60.0;
    if (coordinate == ScanCoordinate::theta_y) {
        // Tilt wells live on the scale 1/(k sigma) rather than lambda.
        window = opts.window > 0.0 ? opts.window : 0.5 / (beam.k * beam.sigma);
    }

    // c2/c4 of the upper branch at the symmetric point for one tilt.
    const auto coefficients = [&](double theta_z) {
        const DiscParams tilted = disc_template.with_theta_z(theta_z);
        std::vector<double> xi(static_cast<std::size_t>(opts.points));
        for (int i = 0; i < opts.points; ++i)
            xi[static_cast<std::size_t>(i)] = -window + 2.0 * window * i / (opts.points - 1);
        std::vector<double> upper(xi.size());
        for (std::size_t i = 0; i < xi.size(); ++i) {
            const DiscParams disc = disc_at(tilted, coordinate, xi[i]);
            const ManifoldSolution sol =
                solve_manifold(geometry, beam, disc, manifold, opts.vij, false);
            upper[i] = sol.omegas(sol.omegas.size() - 1);
        }
        return fit_even_quartic(xi, upper);
    };

    QuarticScanResult result;
    for (double theta_z : theta_z_grid) {
        const auto c = coefficients(theta_z);
        QuarticClassification cls;
        cls.theta_z = theta_z;
        cls.c2 = c[1];
        cls.c4 = c[2];
        const double zero_band = opts.c2_zero_factor * std::abs(c[2]) * window * window;
        if (std::abs(c[1]) <= zero_band)
            cls.shape = PotentialShape::quartic;
        else
            cls.shape = c[1] < 0.0 ? PotentialShape::double_well : PotentialShape::quadratic;
        result.classifications.push_back(cls);
    }

    // Root-find c2(theta_z) = 0 between the first sign change.
    for (std::size_t i = 0; i + 1 < result.classifications.size(); ++i) {
        double lo = result.classifications[i].theta_z;
        double hi = result.classifications[i + 1].theta_z;
        double c_lo = result.classifications[i].c2;
        double c_hi = result.classifications[i + 1].c2;
        if (c_lo == 0.0) {
            result.quartic_point = lo;
            break;
        }
        if (c_lo * c_hi < 0.0) {
            for (int iter = 0; iter < 60 && hi - lo > 1e-6 * (hi + lo); ++iter) {
                const double mid = 0.5 * (lo + hi);
                const double c_mid = coefficients(mid)[1];
                if (c_mid == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if (c_lo * c_mid < 0.0) {
                    hi = mid;
                    c_hi = c_mid;
                } else {
                    lo = mid;
                    c_lo = c_mid;
                }
            }
            result.quartic_point = 0.5 * (lo + hi);
            break;
        }
    }
    return result;
}

TrapReport make_trap_report(double power, const CavityGeometry& geometry,
                            const BeamParams& beam, const DiscParams& disc,
                            const OscillatorParams& osc_cm, double gamma)
{
    TrapReport r;
    r.power = power;
    r.gamma = gamma;
    const SingleModeSprings springs = single_mode_springs(power, geometry, beam, disc);
    r.k_cm1 = springs.k_cm1;
    r.k_tm1 = springs.k_tm1;
    if (gamma > 0.0) {
        const EnhancementRatios ratios = enhancement_ratios(geometry, disc, gamma);
        r.ratio_cm2 = ratios.cm2;
        r.ratio_tm2 = ratios.tm2;
        r.k_cm2 = springs.k_cm1 * ratios.cm2;
        r.k_tm2 = springs.k_tm1 * ratios.tm2;
        const UltimateTraps ultimate = ultimate_traps(power, geometry.lambda_ref,
                                                      geometry.length, gamma, geometry.finesse);
        r.k_ultimate_gamma = ultimate.k_gamma;
        r.k_ultimate_finesse = ultimate.k_finesse;
        r.g_max = ultimate.g_max;
    }
    r.omega_cm = std::sqrt(osc_cm.omega_mat * osc_cm.omega_mat + r.k_cm2 / osc_cm.mass);
    r.omega_tm = std::sqrt(osc_cm.omega_mat * osc_cm.omega_mat + r.k_tm2 / osc_cm.inertia);
    r.omega_ultimate = std::sqrt(r.k_ultimate_gamma / osc_cm.mass);
    const double round_trip = 2.0 * geometry.length / kSpeedOfLight;
    r.anti_damping = anti_damping_rate(r.omega_cm, round_trip);
    r.adiabatic_warning = gamma > 0.0 && r.omega_cm > gamma / 3.0;
    return r;
}

namespace {

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

void write_trap_report(std::ostream& out, const TrapReport& r)
{
    out << "power = " << fmt(r.power) << " (W)\n";
    out << "k_cm1 = " << fmt(r.k_cm1) << " (N/m)\n";
    out << "k_tm1 = " << fmt(r.k_tm1) << " (N*m/rad)\n";
    out << "ratio_cm2 = " << fmt(r.ratio_cm2) << " (dimensionless)\n";
    out << "ratio_tm2 = " << fmt(r.ratio_tm2) << " (dimensionless)\n";
    out << "k_cm2 = " << fmt(r.k_cm2) << " (N/m)\n";
    out << "k_tm2 = " << fmt(r.k_tm2) << " (N*m/rad)\n";
    out << "k_ultimate_gamma = " << fmt(r.k_ultimate_gamma) << " (N/m)\n";
    out << "k_ultimate_finesse = " << fmt(r.k_ultimate_finesse) << " (N/m)\n";
    out << "g_max = " << fmt(r.g_max) << " (rad/s/m)\n";
    out << "gamma = " << fmt(r.gamma) << " (rad/s)\n";
    out << "omega_cm = " << fmt(r.omega_cm) << " (rad/s)\n";
    out << "f_cm = " << fmt(r.omega_cm / (2.0 * kPi)) << " (Hz)\n";
    out << "omega_tm = " << fmt(r.omega_tm) << " (rad/s)\n";
    out << "f_tm = " << fmt(r.omega_tm / (2.0 * kPi)) << " (Hz)\n";
    out << "omega_ultimate = " << fmt(r.omega_ultimate) << " (rad/s)\n";
    out << "f_ultimate = " << fmt(r.omega_ultimate / (2.0 * kPi)) << " (Hz)\n";
    out << "anti_damping_round_trip = " << fmt(r.anti_damping) << " (1/s)\n";
    if (r.adiabatic_warning)
        out << "warning = trapped frequency exceeds Gamma/3; adiabatic two-mode model "
               "marginal\n";
}

void write_trap_csv_row(std::ostream& out, const TrapReport& r, bool header)
{
    if (header)
        out << "power_W,gamma_rad_s,k_cm1_N_m,k_tm1_Nm_rad,ratio_cm2,ratio_tm2,"
               "k_cm2_N_m,k_tm2_Nm_rad,k_ultimate_gamma_N_m,k_ultimate_finesse_N_m,"
               "g_max_rad_s_m,omega_cm_rad_s,f_cm_Hz,omega_tm_rad_s,f_tm_Hz,"
               "omega_ultimate_rad_s,f_ultimate_Hz,anti_damping_1_s\n";
    out << fmt(r.power) << "," << fmt(r.gamma) << "," << fmt(r.k_cm1) << "," << fmt(r.k_tm1)
        << "," << fmt(r.ratio_cm2) << "," << fmt(r.ratio_tm2) << "," << fmt(r.k_cm2) << ","
        << fmt(r.k_tm2) << "," << fmt(r.k_ultimate_gamma) << "," << fmt(r.k_ultimate_finesse)
        << "," << fmt(r.g_max) << "," << fmt(r.omega_cm) << ","
        << fmt(r.omega_cm / (2.0 * kPi)) << "," << fmt(r.omega_tm) << ","
        << fmt(r.omega_tm / (2.0 * kPi)) << "," << fmt(r.omega_ultimate) << ","
        << fmt(r.omega_ultimate / (2.0 * kPi)) << "," << fmt(r.anti_damping) << "\n";
}

} // namespace cavlev
