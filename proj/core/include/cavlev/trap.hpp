#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "cavlev/coupling.hpp"
#include "cavlev/mode_basis.hpp"
#include "cavlev/spectrum.hpp"

namespace cavlev {

/// Mechanical oscillator stiffened by an optical spring.
struct OscillatorParams {
    double mass = 0.0;       // kg
    double inertia = 0.0;    // kg m^2
    double omega_mat = 0.0;  // rad/s
    double q_mat = 0.0;      // dimensionless

    void validate() const;
    double k_mat() const { return mass * omega_mat * omega_mat; }

    /// Rigid disc: mass = density pi r^2 t, inertia = m r^2 / 4.
    static OscillatorParams disc(double density, double radius, double thickness,
                                 double omega_mat, double q_mat);
};

struct SingleModeSprings {
    double k_cm1 = 0.0; // N/m
    double k_tm1 = 0.0; // N m / rad
};

/// Single-mode (TEM00) spring constants at the stable trap points:
/// K_CM,1 = 4 L P alpha tau k^2 / c, K_TM,1 = L P alpha tau k^2 sigma^2 / c.
SingleModeSprings single_mode_springs(double power, const CavityGeometry& geometry,
                                      const BeamParams& beam, const DiscParams& disc);

struct EnhancementRatios {
    double cm2 = 0.0; // K_CM,2 / K_CM,1
    double tm2 = 0.0; // K_TM,2 / K_TM,1 = cm2 / e
};

/// Maximum two-mode spring enhancement at an optimally placed crossing with
/// scattering rate Gamma: (omega_FSR/Gamma) (n^2-1) tau t_theta / lambda for
/// the center of mass, divided by e for torsion.
EnhancementRatios enhancement_ratios(const CavityGeometry& geometry, const DiscParams& disc,
                                     double gamma);

struct UltimateTraps {
    double k_gamma = 0.0; // N/m, 16 pi P / (lambda L Gamma)
    double k_finesse = 0.0; // N/m, 32 P F / (lambda c)
    double g_max = 0.0;     // rad/s/m, 4 pi c / (lambda L)
};

UltimateTraps ultimate_traps(double power, double lambda, double length, double gamma,
                             double finesse);

struct PerPhotonBounds {
    double adiabatic = 0.0; // N/m per photon, hbar G-^2 / omega_m
    double finesse = 0.0;   // N/m per photon, 2 hbar G-^2 Q_gamma / omega_0
};

PerPhotonBounds per_photon_bounds(double g_minus, double omega_m, double omega_0,
                                  double q_gamma);

/// Intracavity photon number for circulating power P: the stored energy of
/// the two counter-propagating waves is 2 P L / c, so N = 2 P L / (hbar omega c).
double photon_number(double power, double length, double omega_0);

/// Parasitic anti-damping rate omega_m^2 t_d / 2 of a delayed spring.
double anti_damping_rate(double omega_m, double delay);

struct TrappedOscillator {
    double omega_m = 0.0; // rad/s
    double q_m = 0.0;
};

/// omega_m = sqrt(omega_mat^2 + K_opt/m), Q_m = Q_mat (K_mat + K_opt)/K_mat.
TrappedOscillator trapped_oscillator(const OscillatorParams& osc, double k_opt);

enum class PotentialShape { double_well, quartic, quadratic };

struct QuarticClassification {
    double theta_z = 0.0;
    double c2 = 0.0; // quadratic coefficient of the upper branch at xi = 0
    double c4 = 0.0; // quartic coefficient
    PotentialShape shape = PotentialShape::quadratic;
};

struct QuarticScanOptions {
    double window = 0.0; // half-width of the fit window; 0 = lambda/60
    int points = 41;
    VijOptions vij;
    // |c2| < c2_zero_factor * |c4| * window^2 counts as "purely quartic".
    double c2_zero_factor = 1e-3;
};

struct QuarticScanResult {
    std::vector<QuarticClassification> classifications;
    std::optional<double> quartic_point; // theta_z with c2 = 0, if bracketed
};

/// Classifies the upper-branch potential of a two-mode crossing near the
/// symmetric point per tilt theta_z, and root-finds the purely quartic tilt.
QuarticScanResult quartic_scan(const CavityGeometry& geometry, const BeamParams& beam,
                               const DiscParams& disc_template, const ModeManifold& manifold,
                               const std::vector<double>& theta_z_grid,
                               ScanCoordinate coordinate, const QuarticScanOptions& opts = {});

/// One-shot trap report for the CLI.
struct TrapReport {
    double power = 0.0;
    double k_cm1 = 0.0, k_tm1 = 0.0;
    double ratio_cm2 = 0.0, ratio_tm2 = 0.0;
    double k_cm2 = 0.0, k_tm2 = 0.0;
    double k_ultimate_gamma = 0.0, k_ultimate_finesse = 0.0, g_max = 0.0;
    double omega_cm = 0.0, omega_tm = 0.0; // rad/s, two-mode trapped
    double omega_ultimate = 0.0;           // rad/s, sqrt(K_ultimate_gamma / m)
    double gamma = 0.0;
    double anti_damping = 0.0; // 1/s for a round-trip delayed spring
    bool adiabatic_warning = false; // omega_m > Gamma/3
};

TrapReport make_trap_report(double power, const CavityGeometry& geometry,
                            const BeamParams& beam, const DiscParams& disc,
                            const OscillatorParams& osc_cm, double gamma);

/// Flat key = value (unit) serialization.
void write_trap_report(std::ostream& out, const TrapReport& report);

/// CSV row form for sweeps; header written when `header` is true.
void write_trap_csv_row(std::ostream& out, const TrapReport& report, bool header);

} // namespace cavlev
