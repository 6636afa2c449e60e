#pragma once

#include <cstdint>
#include <string>

namespace cavlev {

/// Hermite-Gaussian cavity mode label: one longitudinal index eta and two
/// transverse indices mu (node count along y) and nu (node count along z).
struct ModeIndex {
    std::int64_t eta = 1;
    int mu = 0;
    int nu = 0;

    void validate() const;
    std::string label() const; // e.g. "e63224m1n0"

    friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

/// Fabry-Perot resonator: length, mirror radii of curvature, reference
/// wavelength, and (optionally) finesse. All SI; angular frequencies in rad/s.
struct CavityGeometry {
    double length = 0.0;      // m
    double roc1 = 0.0;        // m, mirror 1 radius of curvature
    double roc2 = 0.0;        // m
    double lambda_ref = 0.0;  // m
    double finesse = 0.0;     // dimensionless; 0 = unspecified

    static CavityGeometry symmetric(double length, double roc, double lambda_ref,
                                    double finesse = 0.0);

    double g1() const { return 1.0 - length / roc1; }
    double g2() const { return 1.0 - length / roc2; }
    double stability() const { return g1() * g2(); }
    bool is_stable() const;
    void validate() const;

    /// Free spectral range pi*c/L in rad/s.
    double fsr() const;

    /// Optical decay rate kappa = fsr/finesse (rad/s); requires finesse > 0.
    double kappa() const;

    /// Gouy phase advance per transverse quantum divided by pi:
    /// arccos(+-sqrt(g1 g2))/pi, sign fixed by the cavity branch.
    double gouy_fraction() const;
};

/// Flat-wavefront beam parameters at the disc plane: mode radius sigma and
/// effective longitudinal wavenumber k.
struct BeamParams {
    double sigma = 0.0;          // m
    double k = 0.0;              // 1/m
    double waist_position = 0.0; // m

    void validate() const;

    /// Beam for the given reference mode, with sigma and k evaluated at that
    /// mode's own frequency (shared by all modes of an analytic manifold).
    static BeamParams at_waist(const CavityGeometry& geometry, const ModeIndex& reference);
};

/// Normalized Hermite polynomial H_n(chi)/sqrt(2^n n! sqrt(pi)), evaluated by
/// the normalized three-term recursion (stable for large n, no factorials).
double normalized_hermite(int n, double chi);

/// Unperturbed cold-cavity frequency of a Hermite-Gaussian mode:
/// omega = fsr * (eta + (1 + mu + nu) * gouy_fraction).
double unperturbed_frequency(const CavityGeometry& geometry, const ModeIndex& mode);

/// TEM00 mode radius at the waist for light at the given mode's frequency.
double waist_radius(const CavityGeometry& geometry, const ModeIndex& mode);

/// Waist radius at an explicit vacuum wavelength.
double waist_radius_at(const CavityGeometry& geometry, double lambda);

/// Longitudinal mode index whose TEM(mu,nu) frequency is closest to the
/// reference wavelength; rounded down to a multiple of `multiple_of`.
std::int64_t eta_near_reference(const CavityGeometry& geometry, int mu, int nu,
                                int multiple_of = 4);

/// Flat-wavefront mode amplitude near the waist (unit L2 norm over the cavity
/// volume): H_mu(Y) H_nu(Z) exp(-(Y^2+Z^2)/2) cos(kx + pi*eta/2) / norm with
/// Y = sqrt(2) y / sigma, Z = sqrt(2) z / sigma.
double mode_field(const CavityGeometry& geometry, const BeamParams& beam,
                  const ModeIndex& mode, double x, double y, double z);

/// Convenience overload using the mode's own beam parameters.
double mode_field(const CavityGeometry& geometry, const ModeIndex& mode,
                  double x, double y, double z);

/// cos(pi*n/2) and sin(pi*n/2) evaluated exactly from n mod 4.
double cos_half_pi(std::int64_t n);
double sin_half_pi(std::int64_t n);

} // namespace cavlev
