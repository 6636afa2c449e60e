#include "cavlev/mode_basis.hpp"

#include <cmath>
#include <limits>

#include "cavlev/constants.hpp"
#include "cavlev/errors.hpp"

namespace cavlev {

void ModeIndex::validate() const
{
    if (eta < 1)
        throw DomainError("ModeIndex: eta must be >= 1");
    if (mu < 0 || nu < 0)
        throw DomainError("ModeIndex: transverse indices must be >= 0");
}

std::string ModeIndex::label() const
{
    return "e" + std::to_string(eta) + "m" + std::to_string(mu) + "n" + std::to_string(nu);
}

CavityGeometry CavityGeometry::symmetric(double length, double roc, double lambda_ref,
                                         double finesse)
{
    CavityGeometry g;
    g.length = length;
    g.roc1 = roc;
    g.roc2 = roc;
    g.lambda_ref = lambda_ref;
    g.finesse = finesse;
    g.validate();
    return g;
}

bool CavityGeometry::is_stable() const
{
    const double s = stability();
    return s >= 0.0 && s <= 1.0;
}

void CavityGeometry::validate() const
{
    if (!(length > 0.0))
        throw DomainError("CavityGeometry: length must be > 0");
    if (!(lambda_ref > 0.0))
        throw DomainError("CavityGeometry: lambda_ref must be > 0");
    if (!is_stable())
        throw DomainError("CavityGeometry: unstable resonator, g1*g2 outside [0, 1]");
    if (finesse < 0.0)
        throw DomainError("CavityGeometry: finesse must be >= 0");
}

double CavityGeometry::fsr() const
{
    return kPi * kSpeedOfLight / length;
}

double CavityGeometry::kappa() const
{
    if (!(finesse > 0.0))
        throw DomainError("CavityGeometry: kappa requires finesse > 0");
    return fsr() / finesse;
}

double CavityGeometry::gouy_fraction() const
{
    if (!is_stable())
        throw DomainError("CavityGeometry: unstable resonator, g1*g2 outside [0, 1]");
    // Branch convention: sqrt(g1 g2) carries the common sign of g1 and g2.
    const double root = std::sqrt(stability());
    const double signed_root = (g1() + g2() < 0.0) ? -root : root;
    return std::acos(signed_root) / kPi;
}

void BeamParams::validate() const
{
    if (!(sigma > 0.0))
        throw DomainError("BeamParams: sigma must be > 0");
    if (!(k > 0.0))
        throw DomainError("BeamParams: k must be > 0");
}

BeamParams BeamParams::at_waist(const CavityGeometry& geometry, const ModeIndex& reference)
{
    BeamParams beam;
    const double omega = unperturbed_frequency(geometry, reference);
    beam.k = omega / kSpeedOfLight;
    beam.sigma = waist_radius_at(geometry, 2.0 * kPi / beam.k);
    beam.waist_position = 0.0;
    return beam;
}

double normalized_hermite(int n, double chi)
{
    if (n < 0)
        throw DomainError("normalized_hermite: n must be >= 0");
    const double h0 = std::pow(kPi, -0.25);
    if (n == 0)
        return h0;
    double prev = h0;                          // H~_0
    double cur = std::sqrt(2.0) * chi * h0;    // H~_1
    for (int m = 1; m < n; ++m) {
        // chi*H~_m = sqrt((m+1)/2) H~_{m+1} + sqrt(m/2) H~_{m-1}
        const double next =
            (chi * cur - std::sqrt(0.5 * m) * prev) / std::sqrt(0.5 * (m + 1));
        prev = cur;
        cur = next;
    }
    return cur;
}

double unperturbed_frequency(const CavityGeometry& geometry, const ModeIndex& mode)
{
    mode.validate();
    const double offset = (1.0 + mode.mu + mode.nu) * geometry.gouy_fraction();
    return geometry.fsr() * static_cast<double>(mode.eta) + geometry.fsr() * offset;
}

double waist_radius_at(const CavityGeometry& geometry, double lambda)
{
    geometry.validate();
    if (!(lambda > 0.0))
        throw DomainError("waist_radius: lambda must be > 0");
    const double g1 = geometry.g1();
    const double g2 = geometry.g2();
    const double s = g1 * g2;
    if (s >= 1.0 - 1e-14)
        throw DomainError("waist_radius: degenerate (planar/concentric) resonator");

    double w0_sq;
    if (std::abs(g1 - g2) < 1e-12) {
        // Symmetric cavity: w0^2 = (lambda L / 2 pi) sqrt((1+g)/(1-g)).
        w0_sq = lambda * geometry.length / (2.0 * kPi) * std::sqrt((1.0 + g1) / (1.0 - g1));
    } else {
        const double denom = std::abs(g1 + g2 - 2.0 * s);
        if (denom < std::numeric_limits<double>::min())
            throw DomainError("waist_radius: degenerate resonator geometry");
        w0_sq = lambda * geometry.length / kPi * std::sqrt(s * (1.0 - s)) / denom;
    }
    return std::sqrt(w0_sq);
}

double waist_radius(const CavityGeometry& geometry, const ModeIndex& mode)
{
    const double omega = unperturbed_frequency(geometry, mode);
    return waist_radius_at(geometry, 2.0 * kPi * kSpeedOfLight / omega);
}

std::int64_t eta_near_reference(const CavityGeometry& geometry, int mu, int nu,
                                int multiple_of)
{
    geometry.validate();
    const double omega_ref = 2.0 * kPi * kSpeedOfLight / geometry.lambda_ref;
    const double offset = (1.0 + mu + nu) * geometry.gouy_fraction();
    auto eta = static_cast<std::int64_t>(std::llround(omega_ref / geometry.fsr() - offset));
    if (multiple_of > 1)
        eta -= eta % multiple_of;
    if (eta < 1)
        throw DomainError("eta_near_reference: cavity too short for reference wavelength");
    return eta;
}

double cos_half_pi(std::int64_t n)
{
    switch (((n % 4) + 4) % 4) {
    case 0: return 1.0;
    case 2: return -1.0;
    default: return 0.0;
    }
}

double sin_half_pi(std::int64_t n)
{
    switch (((n % 4) + 4) % 4) {
    case 1: return 1.0;
    case 3: return -1.0;
    default: return 0.0;
    }
}

double mode_field(const CavityGeometry& geometry, const BeamParams& beam,
                  const ModeIndex& mode, double x, double y, double z)
{
    mode.validate();
    beam.validate();
    const double yn = std::sqrt(2.0) * y / beam.sigma;
    const double zn = std::sqrt(2.0) * z / beam.sigma;
    // Normalized Hermites absorb the 1/sqrt(2^mu mu! sqrt(pi)) factors.
    const double transverse = normalized_hermite(mode.mu, yn) * normalized_hermite(mode.nu, zn) *
                              std::exp(-0.5 * (yn * yn + zn * zn));
    // cos(kx + pi*eta/2) with the quadrant factored out exactly.
    const double longitudinal =
        std::cos(beam.k * x) * cos_half_pi(mode.eta) - std::sin(beam.k * x) * sin_half_pi(mode.eta);
    const double norm = beam.sigma * std::sqrt(0.25 * geometry.length);
    return transverse * longitudinal / norm;
}

double mode_field(const CavityGeometry& geometry, const ModeIndex& mode,
                  double x, double y, double z)
{
    return mode_field(geometry, BeamParams::at_waist(geometry, mode), mode, x, y, z);
}

} // namespace cavlev
