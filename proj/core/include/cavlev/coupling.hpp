#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cavlev/mode_basis.hpp"

namespace cavlev {

/// Dielectric slab disc inside the cavity: index, thickness, radius, axial
/// center position x0, and tilts about the y and z axes.
struct DiscParams {
    double n_index = 1.0;  // refractive index
    double thickness = 0.0; // m
    double radius = 0.0;    // m
    double x0 = 0.0;        // m
    double theta_y = 0.0;   // rad
    double theta_z = 0.0;   // rad

    void validate() const;

    DiscParams with_x0(double value) const;
    DiscParams with_theta_y(double value) const;
    DiscParams with_theta_z(double value) const;
};

/// Quantities derived from a disc + beam: perturbation strength alpha,
/// thickness correction tau, tilt-corrected thickness, normalized tilts, and
/// the TEM10 diagonal reduction factor beta = 1 - k^2 sigma^2 theta_z^2.
struct DiscDerived {
    double alpha = 0.0;   // (n^2-1) t_theta / L
    double tau = 1.0;     // sinc(k t_theta); 1 - (k t_theta)^2/6 to 2nd order
    double t_theta = 0.0; // m
    double Theta_y = 0.0; // sqrt(2) k sigma theta_y
    double Theta_z = 0.0;
    double beta = 1.0;

    static DiscDerived from(const CavityGeometry& geometry, const BeamParams& beam,
                            const DiscParams& disc);
};

/// Largest tilt magnitude accepted before the slab is considered grazing.
inline constexpr double kMaxTiltRad = 0.3;

struct OverlapPair {
    double c = 0.0; // curly-C
    double s = 0.0; // curly-S
};

/// Exact transverse overlap integrals
///   C_nm(Theta) = int Hn~ Hm~ e^{-chi^2} cos(Theta chi) dchi
///   S_nm(Theta) = int Hn~ Hm~ e^{-chi^2} sin(Theta chi) dchi
/// evaluated as e^{-Theta^2/4} times an exact polynomial. S vanishes
/// identically for even n-m, C for odd n-m.
OverlapPair overlap_CS(int n, int m, double theta);

/// Coefficients of the exact polynomials: C = e^{-T^2/4} sum c_even[t] T^{2t},
/// S = e^{-T^2/4} T sum s_odd[t] T^{2t}. Generated once per (n, m) with exact
/// dyadic-rational arithmetic and cached (write-once, shared by readers).
struct OverlapPolynomial {
    std::vector<double> c_even;
    std::vector<double> s_odd;
};
const OverlapPolynomial& overlap_polynomials(int n, int m);

/// Leading-order tilt dependence of the overlap: the first Taylor term of
/// C_nm (m-n even) or S_nm (m-n odd),
///   (-1)^floor(d/2) sqrt(m!/(2^d n!)) Theta^d / d!  with d = |m-n|.
double overlap_leading(int n, int m, double theta);

/// Perturbation matrix elements V_ij between cavity modes for a tilted,
/// displaced disc.
struct PerturbationMatrix {
    std::vector<ModeIndex> manifold;
    Eigen::MatrixXd v; // symmetric, dimensionless
};

/// Closed-form V_ij: five-term expansion with shared beam parameters for all
/// modes, exact transverse overlaps, infinite transverse bounds.
double vij_analytic(const CavityGeometry& geometry, const BeamParams& beam,
                    const DiscParams& disc, const ModeIndex& i, const ModeIndex& j);

/// Whether the semi-analytic element carries per-mode wavenumber and waist
/// (needed for wide longitudinal manifolds to converge) or the shared beam.
enum class DiffractionModel { shared, per_mode };

/// Semi-analytic V_ij generalized to distinct longitudinal wavenumbers k_i,
/// k_j and (optionally) per-mode waists; reduces exactly to vij_analytic for
/// DiffractionModel::shared.
double vij_extended(const CavityGeometry& geometry, const BeamParams& beam,
                    const DiscParams& disc, const ModeIndex& i, const ModeIndex& j,
                    DiffractionModel diffraction);

struct QuadratureOptions {
    int n_x = 20;       // Gauss-Legendre order across the slab thickness
    int n_rho = 0;      // radial order; 0 = auto from radius/sigma
    int n_phi = 72;     // uniform angular points
    double refine_factor = 1.5;
    double rel_tol = 1e-6;      // agreement required between base and refined
    bool check_convergence = true;
};

/// Direct quadrature of the defining volume integral over the tilted slab:
/// x-bounds x0 + theta_z y + theta_y z +- t_theta/2, transverse bounds
/// truncated at the physical disc radius (not infinity).
double vij_quadrature(const CavityGeometry& geometry, const BeamParams& beam,
                      const DiscParams& disc, const ModeIndex& i, const ModeIndex& j,
                      const QuadratureOptions& opts = {});

enum class VijPath { analytic, extended };

struct VijOptions {
    VijPath path = VijPath::analytic;
    DiffractionModel diffraction = DiffractionModel::shared;
};

PerturbationMatrix build_perturbation_matrix(const CavityGeometry& geometry,
                                             const BeamParams& beam, const DiscParams& disc,
                                             const std::vector<ModeIndex>& manifold,
                                             const VijOptions& opts = {});

/// Normalized 1-D Hermite-Gaussian overlap with distinct widths and a complex
/// phase factor: (Gc, Gs) = int h_n(y; sa) h_m(y; sb) {cos,sin}(q y) dy.
/// For sa == sb this equals overlap_CS(n, m, q*sa/sqrt(2)).
OverlapPair hg_overlap_cos_sin(int n, int m, double sigma_a, double sigma_b, double q);

} // namespace cavlev
