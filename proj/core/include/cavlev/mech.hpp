#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cavlev {

struct MechMaterial {
    double density = 0.0;        // kg/m^3
    double youngs_modulus = 0.0; // Pa
    double poisson = 0.0;
};

/// Doubly-tethered disc: thin disc of radius r and thickness t suspended by
/// two tethers of length l and width d along the +-y axis, clamped at the
/// outer tether ends. Out-of-plane displacement only.
struct MechGeometry {
    double thickness = 0.0;     // m
    double disc_radius = 0.0;   // m
    double tether_length = 0.0; // m
    double tether_width = 0.0;  // m
    MechMaterial material;

    void validate() const;
    double bending_rigidity() const; // E t^3 / 12 (1 - nu^2)

    /// 110-nm silicon disc, r = 5 um, l = 45 um, d = 100 nm; silicon treated
    /// isotropic (E = 170 GPa, nu = 0.28, rho = 2330 kg/m^3).
    static MechGeometry tethered_silicon_disc();
};

/// Mode parity under y -> -y and z -> -z. Torsional modes (rigid twist about
/// the tether axis) are even in y and odd in z.
enum class SymmetryClass { symmetric, antisymmetric, torsional, mixed };

std::string symmetry_name(SymmetryClass s);

/// Assembled model: mesh, clamped boundary, lumped mass diagonal, material
/// stiffness (DKT plate bending on the disc, Euler-Bernoulli bending plus
/// Saint-Venant torsion on the tethers), and exact mirror maps.
struct MechModel {
    MechGeometry geometry;

    std::vector<std::array<double, 2>> nodes; // (y, z)
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> beams;
    std::vector<char> on_disc;     // per node
    std::vector<int> mirror_y;     // node map under y -> -y
    std::vector<int> mirror_z;

    std::vector<int> dof_index;    // 3*node + comp -> free dof, or -1 if clamped
    int n_free = 0;
    Eigen::SparseMatrix<double> k_mat; // n_free x n_free
    Eigen::VectorXd m_diag;            // lumped mass, n_free

    double mesh_disc_area = 0.0;

    int free_dof(int node, int comp) const { return dof_index[static_cast<std::size_t>(3 * node + comp)]; }
    double disc_mass() const; // rho t pi r^2 (continuum value)

    /// w = 1 on disc nodes (piston) / w = z on disc nodes (rigid twist).
    Eigen::VectorXd rigid_piston() const;
    Eigen::VectorXd rigid_twist() const;

    /// Signed-permutation action of the mirror symmetries on free-DOF vectors.
    Eigen::VectorXd apply_mirror_y(const Eigen::VectorXd& q) const;
    Eigen::VectorXd apply_mirror_z(const Eigen::VectorXd& q) const;
};

/// Builds the clamped model. mesh_resolution = number of radial node rings on
/// the disc (>= 4); clamp_tethers = false leaves the structure free-floating
/// (rigid-body checks).
MechModel build_model(const MechGeometry& geometry, int mesh_resolution,
                      bool clamp_tethers = true);

/// Consistent optical-spring stiffness from the Gaussian spring-constant
/// density strength * exp(-(y^2+z^2)/(2 sigma^2)), supported on the disc and
/// the illuminated tethers, acting on the out-of-plane displacement.
Eigen::SparseMatrix<double> optical_stiffness(const MechModel& model, double sigma,
                                              double strength);

/// Frequency a perfectly-rigid, tether-free disc of the same mass acquires
/// under the same optical spring (rad/s); the mechanism-independent trap axis.
double normalize_trap_strength(const MechModel& model, double sigma, double strength);

/// Inverse of normalize_trap_strength.
double strength_for_normalized(const MechModel& model, double sigma, double omega_rigid);

struct SubspaceOptions {
    int extra_vectors = 40;
    double shift = 0.0;       // rad^2/s^2; 0 = auto
    double tol = 1e-10;
    int max_iterations = 100;
    unsigned seed = 20240817;
};

/// Lowest untrapped modes, M-orthonormal, purified into exact parity classes.
struct ModalBasis {
    Eigen::VectorXd lambda; // omega^2, ascending
    Eigen::MatrixXd phi;    // n_free x n_modes
    std::vector<SymmetryClass> symmetry;
    std::vector<int> parity_y, parity_z; // +1 / -1
};

ModalBasis untrapped_modes(const MechModel& model, int n_modes,
                           const SubspaceOptions& opts = {});

struct ModalResult {
    double omega = 0.0;            // rad/s
    double u_opt_over_u_mat = 0.0; // (q^T K_opt q) / (q^T K_mat q)
    SymmetryClass symmetry = SymmetryClass::mixed;
    int track_id = -1;
};

struct MechSweepOptions {
    int n_basis = 180;
    int n_track = 12;
    SubspaceOptions subspace;
    bool store_shapes = false; // keep reduced coordinates of tracked modes
};

/// Generalized eigensolve per trap strength in the untrapped-mode Ritz basis;
/// modes tracked across strengths by shape overlap.
struct MechSweep {
    std::vector<double> strengths;     // raw density prefactors (N/m^3)
    std::vector<double> strength_norm; // rigid-disc frequency (rad/s) per strength
    double sigma = 0.0;
    std::vector<std::vector<ModalResult>> modes;          // [strength][track]
    std::vector<std::vector<Eigen::VectorXd>> reduced;    // optional shapes
    std::vector<double> min_tracking_overlap;             // per strength step
};

MechSweep modal_sweep(const MechModel& model, double sigma,
                      const std::vector<double>& strengths,
                      const MechSweepOptions& opts = {});

/// Lift a reduced shape back to free-DOF coordinates.
Eigen::VectorXd lift(const ModalBasis& basis, const Eigen::VectorXd& reduced);

/// CSV: strength_norm, mode_id, symmetry, freq_Hz, Uopt_over_Umat.
void write_mech_csv(std::ostream& out, const MechSweep& sweep);

} // namespace cavlev
