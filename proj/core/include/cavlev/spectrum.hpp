#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cavlev/coupling.hpp"
#include "cavlev/mode_basis.hpp"

namespace cavlev {

/// Nearly-degenerate set of basis modes with their unperturbed frequencies.
struct ModeManifold {
    std::vector<ModeIndex> modes;
    std::vector<double> omegas; // rad/s, parallel to modes

    std::size_t size() const { return modes.size(); }
    static ModeManifold build(const CavityGeometry& geometry, std::vector<ModeIndex> modes);
};

/// One transverse family anchored at a longitudinal index; make_manifold
/// expands each family by +-half_width longitudinal modes.
struct ManifoldFamily {
    int mu = 0;
    int nu = 0;
    std::int64_t eta_center = 1;
};

ModeManifold make_manifold(const CavityGeometry& geometry,
                           const std::vector<ManifoldFamily>& families, int half_width);

/// Eigen-solution of the manifold problem: (I + V) a = (omega_i^2/omega^2) a
/// solved as the symmetric generalized eigenproblem diag(omega_i^2) a =
/// omega^2 (I + V) a. Frequencies ascending; vectors unit Euclidean norm.
struct ManifoldSolution {
    Eigen::VectorXd omegas;
    Eigen::MatrixXd vectors; // empty when computed without vectors
};

ManifoldSolution solve_manifold(const ModeManifold& manifold, const PerturbationMatrix& v,
                                bool compute_vectors = true);
ManifoldSolution solve_manifold(const CavityGeometry& geometry, const BeamParams& beam,
                                const DiscParams& disc, const ModeManifold& manifold,
                                const VijOptions& opts = {}, bool compute_vectors = true);

/// Closed-form two-mode eigenfrequencies in the small-perturbation limit
/// (used as the independent oracle for the general solver).
std::pair<double, double> two_mode_closed_form(double omega1, double omega2, double v11,
                                               double v22, double v12);

enum class ScanCoordinate { x0, theta_y, theta_z };

std::string scan_coordinate_name(ScanCoordinate coordinate); // "x0_m", ...
DiscParams disc_at(const DiscParams& disc_template, ScanCoordinate coordinate, double value);

struct ScanOptions {
    VijOptions vij;
    unsigned threads = 0;      // 0 = hardware concurrency
    bool track = true;         // match branches by eigenvector overlap
    bool store_weights = false;
};

/// Eigenfrequency branches versus a scan coordinate. Branch identity is
/// established by eigenvector overlap between adjacent grid points, never by
/// eigenvalue sorting.
struct SpectrumBranch {
    ScanCoordinate coordinate = ScanCoordinate::x0;
    std::vector<double> grid;
    std::vector<ModeIndex> modes;
    Eigen::MatrixXd omegas; // (n_branches, n_points)
    std::vector<Eigen::MatrixXd> weights;     // per point, (n_modes x n_branches); optional
    std::vector<double> min_adjacent_overlap; // per grid interval; empty if untracked

    Eigen::Index branches() const { return omegas.rows(); }
    Eigen::Index points() const { return omegas.cols(); }
};

SpectrumBranch scan_branch(const CavityGeometry& geometry, const BeamParams& beam,
                           const DiscParams& disc_template, const ModeManifold& manifold,
                           ScanCoordinate coordinate, const std::vector<double>& grid,
                           const ScanOptions& opts = {});

/// Avoided-crossing characterization: omega+- = omega0 + G+ d +- sqrt(G-^2 d^2
/// + Gamma^2) fitted around the gap minimum. g1 >= g2 by the G- >= 0
/// convention; curvature is the quadratic coefficient G-^2/Gamma of either
/// branch at the center.
struct CrossingReport {
    double location = 0.0;  // scan coordinate of the gap minimum
    double gap = 0.0;       // 2 Gamma (rad/s)
    double gamma = 0.0;     // rad/s
    double g1 = 0.0;        // rad/s per coordinate unit
    double g2 = 0.0;
    double g_plus = 0.0;
    double g_minus = 0.0;
    double curvature = 0.0;     // rad/s per unit^2
    double fit_residual = 0.0;  // rms model mismatch / Gamma
};

/// Evaluates the two branch frequencies (lower, upper) at an arbitrary scan
/// coordinate; lets the fit refine the gap minimum between grid points.
using GapEvaluator = std::function<std::pair<double, double>(double)>;

struct CrossingFitOptions {
    double window_gap_widths = 5.0; // half-window in units of Gamma/|G-|
    int refine_points = 41;         // evaluator samples across the window
    double residual_tol = 0.05;
};

CrossingReport characterize_crossing(const SpectrumBranch& branch, int lower_branch,
                                     int upper_branch, const GapEvaluator& evaluator = {},
                                     const CrossingFitOptions& opts = {});

/// Convenience overload: picks the two tracked branches with the smallest gap.
CrossingReport characterize_crossing(const SpectrumBranch& branch,
                                     const GapEvaluator& evaluator = {},
                                     const CrossingFitOptions& opts = {});

/// Gap evaluator backed by a manifold solve: returns the adjacent eigenvalue
/// pair with the smallest gap among eigenvalues inside [omega_lo, omega_hi].
GapEvaluator make_gap_evaluator(const CavityGeometry& geometry, const BeamParams& beam,
                                const DiscParams& disc_template, const ModeManifold& manifold,
                                ScanCoordinate coordinate, double omega_lo, double omega_hi,
                                const VijOptions& opts = {});

/// Branch scans with manifolds of increasing longitudinal extent plus the
/// maximum branch shift between successive sizes, measured inside an absolute
/// frequency window.
struct ConvergenceResult {
    std::vector<int> half_widths;
    std::vector<SpectrumBranch> scans;
    std::vector<double> max_shift; // rad/s; size = half_widths.size() - 1
};

ConvergenceResult multimode_convergence(const CavityGeometry& geometry, const BeamParams& beam,
                                        const DiscParams& disc,
                                        const std::vector<ManifoldFamily>& center_families,
                                        const std::vector<int>& half_widths,
                                        ScanCoordinate coordinate, const std::vector<double>& grid,
                                        double omega_lo, double omega_hi,
                                        const ScanOptions& opts = {});

/// Largest distance from any branch value of `small` inside the window to the
/// nearest branch value of `big` at the same grid point.
double branch_shift(const SpectrumBranch& small, const SpectrumBranch& big, double omega_lo,
                    double omega_hi);

/// CSV emission: coord, branch_id, omega_rad_s, detuning_Hz[, weight_<label>...].
void write_branch_csv(std::ostream& out, const SpectrumBranch& branch, double omega_ref);

} // namespace cavlev
