#include "cavlev/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cavlev/constants.hpp"
#include "cavlev/errors.hpp"
#include "cavlev/parallel.hpp"

namespace cavlev {

ModeManifold ModeManifold::build(const CavityGeometry& geometry, std::vector<ModeIndex> modes)
{
    if (modes.empty())
        throw DomainError("ModeManifold: empty mode list");
    for (std::size_t a = 0; a < modes.size(); ++a)
        for (std::size_t b = a + 1; b < modes.size(); ++b)
            if (modes[a] == modes[b])
                throw DomainError("ModeManifold: duplicate mode " + modes[a].label());
    ModeManifold manifold;
    manifold.omegas.reserve(modes.size());
    for (const auto& mode : modes)
        manifold.omegas.push_back(unperturbed_frequency(geometry, mode));
    manifold.modes = std::move(modes);
    return manifold;
}

ModeManifold make_manifold(const CavityGeometry& geometry,
                           const std::vector<ManifoldFamily>& families, int half_width)
{
    if (half_width < 0)
        throw DomainError("make_manifold: half_width must be >= 0");
    std::vector<ModeIndex> modes;
    for (const auto& family : families) {
        for (std::int64_t d = -half_width; d <= half_width; ++d) {
            const std::int64_t eta = family.eta_center + d;
            if (eta < 1)
                throw DomainError("make_manifold: manifold reaches eta < 1");
            modes.push_back(ModeIndex{eta, family.mu, family.nu});
        }
    }
    return ModeManifold::build(geometry, std::move(modes));
}

ManifoldSolution solve_manifold(const ModeManifold& manifold, const PerturbationMatrix& v,
                                bool compute_vectors)
{
    const auto n = static_cast<Eigen::Index>(manifold.size());
    if (v.v.rows() != n || v.v.cols() != n)
        throw DomainError("solve_manifold: matrix size does not match manifold");

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = manifold.omegas[static_cast<std::size_t>(i)];
        a(i, i) = w * w;
    }
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n) + v.v;

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.compute(a, b, compute_vectors ? (Eigen::ComputeEigenvectors | Eigen::Ax_lBx)
                                         : (Eigen::EigenvaluesOnly | Eigen::Ax_lBx));
    if (solver.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diag(b, Eigen::EigenvaluesOnly);
        std::ostringstream msg;
        msg << "solve_manifold: generalized eigensolve failed; (I+V) eigenvalue range ["
            << diag.eigenvalues().minCoeff() << ", " << diag.eigenvalues().maxCoeff()
            << "], condition estimate "
            << diag.eigenvalues().maxCoeff() / std::max(diag.eigenvalues().minCoeff(), 0.0);
        throw NumericalError(msg.str());
    }

    ManifoldSolution solution;
    solution.omegas = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    if (compute_vectors) {
        solution.vectors = solver.eigenvectors();
        for (Eigen::Index c = 0; c < n; ++c)
            solution.vectors.col(c).normalize();
    }
    return solution;
}

ManifoldSolution solve_manifold(const CavityGeometry& geometry, const BeamParams& beam,
                                const DiscParams& disc, const ModeManifold& manifold,
                                const VijOptions& opts, bool compute_vectors)
{
    const PerturbationMatrix v =
        build_perturbation_matrix(geometry, beam, disc, manifold.modes, opts);
    return solve_manifold(manifold, v, compute_vectors);
}

std::pair<double, double> two_mode_closed_form(double omega1, double omega2, double v11,
                                               double v22, double v12)
{
    const double w1p = omega1 * (1.0 - 0.5 * v11);
    const double w2p = omega2 * (1.0 - 0.5 * v22);
    const double mean = 0.5 * (w1p + w2p);
    const double half = 0.5 * (w1p - w2p);
    const double coupling = 0.5 * omega1 * v12;
    const double root = std::sqrt(half * half + coupling * coupling);
    return {mean - root, mean + root};
}

std::string scan_coordinate_name(ScanCoordinate coordinate)
{
    switch (coordinate) {
    case ScanCoordinate::x0: return "x0_m";
    case ScanCoordinate::theta_y: return "theta_y_rad";
    case ScanCoordinate::theta_z: return "theta_z_rad";
    }
    return "coord";
}

DiscParams disc_at(const DiscParams& disc_template, ScanCoordinate coordinate, double value)
{
    switch (coordinate) {
    case ScanCoordinate::x0: return disc_template.with_x0(value);
    case ScanCoordinate::theta_y: return disc_template.with_theta_y(value);
    case ScanCoordinate::theta_z: return disc_template.with_theta_z(value);
    }
    return disc_template;
}

namespace {

// Greedy maximum-overlap assignment between previous and current eigenvector
// columns. Returns perm[current_column] for each branch slot and the smallest
// winning overlap.
std::pair<std::vector<Eigen::Index>, double> match_branches(const Eigen::MatrixXd& prev,
                                                            const Eigen::MatrixXd& cur)
{
    const Eigen::Index n = prev.cols();
    Eigen::MatrixXd overlap = (prev.transpose() * cur).cwiseAbs();

    struct Entry {
        double value;
        Eigen::Index row, col;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(n * n));
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            entries.push_back({overlap(r, c), r, c});
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.value > b.value; });

    std::vector<Eigen::Index> assignment(static_cast<std::size_t>(n), -1);
    std::vector<bool> row_used(static_cast<std::size_t>(n), false);
    std::vector<bool> col_used(static_cast<std::size_t>(n), false);
    Eigen::Index assigned = 0;
    double min_overlap = 1.0;
    for (const Entry& e : entries) {
        if (assigned == n)
            break;
        if (row_used[static_cast<std::size_t>(e.row)] || col_used[static_cast<std::size_t>(e.col)])
            continue;
        assignment[static_cast<std::size_t>(e.row)] = e.col;
        row_used[static_cast<std::size_t>(e.row)] = true;
        col_used[static_cast<std::size_t>(e.col)] = true;
        min_overlap = std::min(min_overlap, e.value);
        ++assigned;
    }
    return {assignment, min_overlap};
}

} // namespace

SpectrumBranch scan_branch(const CavityGeometry& geometry, const BeamParams& beam,
                           const DiscParams& disc_template, const ModeManifold& manifold,
                           ScanCoordinate coordinate, const std::vector<double>& grid,
                           const ScanOptions& opts)
{
    if (grid.size() < 2)
        throw DomainError("scan_branch: grid needs at least two points");
    for (std::size_t p = 1; p < grid.size(); ++p)
        if (!(grid[p] > grid[p - 1]))
            throw DomainError("scan_branch: grid must be strictly increasing");

    const auto n = static_cast<Eigen::Index>(manifold.size());
    const auto n_points = grid.size();

    SpectrumBranch result;
    result.coordinate = coordinate;
    result.grid = grid;
    result.modes = manifold.modes;
    result.omegas.resize(n, static_cast<Eigen::Index>(n_points));
    if (opts.store_weights)
        result.weights.resize(n_points);
    if (opts.track)
        result.min_adjacent_overlap.assign(n_points - 1, 0.0);

    const bool need_vectors = opts.track || opts.store_weights;

    // Solves run in parallel chunks; tracking is sequential across chunks and
    // only ever needs the previous point's eigenvectors.
    const std::size_t chunk = std::max<std::size_t>(
        4, 2 * (opts.threads ? opts.threads : std::thread::hardware_concurrency()));
    std::vector<ManifoldSolution> solutions(chunk);

    Eigen::MatrixXd prev_vectors;          // tracked order
    std::vector<Eigen::Index> branch_slot; // branch -> eigencolumn at previous point

    for (std::size_t start = 0; start < n_points; start += chunk) {
        const std::size_t count = std::min(chunk, n_points - start);
        parallel_for(
            count,
            [&](std::size_t k) {
                const DiscParams disc = disc_at(disc_template, coordinate, grid[start + k]);
                solutions[k] =
                    solve_manifold(geometry, beam, disc, manifold, opts.vij, need_vectors);
            },
            opts.threads);

        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t p = start + k;
            ManifoldSolution& sol = solutions[k];
            std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
            if (!opts.track || p == 0) {
                std::iota(order.begin(), order.end(), 0);
            } else {
                auto [assignment, min_overlap] = match_branches(prev_vectors, sol.vectors);
                order = std::move(assignment);
                result.min_adjacent_overlap[p - 1] = min_overlap;
            }
            for (Eigen::Index b = 0; b < n; ++b)
                result.omegas(b, static_cast<Eigen::Index>(p)) = sol.omegas(order[static_cast<std::size_t>(b)]);
            if (opts.track) {
                prev_vectors.resize(n, n);
                for (Eigen::Index b = 0; b < n; ++b)
                    prev_vectors.col(b) = sol.vectors.col(order[static_cast<std::size_t>(b)]);
            }
            if (opts.store_weights) {
                Eigen::MatrixXd w(n, n);
                for (Eigen::Index b = 0; b < n; ++b)
                    w.col(b) = sol.vectors.col(order[static_cast<std::size_t>(b)]);
                result.weights[p] = std::move(w);
            }
        }
    }
    return result;
}

namespace {

double golden_minimize(const std::function<double(double)>& f, double lo, double hi,
                       double tol)
{
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

} // namespace

CrossingReport characterize_crossing(const SpectrumBranch& branch, int lower_branch,
                                     int upper_branch, const GapEvaluator& evaluator,
                                     const CrossingFitOptions& opts)
{
    const auto n_points = static_cast<std::size_t>(branch.points());
    if (n_points < 5)
        throw DomainError("characterize_crossing: need at least 5 grid points");

    const auto lower = static_cast<Eigen::Index>(lower_branch);
    const auto upper = static_cast<Eigen::Index>(upper_branch);

    // Locate the interior gap minimum on the grid.
    std::size_t idx = 0;
    double gap_min = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < n_points; ++p) {
        const double gap = std::abs(branch.omegas(upper, static_cast<Eigen::Index>(p)) -
                                    branch.omegas(lower, static_cast<Eigen::Index>(p)));
        if (gap < gap_min) {
            gap_min = gap;
            idx = p;
        }
    }
    if (idx == 0 || idx + 1 == n_points)
        throw NumericalError("characterize_crossing: no interior gap minimum in window");

    double xi_c = branch.grid[idx];
    if (evaluator) {
        const double lo = branch.grid[idx - 1];
        const double hi = branch.grid[idx + 1];
        xi_c = golden_minimize(
            [&](double xi) {
                auto [wl, wu] = evaluator(xi);
                return wu - wl;
            },
            lo, hi, 1e-9 * (branch.grid.back() - branch.grid.front()));
        auto [wl, wu] = evaluator(xi_c);
        gap_min = wu - wl;
    }

    // Collect samples (delta, lower, upper).
    struct Sample {
        double delta, lower, upper;
    };
    auto fit = [&](const std::vector<Sample>& samples) {
        // Mean branch: linear LSQ in (omega0, G+).
        double s0 = 0, s1 = 0, s2 = 0, m0 = 0, m1 = 0;
        // Half-gap squared: linear LSQ in (Gamma^2, G-^2) against delta^2.
        double q0 = 0, q1 = 0, q2 = 0, g0 = 0, g1 = 0;
        for (const Sample& s : samples) {
            const double mean = 0.5 * (s.upper + s.lower);
            const double half_sq = 0.25 * (s.upper - s.lower) * (s.upper - s.lower);
            s0 += 1;
            s1 += s.delta;
            s2 += s.delta * s.delta;
            m0 += mean;
            m1 += mean * s.delta;
            const double d2 = s.delta * s.delta;
            q0 += 1;
            q1 += d2;
            q2 += d2 * d2;
            g0 += half_sq;
            g1 += half_sq * d2;
        }
        const double det_m = s0 * s2 - s1 * s1;
        const double omega0 = (m0 * s2 - m1 * s1) / det_m;
        const double g_plus = (s0 * m1 - s1 * m0) / det_m;
        const double det_q = q0 * q2 - q1 * q1;
        const double gamma_sq = (g0 * q2 - g1 * q1) / det_q;
        const double g_minus_sq = (q0 * g1 - q1 * g0) / det_q;
        return std::array<double, 4>{omega0, g_plus, gamma_sq, g_minus_sq};
    };

    auto collect_grid = [&](double window) {
        std::vector<Sample> samples;
        for (std::size_t p = 0; p < n_points; ++p) {
            const double delta = branch.grid[p] - xi_c;
            if (std::abs(delta) <= window)
                samples.push_back({delta, branch.omegas(lower, static_cast<Eigen::Index>(p)),
                                   branch.omegas(upper, static_cast<Eigen::Index>(p))});
        }
        return samples;
    };

    // Bootstrap fit over the full window to estimate the gap width, then
    // restrict to +-window_gap_widths half-gap-widths.
    const double full_window = branch.grid.back() - branch.grid.front();
    std::vector<Sample> samples = collect_grid(full_window);
    auto p0 = fit(samples);
    double gamma = std::sqrt(std::max(p0[2], 0.25 * gap_min * gap_min));
    double g_minus = std::sqrt(std::max(p0[3], 0.0));
    double window = full_window;
    if (g_minus > 0.0 && gamma > 0.0)
        window = std::min(full_window, opts.window_gap_widths * gamma / g_minus);

    if (evaluator) {
        samples.clear();
        for (int k = 0; k < opts.refine_points; ++k) {
            const double delta = -window + 2.0 * window * k / (opts.refine_points - 1);
            auto [wl, wu] = evaluator(xi_c + delta);
            samples.push_back({delta, wl, wu});
        }
    } else {
        samples = collect_grid(window);
        if (samples.size() < 7)
            samples = collect_grid(full_window);
    }

    const auto p1 = fit(samples);
    const double omega0 = p1[0];
    const double g_plus = p1[1];
    gamma = std::sqrt(std::max(p1[2], 0.0));
    g_minus = std::sqrt(std::max(p1[3], 0.0));

    CrossingReport report;
    report.location = xi_c;
    report.gamma = gamma;
    report.gap = 2.0 * gamma;
    report.g_plus = g_plus;
    report.g_minus = g_minus;
    report.g1 = g_plus + g_minus;
    report.g2 = g_plus - g_minus;
    report.curvature = gamma > 0.0 ? g_minus * g_minus / gamma
                                   : std::numeric_limits<double>::infinity();

    double rss = 0.0;
    double max_gap = 0.0;
    for (const Sample& s : samples) {
        const double root =
            std::sqrt(g_minus * g_minus * s.delta * s.delta + gamma * gamma);
        const double model_u = omega0 + g_plus * s.delta + root;
        const double model_l = omega0 + g_plus * s.delta - root;
        rss += (model_u - s.upper) * (model_u - s.upper) +
               (model_l - s.lower) * (model_l - s.lower);
        max_gap = std::max(max_gap, s.upper - s.lower);
    }
    const double scale = std::max(gamma, 0.05 * max_gap);
    report.fit_residual = std::sqrt(rss / (2.0 * samples.size())) / scale;
    if (report.fit_residual > opts.residual_tol) {
        std::ostringstream msg;
        msg << "characterize_crossing: fit residual " << report.fit_residual
            << " above tolerance " << opts.residual_tol;
        throw NumericalError(msg.str());
    }
    return report;
}

CrossingReport characterize_crossing(const SpectrumBranch& branch,
                                     const GapEvaluator& evaluator,
                                     const CrossingFitOptions& opts)
{
    // Pick the adjacent tracked pair with the smallest gap anywhere on the grid.
    const Eigen::Index n = branch.branches();
    if (n < 2)
        throw DomainError("characterize_crossing: need at least two branches");
    double best = std::numeric_limits<double>::infinity();
    int lower = 0;
    for (Eigen::Index b = 0; b + 1 < n; ++b) {
        for (Eigen::Index p = 0; p < branch.points(); ++p) {
            // Tracked branches are not sorted; compare all ordered pairs.
            for (Eigen::Index b2 = b + 1; b2 < n; ++b2) {
                const double gap = std::abs(branch.omegas(b2, p) - branch.omegas(b, p));
                if (gap < best) {
                    best = gap;
                    lower = static_cast<int>(branch.omegas(b, p) < branch.omegas(b2, p) ? b : b2);
                }
            }
        }
    }
    // Identify the partner of `lower` at the minimal-gap point.
    int upper = lower == 0 ? 1 : 0;
    best = std::numeric_limits<double>::infinity();
    for (Eigen::Index b = 0; b < n; ++b) {
        if (static_cast<int>(b) == lower)
            continue;
        for (Eigen::Index p = 0; p < branch.points(); ++p) {
            const double gap = std::abs(branch.omegas(b, p) - branch.omegas(lower, p));
            if (gap < best) {
                best = gap;
                upper = static_cast<int>(b);
            }
        }
    }
    // Order so "upper" has the larger frequency at the minimal-gap point.
    Eigen::Index p_min = 0;
    double gap_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index p = 0; p < branch.points(); ++p) {
        const double gap = std::abs(branch.omegas(upper, p) - branch.omegas(lower, p));
        if (gap < gap_min) {
            gap_min = gap;
            p_min = p;
        }
    }
    if (branch.omegas(upper, p_min) < branch.omegas(lower, p_min))
        std::swap(lower, upper);
    return characterize_crossing(branch, lower, upper, evaluator, opts);
}

GapEvaluator make_gap_evaluator(const CavityGeometry& geometry, const BeamParams& beam,
                                const DiscParams& disc_template, const ModeManifold& manifold,
                                ScanCoordinate coordinate, double omega_lo, double omega_hi,
                                const VijOptions& opts)
{
    return [=](double xi) -> std::pair<double, double> {
        const DiscParams disc = disc_at(disc_template, coordinate, xi);
        const ManifoldSolution sol =
            solve_manifold(geometry, beam, disc, manifold, opts, false);
        std::vector<double> inside;
        for (Eigen::Index i = 0; i < sol.omegas.size(); ++i)
            if (sol.omegas(i) >= omega_lo && sol.omegas(i) <= omega_hi)
                inside.push_back(sol.omegas(i));
        if (inside.size() < 2)
            throw NumericalError("gap evaluator: fewer than two eigenvalues in window");
        double best = std::numeric_limits<double>::infinity();
        std::pair<double, double> pair{inside[0], inside[1]};
        for (std::size_t i = 0; i + 1 < inside.size(); ++i) {
            if (inside[i + 1] - inside[i] < best) {
                best = inside[i + 1] - inside[i];
                pair = {inside[i], inside[i + 1]};
            }
        }
        return pair;
    };
}

double branch_shift(const SpectrumBranch& small, const SpectrumBranch& big, double omega_lo,
                    double omega_hi)
{
    if (small.grid != big.grid)
        throw DomainError("branch_shift: scans must share the grid");
    double worst = 0.0;
    for (Eigen::Index p = 0; p < small.points(); ++p) {
        for (Eigen::Index b = 0; b < small.branches(); ++b) {
            const double w = small.omegas(b, p);
            if (w < omega_lo || w > omega_hi)
                continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (Eigen::Index c = 0; c < big.branches(); ++c)
                nearest = std::min(nearest, std::abs(big.omegas(c, p) - w));
            worst = std::max(worst, nearest);
        }
    }
    return worst;
}

ConvergenceResult multimode_convergence(const CavityGeometry& geometry, const BeamParams& beam,
                                        const DiscParams& disc,
                                        const std::vector<ManifoldFamily>& center_families,
                                        const std::vector<int>& half_widths,
                                        ScanCoordinate coordinate, const std::vector<double>& grid,
                                        double omega_lo, double omega_hi,
                                        const ScanOptions& opts)
{
    if (half_widths.empty())
        throw DomainError("multimode_convergence: need at least one half width");
    for (std::size_t i = 1; i < half_widths.size(); ++i)
        if (half_widths[i] <= half_widths[i - 1])
            throw DomainError("multimode_convergence: half widths must be ascending");

    ConvergenceResult result;
    result.half_widths = half_widths;
    for (int hw : half_widths) {
        const ModeManifold manifold = make_manifold(geometry, center_families, hw);
        result.scans.push_back(
            scan_branch(geometry, beam, disc, manifold, coordinate, grid, opts));
    }
    for (std::size_t i = 1; i < result.scans.size(); ++i)
        result.max_shift.push_back(
            branch_shift(result.scans[i - 1], result.scans[i], omega_lo, omega_hi));
    return result;
}

void write_branch_csv(std::ostream& out, const SpectrumBranch& branch, double omega_ref)
{
    char buf[64];
    const auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return std::string(buf);
    };

    out << scan_coordinate_name(branch.coordinate) << ",branch_id,omega_rad_s,detuning_Hz";
    const bool with_weights = !branch.weights.empty();
    if (with_weights)
        for (const auto& mode : branch.modes)
            out << ",weight_" << mode.label();
    out << "\n";

    for (Eigen::Index b = 0; b < branch.branches(); ++b) {
        for (Eigen::Index p = 0; p < branch.points(); ++p) {
            const double omega = branch.omegas(b, p);
            out << fmt(branch.grid[static_cast<std::size_t>(p)]) << "," << b << ","
                << fmt(omega) << "," << fmt((omega - omega_ref) / (2.0 * kPi));
            if (with_weights) {
                const auto& w = branch.weights[static_cast<std::size_t>(p)];
                for (Eigen::Index m = 0; m < w.rows(); ++m)
                    out << "," << fmt(w(m, b));
            }
            out << "\n";
        }
    }
}

} // namespace cavlev
