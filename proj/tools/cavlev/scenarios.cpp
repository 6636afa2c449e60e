#include "scenarios.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cavlev/constants.hpp"
#include "cavlev/coupling.hpp"
#include "cavlev/errors.hpp"
#include "cavlev/mech.hpp"
#include "cavlev/mode_basis.hpp"
#include "cavlev/spectrum.hpp"
#include "cavlev/tm1d.hpp"
#include "cavlev/trap.hpp"

#include "svg_plot.hpp"

namespace cavlev::cli {

namespace {

constexpr const char* kVersion = "cavlev 0.1.0";

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::vector<double> linspace(double lo, double hi, int n)
{
    std::vector<double> g(static_cast<std::size_t>(std::max(2, n)));
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(g.size() - 1);
    return g;
}

CavityGeometry read_geometry(ConfigReader& reader)
{
    CavityGeometry g;
    g.length = reader.require_number("geometry", "length_m");
    g.roc1 = reader.number("geometry", "mirror_roc_m", 2.5e-2);
    g.roc2 = reader.number("geometry", "mirror_roc2_m", g.roc1);
    g.lambda_ref = reader.number("geometry", "wavelength_m", 1.55e-6);
    g.finesse = reader.number("geometry", "finesse", 0.0);
    return g;
}

DiscParams read_disc(ConfigReader& reader)
{
    DiscParams d;
    d.n_index = reader.number("disc", "refractive_index", 2.0);
    d.thickness = reader.require_number("disc", "thickness_m");
    d.radius = reader.number("disc", "radius_m", 5e-4);
    d.x0 = reader.number("disc", "x0_m", 0.0);
    d.theta_y = reader.number("disc", "theta_y_rad", 0.0);
    d.theta_z = reader.number("disc", "theta_z_rad", 0.0);
    return d;
}

VijOptions read_vij(ConfigReader& reader)
{
    VijOptions opts;
    const std::string path = reader.text("scan", "path", "analytic");
    if (path == "analytic")
        opts.path = VijPath::analytic;
    else if (path == "extended")
        opts.path = VijPath::extended;
    else
        reader.fail("[scan] path: expected 'analytic' or 'extended', got '" + path + "'");
    const std::string diffraction = reader.text("scan", "diffraction", "shared");
    if (diffraction == "shared")
        opts.diffraction = DiffractionModel::shared;
    else if (diffraction == "per_mode")
        opts.diffraction = DiffractionModel::per_mode;
    else
        reader.fail("[scan] diffraction: expected 'shared' or 'per_mode'");
    return opts;
}

ScanCoordinate read_coordinate(ConfigReader& reader, const std::string& section,
                               const std::string& fallback)
{
    const std::string name = reader.text(section, "coordinate", fallback);
    if (name == "x0")
        return ScanCoordinate::x0;
    if (name == "theta_y")
        return ScanCoordinate::theta_y;
    if (name == "theta_z")
        return ScanCoordinate::theta_z;
    reader.fail("[" + section + "] coordinate: expected x0 | theta_y | theta_z");
    return ScanCoordinate::x0;
}

bool report_errors(const ConfigReader& reader)
{
    if (reader.errors().empty())
        return false;
    std::cerr << "configuration errors:\n";
    for (const auto& e : reader.errors())
        std::cerr << "  - " << e << "\n";
    return true;
}

void write_manifest(const RunContext& ctx, const std::string& scenario,
                    const std::vector<std::pair<std::string, std::string>>& resolved)
{
    std::ofstream out(ctx.out_dir + "/manifest.txt");
    out << "version = " << kVersion << "\n";
    out << "scenario = " << scenario << "\n";
    for (const auto& [section, key, value] : ctx.config.entries())
        out << "config." << (section.empty() ? "" : section + ".") << key << " = " << value
            << "\n";
    for (const auto& [key, value] : resolved)
        out << "resolved." << key << " = " << value << "\n";
}

void plot_branches(const RunContext& ctx, const std::string& stem, const SpectrumBranch& scan,
                   double omega_ref, double coordinate_scale, const std::string& x_label)
{
    if (!ctx.plots)
        return;
    std::vector<PlotSeries> series;
    for (Eigen::Index b = 0; b < scan.branches(); ++b) {
        PlotSeries s;
        s.label = "branch " + std::to_string(b);
        for (Eigen::Index p = 0; p < scan.points(); ++p) {
            s.x.push_back(scan.grid[static_cast<std::size_t>(p)] * coordinate_scale);
            s.y.push_back((scan.omegas(b, p) - omega_ref) / (2.0 * kPi) * 1e-9);
        }
        series.push_back(std::move(s));
    }
    write_line_plot_svg(ctx.out_dir + "/" + stem + ".svg", stem, x_label, "detuning (GHz)",
                        series);
}

void write_branch_file(const RunContext& ctx, const std::string& stem,
                       const SpectrumBranch& scan, double omega_ref)
{
    std::ofstream out(ctx.out_dir + "/" + stem + ".csv");
    write_branch_csv(out, scan, omega_ref);
}

// Crossing location of the TEM00/TEM10 pair on the chosen axis, from the
// two-mode diagonal condition.
double crossing_coordinate(const CavityGeometry& geometry, const BeamParams& beam,
                           const DiscParams& disc, const ModeManifold& pair,
                           ScanCoordinate coordinate)
{
    const DiscDerived d = DiscDerived::from(geometry, beam, disc);
    const double delta0 = pair.omegas[0] - pair.omegas[1];
    const double omega = pair.omegas[0];
    const double tilt_envelope =
        std::exp(-0.5 * beam.k * beam.k * beam.sigma * beam.sigma *
                 (disc.theta_y * disc.theta_y + disc.theta_z * disc.theta_z));
    if (coordinate == ScanCoordinate::x0) {
        const double amp = 0.5 * omega * d.alpha * d.tau * tilt_envelope * (1.0 + d.beta);
        const double c = delta0 / amp;
        if (std::abs(c) > 1.0)
            throw NumericalError("crossing_coordinate: branches do not cross on x0");
        return std::acos(c) / (2.0 * beam.k);
    }
    // theta_y crossing at x0 = 0: envelope(theta_y) = delta0 / amp0.
    const double envelope_z = std::exp(-0.5 * std::pow(beam.k * beam.sigma * disc.theta_z, 2));
    const double amp0 = 0.5 * omega * d.alpha * d.tau * envelope_z * (1.0 + d.beta) *
                        std::cos(2.0 * beam.k * disc.x0);
    const double needed = delta0 / amp0;
    if (needed <= 0.0 || needed > 1.0)
        throw NumericalError("crossing_coordinate: branches do not cross on theta_y");
    return std::sqrt(-2.0 * std::log(needed)) / (beam.k * beam.sigma);
}

int run_fig3(const RunContext& ctx, ConfigReader& reader)
{
    const CavityGeometry geometry = read_geometry(reader);
    DiscParams disc = read_disc(reader);
    if (report_errors(reader))
        return kExitUserError;
    geometry.validate();

    const std::int64_t eta0 = eta_near_reference(geometry, 0, 0);
    const ModeIndex tem00{eta0, 0, 0};
    const ModeIndex tem10{eta0 - 1, 1, 0};
    const BeamParams beam = BeamParams::at_waist(geometry, tem00);
    const ModeManifold pair = ModeManifold::build(geometry, {tem00, tem10});
    const double omega_ref = pair.omegas[0];
    const double lambda = 2.0 * kPi / beam.k;

    ScanOptions opts;
    opts.threads = ctx.threads;
    opts.store_weights = true;

    // (a) displacement scan, aligned disc.
    const SpectrumBranch panel_a =
        scan_branch(geometry, beam, disc, pair, ScanCoordinate::x0,
                    linspace(-0.45 * lambda, 0.45 * lambda, 361), opts);
    write_branch_file(ctx, "fig3_a_x0", panel_a, omega_ref);
    plot_branches(ctx, "fig3_a_x0", panel_a, omega_ref, 1e9, "x0 (nm)");

    // (b) tilt scan about the tether axis.
    const SpectrumBranch panel_b =
        scan_branch(geometry, beam, disc, pair, ScanCoordinate::theta_y,
                    linspace(-10e-3, 10e-3, 361), opts);
    write_branch_file(ctx, "fig3_b_theta_y", panel_b, omega_ref);
    plot_branches(ctx, "fig3_b_theta_y", panel_b, omega_ref, 1e3, "theta_y (mrad)");

    // (c)/(d): refined crossings for a family of theta_z values plus the gap
    // summary table.
    const std::vector<double> theta_z_list =
        reader.number_list("scan", "theta_z_list_rad", {0.0, 1e-4, 2e-4, 3e-4});

    std::ofstream summary(ctx.out_dir + "/fig3_gap_vs_theta_z.csv");
    summary << "crossing,theta_z_rad,gap_rad_s,gamma_rad_s,g1_rad_s_per_unit,"
               "g2_rad_s_per_unit,g_plus,g_minus,curvature,location\n";

    for (const ScanCoordinate coordinate : {ScanCoordinate::x0, ScanCoordinate::theta_y}) {
        const std::string tag = coordinate == ScanCoordinate::x0 ? "c_x0" : "d_theta_y";
        const double center =
            crossing_coordinate(geometry, beam, disc, pair, coordinate);
        const double half_window = coordinate == ScanCoordinate::x0 ? 25e-9 : 0.5e-3;
        for (double theta_z : theta_z_list) {
            const DiscParams tilted = disc.with_theta_z(theta_z);
            const SpectrumBranch scan =
                scan_branch(geometry, beam, tilted, pair, coordinate,
                            linspace(center - half_window, center + half_window, 121), opts);
            std::ostringstream stem;
            stem << "fig3_" << tag << "_thz" << fmt(theta_z * 1e3) << "mrad";
            write_branch_file(ctx, stem.str(), scan, omega_ref);
            plot_branches(ctx, stem.str(), scan, omega_ref,
                          coordinate == ScanCoordinate::x0 ? 1e9 : 1e3,
                          coordinate == ScanCoordinate::x0 ? "x0 (nm)" : "theta_y (mrad)");

            const GapEvaluator eval = make_gap_evaluator(geometry, beam, tilted, pair,
                                                         coordinate, 0.0, 1e18, opts.vij);
            if (theta_z == 0.0) {
                // Exact crossing: refine the closed gap between grid points.
                double lo = center - half_window, hi = center + half_window;
                for (int iter = 0; iter < 80 && hi - lo > 1e-12 * center; ++iter) {
                    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
                    const auto g1 = eval(m1), g2 = eval(m2);
                    if (g1.second - g1.first < g2.second - g2.first)
                        hi = m2;
                    else
                        lo = m1;
                }
                const auto g = eval(0.5 * (lo + hi));
                const double gap_min = g.second - g.first;
                summary << tag << "," << fmt(theta_z) << "," << fmt(gap_min) << ","
                        << fmt(0.5 * gap_min) << ",0,0,0,0,0," << fmt(0.5 * (lo + hi)) << "\n";
                continue;
            }
            // The Gaussian tilt flank bends the underlying slopes within the
            // fit window; tolerate the resulting model mismatch.
            CrossingFitOptions fit;
            fit.residual_tol = 0.12;
            const CrossingReport report = characterize_crossing(scan, eval, fit);
            summary << tag << "," << fmt(theta_z) << "," << fmt(report.gap) << ","
                    << fmt(report.gamma) << "," << fmt(report.g1) << "," << fmt(report.g2)
                    << "," << fmt(report.g_plus) << "," << fmt(report.g_minus) << ","
                    << fmt(report.curvature) << "," << fmt(report.location) << "\n";
        }
    }

    write_manifest(ctx, "fig3",
                   {{"eta0", std::to_string(eta0)},
                    {"sigma_m", fmt(beam.sigma)},
                    {"k_per_m", fmt(beam.k)},
                    {"omega_ref_rad_s", fmt(omega_ref)}});
    std::cout << "fig3: wrote panels a, b and " << 2 * theta_z_list.size()
              << " crossing scans plus fig3_gap_vs_theta_z.csv into " << ctx.out_dir << "\n";
    return kExitOk;
}

int run_branch_scan(const RunContext& ctx, ConfigReader& reader)
{
    const CavityGeometry geometry = read_geometry(reader);
    const DiscParams disc = read_disc(reader);
    const ScanCoordinate coordinate = read_coordinate(reader, "scan", "x0");
    const double lo = reader.require_number("scan", "min");
    const double hi = reader.require_number("scan", "max");
    const int points = reader.integer("scan", "points", 201);
    const int half_width = reader.integer("manifold", "half_width", 0);
    ScanOptions opts;
    opts.vij = read_vij(reader);
    opts.threads = ctx.threads;
    if (report_errors(reader))
        return kExitUserError;
    geometry.validate();
    if (!(hi > lo)) {
        std::cerr << "configuration errors:\n  - [scan] min/max: need max > min\n";
        return kExitUserError;
    }

    const std::int64_t eta0 = eta_near_reference(geometry, 0, 0);
    std::vector<ManifoldFamily> families;
    std::istringstream fam_in(reader.text("manifold", "families", "00,10"));
    std::string fam;
    while (std::getline(fam_in, fam, ',')) {
        if (fam.size() != 2 || !isdigit(fam[0]) || !isdigit(fam[1])) {
            std::cerr << "configuration errors:\n  - [manifold] families: expected "
                         "comma-separated two-digit mu-nu pairs like 00,10\n";
            return kExitUserError;
        }
        const int mu = fam[0] - '0';
        const int nu = fam[1] - '0';
        // Nearly degenerate anchoring: each transverse quantum moves the
        // family one FSR down.
        families.push_back(ManifoldFamily{mu, nu, eta0 - mu - nu});
    }

    const ModeIndex reference{eta0, 0, 0};
    const BeamParams beam = BeamParams::at_waist(geometry, reference);
    const ModeManifold manifold = make_manifold(geometry, families, half_width);
    opts.store_weights = manifold.size() <= 16;
    const double omega_ref = unperturbed_frequency(geometry, reference);

    const SpectrumBranch scan =
        scan_branch(geometry, beam, disc, manifold, coordinate, linspace(lo, hi, points), opts);
    const std::string stem = reader.text("output", "prefix", "scan");
    write_branch_file(ctx, stem, scan, omega_ref);
    plot_branches(ctx, stem, scan, omega_ref, 1.0, scan_coordinate_name(coordinate));
    write_manifest(ctx, "branch",
                   {{"eta0", std::to_string(eta0)},
                    {"modes", std::to_string(manifold.size())},
                    {"omega_ref_rad_s", fmt(omega_ref)}});
    std::cout << "branch scan: " << manifold.size() << " modes, " << points << " points -> "
              << ctx.out_dir << "/" << stem << ".csv\n";
    return kExitOk;
}

} // namespace

int run_scan(const RunContext& ctx)
{
    ConfigReader reader(ctx.config);
    const std::string scenario = reader.text("", "scenario", "branch");
    if (scenario == "fig3")
        return run_fig3(ctx, reader);
    if (scenario == "branch")
        return run_branch_scan(ctx, reader);
    std::cerr << "unknown scenario '" << scenario << "'; known scenarios: branch, fig3\n";
    return kExitUserError;
}

int run_report(const RunContext& ctx)
{
    ConfigReader reader(ctx.config);
    const CavityGeometry geometry = read_geometry(reader);
    const DiscParams disc = read_disc(reader);
    const double power = reader.require_number("trap", "power_w");
    const double density = reader.number("disc", "density_kg_m3", 2330.0);
    const double omega_mat = reader.number("trap", "omega_mat_rad_s", 2.0 * kPi * 10.0);
    const double q_mat = reader.number("trap", "q_mat", 1e5);
    double gamma = reader.number("trap", "gamma_rad_s", 0.0);
    if (report_errors(reader))
        return kExitUserError;
    geometry.validate();
    if (gamma <= 0.0 && geometry.finesse > 0.0)
        gamma = 0.5 * geometry.kappa(); // finesse-limited gap
    if (gamma <= 0.0) {
        std::cerr << "configuration errors:\n  - [trap] gamma_rad_s: required (or set "
                     "[geometry] finesse)\n";
        return kExitUserError;
    }

    const ModeIndex reference{eta_near_reference(geometry, 0, 0), 0, 0};
    const BeamParams beam = BeamParams::at_waist(geometry, reference);
    const OscillatorParams osc =
        OscillatorParams::disc(density, disc.radius, disc.thickness, omega_mat, q_mat);
    const TrapReport report = make_trap_report(power, geometry, beam, disc, osc, gamma);

    write_trap_report(std::cout, report);
    std::filesystem::create_directories(ctx.out_dir);
    std::ofstream out(ctx.out_dir + "/trap_report.txt");
    write_trap_report(out, report);
    std::ofstream csv(ctx.out_dir + "/trap_report.csv");
    write_trap_csv_row(csv, report, true);
    write_manifest(ctx, "report", {{"gamma_rad_s", fmt(gamma)}, {"mass_kg", fmt(osc.mass)}});
    return kExitOk;
}

int run_quartic(const RunContext& ctx)
{
    ConfigReader reader(ctx.config);
    const CavityGeometry geometry = read_geometry(reader);
    const DiscParams disc = read_disc(reader);
    const ScanCoordinate coordinate = read_coordinate(reader, "quartic", "x0");
    std::vector<double> theta_z_grid =
        reader.number_list("quartic", "theta_z_grid_rad", {1e-3, 2e-3, 3e-3, 4e-3, 5e-3, 6e-3});
    QuarticScanOptions opts;
    opts.points = reader.integer("quartic", "points", 41);
    if (report_errors(reader))
        return kExitUserError;
    geometry.validate();

    const std::int64_t eta0 = eta_near_reference(geometry, 0, 0);
    const ModeIndex tem00{eta0, 0, 0};
    const ModeIndex tem10{eta0 - 1, 1, 0};
    const BeamParams beam = BeamParams::at_waist(geometry, tem00);
    const ModeManifold pair = ModeManifold::build(geometry, {tem00, tem10});

    const QuarticScanResult result =
        quartic_scan(geometry, beam, disc, pair, theta_z_grid, coordinate, opts);

    std::filesystem::create_directories(ctx.out_dir);
    std::ofstream csv(ctx.out_dir + "/quartic_classification.csv");
    csv << "theta_z_rad,c2_rad_s_per_unit2,c4_rad_s_per_unit4,shape\n";
    std::cout << "theta_z (mrad)  c2              shape\n";
    for (const auto& cls : result.classifications) {
        const char* shape = cls.shape == PotentialShape::double_well ? "double_well"
                            : cls.shape == PotentialShape::quartic   ? "quartic"
                                                                     : "quadratic";
        csv << fmt(cls.theta_z) << "," << fmt(cls.c2) << "," << fmt(cls.c4) << "," << shape
            << "\n";
        std::printf("%-15.4g %-15.6g %s\n", cls.theta_z * 1e3, cls.c2, shape);
    }
    if (result.quartic_point) {
        csv << fmt(*result.quartic_point) << ",0,0,quartic_point\n";
        std::cout << "purely quartic coupling near theta_z = " << *result.quartic_point * 1e3
                  << " mrad\n";
    } else {
        std::cout << "no quartic point bracketed by the theta_z grid\n";
    }
    write_manifest(ctx, "quartic", {{"eta0", std::to_string(eta0)}});
    return kExitOk;
}

int run_mech_sweep(const RunContext& ctx)
{
    ConfigReader reader(ctx.config);
    MechGeometry geometry = MechGeometry::tethered_silicon_disc();
    geometry.thickness = reader.number("mech", "thickness_m", geometry.thickness);
    geometry.disc_radius = reader.number("mech", "disc_radius_m", geometry.disc_radius);
    geometry.tether_length = reader.number("mech", "tether_length_m", geometry.tether_length);
    geometry.tether_width = reader.number("mech", "tether_width_m", geometry.tether_width);
    geometry.material.density = reader.number("mech", "density_kg_m3", geometry.material.density);
    geometry.material.youngs_modulus =
        reader.number("mech", "youngs_modulus_pa", geometry.material.youngs_modulus);
    geometry.material.poisson = reader.number("mech", "poisson", geometry.material.poisson);
    const int resolution = reader.integer("mech", "mesh_resolution", 12);
    const std::vector<double> sigma_over_r =
        reader.number_list("mech", "sigma_over_r", {1.0});
    const double f_lo = reader.number("mech", "strength_min_hz", 2e4);
    const double f_hi = reader.number("mech", "strength_max_hz", 2e7);
    const int n_strength = reader.integer("mech", "strength_points", 60);
    MechSweepOptions opts;
    opts.n_basis = reader.integer("mech", "n_basis", 180);
    opts.n_track = reader.integer("mech", "n_track", 12);
    if (report_errors(reader))
        return kExitUserError;
    geometry.validate();

    std::filesystem::create_directories(ctx.out_dir);
    const MechModel model = build_model(geometry, resolution);
    for (double ratio : sigma_over_r) {
        const double sigma = ratio * geometry.disc_radius;
        std::vector<double> strengths;
        for (int i = 0; i < n_strength; ++i) {
            const double f = f_lo * std::pow(f_hi / f_lo, static_cast<double>(i) / (n_strength - 1));
            strengths.push_back(strength_for_normalized(model, sigma, 2.0 * kPi * f));
        }
        const MechSweep sweep = modal_sweep(model, sigma, strengths, opts);
        std::ostringstream stem;
        stem << "mech_sweep_sor" << fmt(ratio);
        std::ofstream csv(ctx.out_dir + "/" + stem.str() + ".csv");
        write_mech_csv(csv, sweep);

        if (ctx.plots) {
            std::vector<PlotSeries> freq_series(static_cast<std::size_t>(opts.n_track));
            std::vector<PlotSeries> enh_series(static_cast<std::size_t>(opts.n_track));
            for (std::size_t is = 0; is < sweep.modes.size(); ++is) {
                for (const auto& mode : sweep.modes[is]) {
                    auto& fs = freq_series[static_cast<std::size_t>(mode.track_id)];
                    auto& es = enh_series[static_cast<std::size_t>(mode.track_id)];
                    fs.label = es.label = symmetry_name(mode.symmetry) + std::to_string(mode.track_id);
                    fs.x.push_back(sweep.strength_norm[is] / (2.0 * kPi));
                    fs.y.push_back(mode.omega / (2.0 * kPi));
                    es.x.push_back(sweep.strength_norm[is] / (2.0 * kPi));
                    es.y.push_back(std::log10(std::max(1e-3, mode.u_opt_over_u_mat)));
                }
            }
            write_line_plot_svg(ctx.out_dir + "/" + stem.str() + "_freq.svg", stem.str(),
                                "trap strength (Hz, rigid-disc)", "frequency (Hz)", freq_series);
            write_line_plot_svg(ctx.out_dir + "/" + stem.str() + "_enh.svg", stem.str(),
                                "trap strength (Hz, rigid-disc)", "log10 Uopt/Umat", enh_series);
        }
        std::cout << "mech sweep sigma/r = " << ratio << ": " << n_strength << " strengths -> "
                  << ctx.out_dir << "/" << stem.str() << ".csv\n";
    }
    write_manifest(ctx, "mech-sweep", {{"mesh_resolution", std::to_string(resolution)},
                                       {"n_free", std::to_string(model.n_free)}});
    return kExitOk;
}

int run_tm1d_map(const RunContext& ctx)
{
    ConfigReader reader(ctx.config);
    const CavityGeometry geometry = read_geometry(reader);
    const DiscParams disc = read_disc(reader);
    const double mirror_t = reader.number("tm1d", "mirror_transmission", 0.3);
    const int x0_points = reader.integer("tm1d", "x0_points", 161);
    const int omega_points = reader.integer("tm1d", "omega_points", 241);
    const double span = reader.number("tm1d", "omega_span_fsr", 1.2);
    std::vector<double> half_widths_raw =
        reader.number_list("tm1d", "pt_half_widths", {0.0, 2.0, 100.0});
    if (report_errors(reader))
        return kExitUserError;
    geometry.validate();

    SlabStack stack;
    stack.length = geometry.length;
    stack.mirror_left.amplitude_t = mirror_t;
    stack.mirror_right.amplitude_t = mirror_t;
    stack.slabs.push_back(Slab1D{disc.n_index, disc.thickness, 0.0});
    stack.validate();

    const std::int64_t eta0 = eta_near_reference(geometry, 0, 0);
    const ModeIndex tem00{eta0, 0, 0};
    const BeamParams beam = BeamParams::at_waist(geometry, tem00);
    const double omega_ref = unperturbed_frequency(geometry, tem00);
    const double lambda = 2.0 * kPi / beam.k;
    const double fsr = stack.fsr();
    const std::vector<double> x0_grid = linspace(0.0, 0.5 * lambda, x0_points);

    std::filesystem::create_directories(ctx.out_dir);
    {
        std::ofstream map_csv(ctx.out_dir + "/tm1d_map.csv");
        write_transmission_map_csv(map_csv, stack, 0, x0_grid,
                                   linspace(omega_ref - 0.5 * span * fsr,
                                            omega_ref + 0.5 * span * fsr, omega_points),
                                   omega_ref);
    }
    {
        const std::vector<double> shifts = resonance_shift(stack, 0, x0_grid, omega_ref, 0);
        std::ofstream res_csv(ctx.out_dir + "/tm1d_resonance.csv");
        res_csv << "x0_m,omega_rad_s,detuning_Hz\n";
        for (std::size_t i = 0; i < x0_grid.size(); ++i)
            res_csv << fmt(x0_grid[i]) << "," << fmt(shifts[i]) << ","
                    << fmt((shifts[i] - omega_ref) / (2.0 * kPi)) << "\n";
        if (ctx.plots) {
            PlotSeries s;
            s.label = "tm1d resonance";
            for (std::size_t i = 0; i < x0_grid.size(); ++i) {
                s.x.push_back(x0_grid[i] * 1e9);
                s.y.push_back((shifts[i] - omega_ref) / (2.0 * kPi) * 1e-9);
            }
            write_line_plot_svg(ctx.out_dir + "/tm1d_resonance.svg", "tm1d_resonance",
                                "x0 (nm)", "detuning (GHz)", {s});
        }
    }

    // Perturbation-theory overlays with increasing longitudinal manifolds.
    std::vector<int> half_widths;
    for (double hw : half_widths_raw)
        half_widths.push_back(static_cast<int>(hw));
    ScanOptions opts;
    opts.threads = ctx.threads;
    opts.track = false;
    opts.vij.path = VijPath::extended;
    opts.vij.diffraction = DiffractionModel::per_mode;
    const ConvergenceResult conv = multimode_convergence(
        geometry, beam, disc, {ManifoldFamily{0, 0, eta0}}, half_widths, ScanCoordinate::x0,
        x0_grid, omega_ref - 0.6 * fsr, omega_ref + 0.6 * fsr, opts);
    for (std::size_t i = 0; i < conv.scans.size(); ++i) {
        std::ostringstream stem;
        stem << "tm1d_pt_hw" << half_widths[i];
        write_branch_file(ctx, stem.str(), conv.scans[i], omega_ref);
    }
    std::ofstream conv_csv(ctx.out_dir + "/tm1d_pt_convergence.csv");
    conv_csv << "half_width_from,half_width_to,max_shift_rad_s,max_shift_fsr\n";
    for (std::size_t i = 0; i + 1 < conv.scans.size(); ++i)
        conv_csv << half_widths[i] << "," << half_widths[i + 1] << "," << fmt(conv.max_shift[i])
                 << "," << fmt(conv.max_shift[i] / fsr) << "\n";

    write_manifest(ctx, "tm1d-map", {{"eta0", std::to_string(eta0)},
                                     {"omega_ref_rad_s", fmt(omega_ref)},
                                     {"fsr_rad_s", fmt(fsr)}});
    std::cout << "tm1d map: " << x0_points << " x " << omega_points << " grid plus "
              << conv.scans.size() << " perturbation-theory overlays -> " << ctx.out_dir << "\n";
    return kExitOk;
}

} // namespace cavlev::cli
