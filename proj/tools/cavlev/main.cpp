#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cavlev/errors.hpp"

#include "config.hpp"
#include "scenarios.hpp"

namespace {

using cavlev::cli::Config;
using cavlev::cli::RunContext;

int dispatch(const std::string& command, const std::string& config_path,
             const std::string& out_dir, unsigned threads, bool no_plots)
{
    RunContext ctx;
    ctx.config = Config::parse_file(config_path);
    ctx.out_dir = out_dir;
    ctx.threads = threads;
    ctx.plots = !no_plots;
    std::filesystem::create_directories(ctx.out_dir);

    if (command == "scan")
        return cavlev::cli::run_scan(ctx);
    if (command == "report")
        return cavlev::cli::run_report(ctx);
    if (command == "quartic")
        return cavlev::cli::run_quartic(ctx);
    if (command == "mech-sweep")
        return cavlev::cli::run_mech_sweep(ctx);
    if (command == "tm1d-map")
        return cavlev::cli::run_tm1d_map(ctx);
    std::cerr << "unknown subcommand: " << command << "\n";
    return cavlev::cli::kExitUserError;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cavity levitation of a dielectric disc: spectra, traps, and "
                 "reduced-order mechanics"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    unsigned threads = 0;
    bool no_plots = false;

    for (const char* name : {"scan", "report", "quartic", "mech-sweep", "tm1d-map"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "scenario configuration file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "worker threads (0 = all cores)");
        sub->add_flag("--no-plots", no_plots, "skip SVG plot emission");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return dispatch(app.get_subcommands().front()->get_name(), config_path, out_dir,
                        threads, no_plots);
    } catch (const cavlev::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return cavlev::cli::kExitNumerical;
    } catch (const cavlev::DomainError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return cavlev::cli::kExitUserError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cavlev::cli::kExitUserError;
    }
}
