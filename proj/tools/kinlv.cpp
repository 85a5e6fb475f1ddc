// Experiment runner: reproduces the model's standard experiments from
// key=value config files and writes CSV outputs plus a run manifest.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "kinlv/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"kinetic predator-prey experiment runner"};
    app.require_subcommand(1);
    app.fallthrough(true);  // global flags may follow the subcommand

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1234;
    int threads = 1;
    std::string preset = "fig1";

    app.add_option("--config", config_path, "key=value config file (defaults: Table 1)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "RNG seed for particle runs");
    app.add_option("--threads", threads, "worker threads for the particle step")
        ->check(CLI::Range(1, 256));

    auto* cmd_moments = app.add_subcommand("moments", "mean/variance ODE trajectories");
    auto* cmd_mc = app.add_subcommand("mc", "Boltzmann Monte Carlo particle run");
    auto* cmd_fp = app.add_subcommand("fp", "Fokker-Planck grid run");
    auto* cmd_eq = app.add_subcommand("equilibria", "fixed points and Gamma densities");
    auto* cmd_fig = app.add_subcommand("figures", "figure reproduction presets");
    cmd_fig->add_option("--preset", preset, "fig1, fig2, fig3, fig4 or fig5");

    CLI11_PARSE(app, argc, argv);

    try {
        kinlv::runner::ExperimentConfig cfg;
        if (!config_path.empty()) {
            cfg = kinlv::runner::ExperimentConfig::load(config_path);
        }
        const std::filesystem::path out(out_dir);
        if (cmd_moments->parsed()) {
            kinlv::runner::run_moments(cfg, out, seed);
        } else if (cmd_mc->parsed()) {
            kinlv::runner::run_mc_experiment(cfg, out, seed, threads);
        } else if (cmd_fp->parsed()) {
            kinlv::runner::run_fp_experiment(cfg, out, seed);
        } else if (cmd_eq->parsed()) {
            kinlv::runner::run_equilibria(cfg, out, seed);
        } else if (cmd_fig->parsed()) {
            kinlv::runner::run_figures(cfg, out, preset, seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
