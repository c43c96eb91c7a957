// SPDX-License-Identifier: Apache-2.0
//
// Command line front end. `simcli run` executes a Monte Carlo BER sweep and
// writes a CSV; `simcli cond-stats` reports channel condition-number
// statistics. Exit codes: 0 success, 2 configuration error, 3 runtime or
// numerical error.

#include <chrono>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gmudprec/channel.hpp"
#include "gmudprec/sim.hpp"

namespace {

using gmudprec::sim::SimConfig;

struct RunFlags {
    std::string config_path;
    double snr_min = 0, snr_max = 0, snr_step = 0;
    int users = 0, paths = 0, trials = 0, blocks = 0, workers = 0;
    std::uint64_t seed = 0;
    std::string mod, precoder, mode, objective, out;
};

int run_command(const CLI::App& cmd, const RunFlags& f) {
    SimConfig cfg;
    if (cmd.count("--config") > 0) cfg = gmudprec::sim::parse_config_file(f.config_path);

    if (cmd.count("--snr-min") > 0) cfg.snr_db_min = f.snr_min;
    if (cmd.count("--snr-max") > 0) cfg.snr_db_max = f.snr_max;
    if (cmd.count("--snr-step") > 0) cfg.snr_db_step = f.snr_step;
    if (cmd.count("--users") > 0) cfg.users = f.users;
    if (cmd.count("--paths") > 0) cfg.paths = f.paths;
    if (cmd.count("--mod") > 0) cfg.modulation = gmudprec::sim::parse_modulation(f.mod);
    if (cmd.count("--precoder") > 0) cfg.precoder = gmudprec::sim::parse_precoder(f.precoder);
    if (cmd.count("--mode") > 0) cfg.mode = gmudprec::sim::parse_mode(f.mode);
    if (cmd.count("--trials") > 0) cfg.trials = f.trials;
    if (cmd.count("--blocks") > 0) cfg.blocks_per_trial = f.blocks;
    if (cmd.count("--seed") > 0) cfg.seed = f.seed;
    if (cmd.count("--objective") > 0) cfg.objective = gmudprec::sim::parse_objective(f.objective);
    if (cmd.count("--out") > 0) cfg.out_path = f.out;
    if (cmd.count("--workers") > 0) cfg.workers = f.workers;

    gmudprec::sim::validate(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    const auto points = gmudprec::sim::run_sweep(cfg);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    gmudprec::sim::write_csv(points, cfg, cfg.out_path);
    gmudprec::sim::emit_summary(points, cfg, elapsed, std::cout);
    std::cout << "csv=" << cfg.out_path << "\n";
    return 0;
}

int cond_stats_command(const std::string& mode, int trials, std::uint64_t seed, int paths,
                       int users) {
    gmudprec::channel::ChannelEnsembleSpec spec;
    spec.seed = seed;
    spec.users = users;
    if (gmudprec::sim::parse_mode(mode) == gmudprec::sim::ChannelMode::siso_multipath) {
        spec.kind = gmudprec::channel::EnsembleKind::siso_multipath;
        spec.paths = paths;
    } else {
        spec.kind = gmudprec::channel::EnsembleKind::mimo_flat;
        spec.n_tx = 2;
        spec.n_rx = 2;
    }
    const auto st = gmudprec::channel::condition_stats(spec, trials);
    std::cout << "mode=" << mode << " trials=" << trials << " median=" << st.median
              << " mean=" << st.mean << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GMUD multi-user precoding link-level simulator"};
    app.require_subcommand(1);

    RunFlags f;
    CLI::App* run = app.add_subcommand("run", "Run a Monte Carlo BER sweep and write CSV");
    run->add_option("--config", f.config_path, "key=value config file");
    run->add_option("--snr-min", f.snr_min, "lowest SNR point in dB");
    run->add_option("--snr-max", f.snr_max, "highest SNR point in dB");
    run->add_option("--snr-step", f.snr_step, "SNR step in dB");
    run->add_option("--users", f.users, "number of users K");
    run->add_option("--paths", f.paths, "multipath taps M (siso mode)");
    run->add_option("--mod", f.mod, "modulation: qpsk|qam16");
    run->add_option("--precoder", f.precoder, "precoder: gmud|svd");
    run->add_option("--mode", f.mode, "channel mode: siso-multipath|mimo-flat");
    run->add_option("--trials", f.trials, "channel realizations per SNR point");
    run->add_option("--blocks", f.blocks, "blocks per trial");
    run->add_option("--seed", f.seed, "64-bit RNG seed");
    run->add_option("--objective", f.objective,
                    "optimizer objective: sum-inv-sinr|max-min-sinr|sum-sinr");
    run->add_option("--out", f.out, "output CSV path");
    run->add_option("--workers", f.workers, "worker thread count");

    std::string cs_mode = "siso-multipath";
    int cs_trials = 10000, cs_paths = 2, cs_users = 2;
    std::uint64_t cs_seed = 1;
    CLI::App* cond = app.add_subcommand("cond-stats", "Channel condition-number statistics");
    cond->add_option("--mode", cs_mode, "channel mode: siso-multipath|mimo-flat");
    cond->add_option("--trials", cs_trials, "number of channel draws");
    cond->add_option("--seed", cs_seed, "64-bit RNG seed");
    cond->add_option("--paths", cs_paths, "multipath taps M (siso mode)");
    cond->add_option("--users", cs_users, "number of users in the ensemble spec");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return run_command(*run, f);
        return cond_stats_command(cs_mode, cs_trials, cs_seed, cs_paths, cs_users);
    } catch (const gmudprec::sim::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
