// cli.hpp — command-line surface. Subcommands:
//
//   simulate       transmission map + polariton branches -> CSV pair
//   fit            fit a measured CSV map, write report + best-fit map
//   derive         print derived scalar quantities as key=value lines
//   sweep-damping  one map per damping multiplier for a named magnon
//   check          validate the configured system and regime assumptions
//
// Exit codes: 0 success, 1 domain error, 2 usage error. All file outputs are
// byte-deterministic for a given config; wall-clock timestamps only ever go
// to the run.log sidecar.

#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "magnonics/derived.hpp"
#include "magnonics/fitting.hpp"
#include "magnonics/io.hpp"
#include "magnonics/spectrum.hpp"
#include "magnonics/transmission.hpp"

namespace magnonics {

namespace cli_detail {

inline void write_run_log(const std::filesystem::path& dir, const std::string& command) {
    std::ofstream log(dir / "run.log", std::ios::app);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[64];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    log << stamp << " " << command << '\n';
}

inline std::string multiplier_tag(double m) {
    std::string tag = detail::fmt("%g", m);
    return tag;
}

inline void print_kv(std::ostream& out, const std::string& key, double value, const char* spec = "%.9g") {
    out << key << "=" << detail::fmt(spec, value) << '\n';
}

struct DeriveSummary {
    double n_spins = 0.0;
    bool has_spins = false;
};

/// Shared by `derive` and `check`: computes everything and prints; returns
/// summary bits the caller needs for pass/fail logic.
inline DeriveSummary run_derive(const RunConfig& cfg, std::ostream& out) {
    const auto& cav = cfg.system.cavity;
    out << "cavity=" << cav.label << '\n';
    print_kv(out, "omega_c_hz", cav.omega_c, "%.17g");
    print_kv(out, "kappa_tot_hz", cav.kappa_tot(), "%.17g");

    for (const auto& m : cfg.system.magnons) {
        print_kv(out, "C_" + m.label, cooperativity(m.g_tilde, cav.kappa_tot(), m.gamma_m), "%.1f");
    }

    const double g_single = single_spin_coupling(cfg.derived.eta, cav.omega_c, cfg.derived.mode_volume_m3,
                                                 cfg.constants);
    print_kv(out, "g_single_hz", g_single);

    DeriveSummary summary;
    if (!cfg.system.magnons.empty()) {
        const auto& first = cfg.system.magnons.front();
        summary.n_spins = spin_count(first.g_tilde, g_single, cfg.constants.spin_per_ion);
        summary.has_spins = true;
        print_kv(out, "n_spins", summary.n_spins);
    }

    print_kv(out, "n_thermal", thermal_photon_number(cav.omega_c, cfg.environment.temperature_k, cfg.constants));
    const double power_w = dbm_to_watts(cfg.environment.input_power_dbm);
    print_kv(out, "n_drive", drive_photon_number(power_w, cav.omega_c, cav, 0.0, cfg.constants));

    const auto regime = magnetostatic_regime_check(cav.omega_c, cfg.material.relative_permittivity,
                                                   cfg.material.k_ms, cfg.constants,
                                                   cfg.material.regime_ratio_threshold);
    print_kv(out, "k0_rad_per_m", regime.k0);
    print_kv(out, "exchange_cutoff_rad_per_m", regime.exchange_cutoff);
    print_kv(out, "ms_lower_ratio", regime.lower_ratio);
    print_kv(out, "ms_upper_ratio", regime.upper_ratio);
    out << "regime_ok=" << (regime.ok() ? "true" : "false") << '\n';

    if (summary.has_spins) {
        const double total_spin = cfg.constants.spin_per_ion * summary.n_spins;
        const double ratio = low_excitation_ratio(cfg.derived.mean_magnon_number, total_spin);
        print_kv(out, "low_excitation_ratio", ratio);
        out << "low_excitation_ok=" << (ratio < cfg.material.low_excitation_threshold ? "true" : "false") << '\n';
    }
    return summary;
}

} // namespace cli_detail

inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"cavity-magnon polariton transmission: simulate, fit, derive"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_dir = ".", sweep_target = "MS";
    std::vector<double> multipliers_cli;
    bool dump_config = false, guess_from_config = false;
    std::uint64_t seed_cli = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_flag("--dump-config", dump_config, "echo the parsed config as canonical JSON and exit");
        if (with_out) {
            sub->add_option("--out", out_dir, "output directory")->envname("MAGNONICS_OUT");
        }
    };

    auto* sim = app.add_subcommand("simulate", "transmission map + polariton branches");
    add_common(sim, true);

    auto* fit = app.add_subcommand("fit", "fit a measured spectrum map");
    add_common(fit, true);
    fit->add_option("--data", data_path, "spectrum CSV to fit")->required();
    fit->add_flag("--guess-from-config", guess_from_config,
                  "seed the fit from the configured system instead of the automatic peak-based guess");
    auto* seed_opt = fit->add_option("--seed", seed_cli, "override fit.seed from the config");

    auto* derive = app.add_subcommand("derive", "print derived quantities as key=value lines");
    add_common(derive, false);

    auto* sweep = app.add_subcommand("sweep-damping", "one map per damping multiplier");
    add_common(sweep, true);
    sweep->add_option("--multipliers", multipliers_cli, "damping multipliers (default from config)")
        ->delimiter(',');
    sweep->add_option("--target", sweep_target, "label of the magnon whose damping is scaled");

    auto* check = app.add_subcommand("check", "validate system and regime assumptions; exit 0 iff all pass");
    add_common(check, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunConfig cfg = load_run_config(config_path);
        if (dump_config) {
            std::cout << dump_run_config(cfg);
            return 0;
        }
        if (seed_opt->count() > 0) seed_given = true;
        if (seed_given) cfg.fit.seed = seed_cli;
        if (out_dir == ".") out_dir = cfg.output.directory;

        const std::filesystem::path dir(out_dir);

        if (sim->parsed()) {
            std::filesystem::create_directories(dir);
            const SpectrumMap map = spectrum_map(cfg.system, cfg.grid);
            save_spectrum_csv(map, (dir / "spectrum.csv").string(),
                              cfg.output.complex_columns ? std::optional<bool>(true) : std::nullopt);
            const BranchDiagram diagram = polariton_branches(cfg.system, cfg.grid.field_values);
            save_branch_csv(diagram, (dir / "branches.csv").string());
            cli_detail::write_run_log(dir, "simulate --config " + config_path);
            std::cout << "wrote " << (dir / "spectrum.csv").string() << " and " << (dir / "branches.csv").string()
                      << '\n';
            return 0;
        }

        if (fit->parsed()) {
            std::filesystem::create_directories(dir);
            const SpectrumMap data = load_spectrum_csv(data_path);
            HybridSystem guess;
            if (guess_from_config) {
                guess = cfg.system;
            } else {
                const auto seeded = initial_guess(data, static_cast<int>(cfg.system.magnons.size()));
                for (const auto& w : seeded.warnings) std::cerr << "warning: " << w << '\n';
                guess = seeded.system;
                // keep the configured labels when counts agree, so that the
                // config's free-parameter names resolve against the guess
                if (guess.magnons.size() == cfg.system.magnons.size()) {
                    for (std::size_t k = 0; k < guess.magnons.size(); ++k) {
                        guess.magnons[k].label = cfg.system.magnons[k].label;
                    }
                }
            }
            const FitReport report = fit_hybrid(data, cfg.fit, guess);
            std::ofstream rep(dir / "fit_report.txt");
            rep << format_fit_report(report);
            SpectrumMap model = spectrum_map(report.fitted, data.grid);
            const double gain = from_db(report.db_offset);
            for (auto& v : model.values) v *= gain;
            model.metadata["source"] = "fit";
            save_spectrum_csv(model, (dir / "fit_spectrum.csv").string());
            cli_detail::write_run_log(dir, "fit --config " + config_path + " --data " + data_path);
            std::cout << format_fit_report(report);
            return 0;
        }

        if (derive->parsed()) {
            cli_detail::run_derive(cfg, std::cout);
            return 0;
        }

        if (sweep->parsed()) {
            std::filesystem::create_directories(dir);
            const std::vector<double>& mults = multipliers_cli.empty() ? cfg.multipliers : multipliers_cli;
            const auto maps = damping_sweep(cfg.system, sweep_target, mults, cfg.grid);
            for (std::size_t k = 0; k < maps.size(); ++k) {
                const std::string fname = "sweep_x" + cli_detail::multiplier_tag(mults[k]) + ".csv";
                save_spectrum_csv(maps[k], (dir / fname).string(),
                                  cfg.output.complex_columns ? std::optional<bool>(true) : std::nullopt);
                std::cout << "wrote " << (dir / fname).string() << '\n';
            }
            cli_detail::write_run_log(dir, "sweep-damping --config " + config_path);
            return 0;
        }

        if (check->parsed()) {
            bool all_ok = true;
            const auto violations = validate_system(cfg.system);
            if (violations.empty()) {
                std::cout << "system=ok\n";
            } else {
                all_ok = false;
                for (const auto& v : violations) std::cout << "violation: " << v << '\n';
            }
            std::ostringstream sink;
            const auto summary = cli_detail::run_derive(cfg, sink);
            const auto regime = magnetostatic_regime_check(cfg.system.cavity.omega_c,
                                                           cfg.material.relative_permittivity, cfg.material.k_ms,
                                                           cfg.constants, cfg.material.regime_ratio_threshold);
            std::cout << "regime=" << (regime.ok() ? "ok" : "fail") << '\n';
            if (!regime.ok()) all_ok = false;
            if (summary.has_spins) {
                const double ratio = low_excitation_ratio(cfg.derived.mean_magnon_number,
                                                          cfg.constants.spin_per_ion * summary.n_spins);
                const bool ok = ratio < cfg.material.low_excitation_threshold;
                std::cout << "low_excitation=" << (ok ? "ok" : "fail") << '\n';
                if (!ok) all_ok = false;
            }
            return all_ok ? 0 : 1;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace magnonics
