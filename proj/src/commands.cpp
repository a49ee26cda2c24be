#include "drivenmem/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "drivenmem/csv.hpp"
#include "drivenmem/ensemble_io.hpp"
#include "drivenmem/manifest.hpp"
#include "drivenmem/parallel.hpp"

namespace drivenmem {

namespace {

namespace fs = std::filesystem;

constexpr std::size_t kMonteCarloSamples = 100000;

std::string tag(double omega) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "O%g", omega);
    return buf;
}

struct Run {
    ScenarioConfig cfg;
    std::string out;
    RunManifest manifest;
    std::ostream& log;

    std::string path(const std::string& name) const { return (fs::path(out) / name).string(); }
    void done(const std::string& name) { manifest.add_output(out, name); }
};

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

double density_value(const SpectralDensity& den, double w) {
    if (const auto* d = std::get_if<DressedDensity>(&den)) {
        if (w < d->drive().b_min()) return 0.0;
    }
    return density_pdf(den, w);
}

// Histogram of Monte-Carlo samples on the same grid (cell centred on each node).
std::vector<double> sampled_density(const SpectralDensity& den, const std::vector<double>& grid, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double h = grid[1] - grid[0];
    const double lo = grid.front() - 0.5 * h;
    std::vector<double> counts(grid.size(), 0.0);
    for (std::size_t i = 0; i < kMonteCarloSamples; ++i) {
        const double w = std::visit([&](const auto& d) { return d.sample(rng); }, den);
        const double cell = std::floor((w - lo) / h);
        if (cell >= 0.0 && cell < static_cast<double>(grid.size())) counts[static_cast<std::size_t>(cell)] += 1.0;
    }
    for (double& c : counts) c /= static_cast<double>(kMonteCarloSamples) * h;
    return counts;
}

void write_density(Run& run, const SpectralDensity& den, const std::string& stem) {
    const auto grid = linspace(run.cfg.density_lo, run.cfg.density_hi, run.cfg.density_points);
    std::vector<double> p(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) p[i] = density_value(den, grid[i]);
    write_columns_csv(run.path(stem + ".csv"), "omega", "pdf", grid, p);
    run.done(stem + ".csv");
    write_columns_csv(run.path(stem + "_mc.csv"), "omega", "pdf", grid, sampled_density(den, grid, run.manifest.seed));
    run.done(stem + "_mc.csv");
}

// Ensemble on the absolute frequency axis, as used by the memory scenario.
Ensemble absolute_ensemble(const MemoryScenario& sc) {
    const auto den = sc.drive ? SpectralDensity(DressedDensity(sc.width, *sc.drive))
                              : SpectralDensity(LorentzianDensity(sc.width, 0.0));
    return scenario_ensemble(sc).shifted(density_reference(den));
}

TransmissionSpectrum spectrum_for(const ScenarioConfig& cfg, const MemoryScenario& sc) {
    const Ensemble ens = scenario_ensemble(sc);
    const double cavity = -sc.detuning.value_or(0.0);
    const auto model = build_model(CavitySpec{cavity, sc.kappa}, ens);
    auto grid = cfg.probe_grid();
    for (double& w : grid) w += cavity;
    auto spec = transmission_spectrum(model, grid, Kernel::binned);
    // Report probe frequencies relative to the cavity.
    for (double& w : spec.omega) w -= cavity;
    for (auto& pk : spec.peaks) pk.position -= cavity;
    return spec;
}

AmplitudeTrajectory rabi_for(const MemoryScenario& sc) {
    const Ensemble ens = scenario_ensemble(sc);
    const auto model = build_model(CavitySpec{-sc.detuning.value_or(0.0), sc.kappa}, ens);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(ens.size() + 1));
    psi(0) = 1.0;
    return evolve(model, psi, time_grid(sc.horizon, sc.time_step), sc.backend);
}

void log_peaks(std::ostream& log, const std::string& label, const TransmissionSpectrum& s) {
    log << label << ":";
    for (const auto& p : s.peaks) log << " peak at " << p.position << " (height " << p.height << ", fwhm " << p.fwhm << ")";
    log << '\n';
}

void cmd_spectrum(Run& run) {
    const auto den = run.cfg.density();
    write_density(run, den, "density");
    const auto sc = run.cfg.memory_scenario();
    save_ensemble(run.path("ensemble.txt"), absolute_ensemble(sc));
    run.done("ensemble.txt");
    run.log << "density and " << scenario_spin_count(sc) << "-spin ensemble written\n";
}

void cmd_transmission(Run& run) {
    const auto sc = run.cfg.memory_scenario();
    const auto spec = spectrum_for(run.cfg, sc);
    write_spectrum_csv(run.path("transmission.csv"), spec);
    run.done("transmission.csv");
    log_peaks(run.log, "transmission", spec);
}

void cmd_rabi(Run& run) {
    const auto tr = rabi_for(run.cfg.memory_scenario());
    write_overlap_csv(run.path("rabi.csv"), tr.t, tr.f);
    run.done("rabi.csv");
    run.log << "rabi: F(" << tr.t.back() << ") = " << tr.F.back() << '\n';
}

void write_report(Run& run, const FidelityReport& rep, const std::string& stem) {
    write_fidelity_report(run.path(stem + ".csv"), rep, {{"delta_mhz", csv_number(run.cfg.delta_mhz)}});
    run.done(stem + ".csv");
    run.done(stem + ".csv.meta");
    if (!rep.scan.empty()) {
        std::vector<double> d, f;
        for (const auto& p : rep.scan) {
            d.push_back(p.detuning);
            f.push_back(p.fidelity);
        }
        write_columns_csv(run.path(stem + "_scan.csv"), "detuning", "F", d, f);
        run.done(stem + "_scan.csv");
    }
}

void cmd_memory(Run& run) {
    const auto rep = fidelity_curve(run.cfg.memory_scenario());
    write_report(run, rep, "fidelity");
    run.log << "memory: detuning " << rep.detuning << ", F(" << rep.target_time << ") = " << rep.target_fidelity
            << " [" << rep.method << ", " << rep.n_spins << " spins]\n";
}

std::vector<double> collectives_of(const ScenarioConfig& cfg) {
    return cfg.collectives.empty() ? std::vector<double>{cfg.collective} : cfg.collectives;
}

void cmd_optimize(Run& run) {
    std::ostringstream table;
    table << "collective,detuning,F\n";
    for (double omega : collectives_of(run.cfg)) {
        const auto sc = run.cfg.memory_scenario(omega);
        const auto opt = optimize_detuning(sc, sc.target_time);
        table << csv_number(omega) << ',' << csv_number(opt.detuning) << ',' << csv_number(opt.fidelity) << '\n';
        std::vector<double> d, f;
        for (const auto& p : opt.scan) {
            d.push_back(p.detuning);
            f.push_back(p.fidelity);
        }
        const std::string name = "optimize_" + tag(omega) + "_scan.csv";
        write_columns_csv(run.path(name), "detuning", "F", d, f);
        run.done(name);
        run.log << "optimize: Omega " << omega << ": detuning " << opt.detuning << ", F(" << sc.target_time
                << ") = " << opt.fidelity << '\n';
    }
    std::ofstream(run.path("optimize.csv"), std::ios::binary) << table.str();
    run.done("optimize.csv");
}

void reproduce_fig2(Run& run) {
    if (!run.cfg.drive) throw ValidationError("fig2 needs a [drive] section");
    write_density(run, LorentzianDensity(1.0, 0.0), "fig2_lorentzian");
    write_density(run, run.cfg.density(), "fig2_dressed");
    run.log << "fig2: densities on [" << run.cfg.density_lo << ", " << run.cfg.density_hi << "]\n";
}

void reproduce_fig3(Run& run) {
    if (!run.cfg.drive) throw ValidationError("fig3 needs a [drive] section");
    MemoryScenario drv = run.cfg.memory_scenario();
    MemoryScenario und = drv;
    und.drive.reset();
    und.window.reset();
    ScenarioConfig und_cfg = run.cfg;
    und_cfg.drive.reset();
    for (const auto& [label, sc, cfg] : {std::tuple{"undriven", und, und_cfg}, std::tuple{"driven", drv, run.cfg}}) {
        const auto spec = spectrum_for(cfg, sc);
        const std::string t_name = std::string("fig3_transmission_") + label + ".csv";
        write_spectrum_csv(run.path(t_name), spec);
        run.done(t_name);
        log_peaks(run.log, std::string("fig3 ") + label, spec);
        // Rabi oscillation without any damping.
        MemoryScenario lossless = sc;
        lossless.kappa = 0.0;
        lossless.gamma = 0.0;
        const auto tr = rabi_for(lossless);
        const std::string r_name = std::string("fig3_rabi_") + label + ".csv";
        write_overlap_csv(run.path(r_name), tr.t, tr.f);
        run.done(r_name);
    }
}

void reproduce_fig4(Run& run) {
    if (!run.cfg.drive) throw ValidationError("fig4 needs a [drive] section");
    std::ostringstream table;
    table << "collective,undriven_detuning,undriven_F,driven_detuning,driven_F\n";
    for (double omega : collectives_of(run.cfg)) {
        MemoryScenario drv = run.cfg.memory_scenario(omega);
        drv.detuning.reset();
        MemoryScenario und = drv;
        und.drive.reset();
        und.window.reset();
        const auto ru = fidelity_curve(und);
        const auto rd = fidelity_curve(drv);
        write_report(run, ru, "fig4_undriven_" + tag(omega));
        write_report(run, rd, "fig4_driven_" + tag(omega));
        table << csv_number(omega) << ',' << csv_number(ru.detuning) << ',' << csv_number(ru.target_fidelity) << ','
              << csv_number(rd.detuning) << ',' << csv_number(rd.target_fidelity) << '\n';
        run.log << "fig4: Omega " << omega << ": undriven F = " << ru.target_fidelity << " at " << ru.detuning
                << ", driven F = " << rd.target_fidelity << " at " << rd.detuning << '\n';
    }
    std::ofstream(run.path("fig4_summary.csv"), std::ios::binary) << table.str();
    run.done("fig4_summary.csv");
}

void dispatch(const std::string& command, const std::string& figure, Run& run) {
    if (command == "spectrum") return cmd_spectrum(run);
    if (command == "transmission") return cmd_transmission(run);
    if (command == "rabi") return cmd_rabi(run);
    if (command == "memory") return cmd_memory(run);
    if (command == "optimize") return cmd_optimize(run);
    if (command == "reproduce") {
        if (figure == "fig2") return reproduce_fig2(run);
        if (figure == "fig3") return reproduce_fig3(run);
        if (figure == "fig4") return reproduce_fig4(run);
        throw ValidationError("unknown figure '" + figure + "' (expected fig2, fig3 or fig4)");
    }
    throw ValidationError("unknown command '" + command + "'");
}

}  // namespace

int run_command(const std::string& command, const std::string& figure, const CommandOptions& opts,
                std::ostream& log, std::ostream& err) {
    try {
        if (opts.config_path.empty()) throw ValidationError("--config is required");
        std::ifstream in(opts.config_path, std::ios::binary);
        if (!in) throw ValidationError("cannot read config " + opts.config_path);
        std::ostringstream text;
        text << in.rdbuf();

        ScenarioConfig cfg = parse_config(text.str());
        if (opts.seed) cfg.seed = *opts.seed;
        if (opts.n_spins) cfg.n_spins = *opts.n_spins;
        if (opts.scheme) cfg.scheme = *opts.scheme;
        if (opts.method) cfg.method = *opts.method;
        if (opts.threads) set_max_threads(*opts.threads);

        fs::create_directories(opts.out_dir);
        Run run{cfg, opts.out_dir, {}, log};
        run.manifest.command = figure.empty() ? command : command + " " + figure;
        run.manifest.config_hash = git_blob_hash(text.str());
        run.manifest.resolved_config = serialize_config(cfg);
        run.manifest.seed = cfg.seed;
        dispatch(command, figure, run);
        run.manifest.write(run.path("manifest.json"));
        return exit_ok;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << '\n';
        return exit_numerical;
    }
}

}  // namespace drivenmem
