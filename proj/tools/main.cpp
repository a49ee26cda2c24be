// Command-line front end: spectra, transmission, Rabi, memory fidelity and
// figure reproduction from a scenario file.

#include <iostream>
#include <utility>

#include "CLI11.hpp"

#include "drivenmem/commands.hpp"

int main(int argc, char** argv) {
    using namespace drivenmem;
    CLI::App app{"Driven spin-ensemble quantum memory"};
    app.require_subcommand(1);

    CommandOptions opts;
    std::string scheme, method, figure;
    unsigned threads = 0;
    std::uint64_t seed = 0;
    std::size_t n_spins = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads (0: all cores)");
        sub->add_option("--seed", seed, "seed for sampled densities");
        sub->add_option("--n-spins", n_spins, "ensemble size (0: automatic)");
        sub->add_option("--scheme", scheme, "discretization")->check(CLI::IsMember({"quantile", "grid"}));
        sub->add_option("--method", method, "fidelity method")->check(CLI::IsMember({"eigen", "bromwich"}));
    };

    const std::pair<const char*, const char*> commands[] = {
        {"spectrum", "density, Monte-Carlo histogram and discretized ensemble"},
        {"transmission", "cavity transmission spectrum"},
        {"rabi", "cavity Rabi oscillation from |1,G>"},
        {"memory", "polariton storage fidelity F(t)"},
        {"optimize", "best cavity detuning for each collective coupling"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));
    auto* reproduce = app.add_subcommand("reproduce", "write the data behind a figure");
    reproduce->add_option("figure", figure, "fig2, fig3 or fig4")
        ->required()
        ->check(CLI::IsMember({"fig2", "fig3", "fig4"}));
    add_common(reproduce);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(exit_validation);
    }

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--threads")) opts.threads = threads;
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--n-spins")) opts.n_spins = n_spins;
    if (!scheme.empty()) opts.scheme = scheme_from_string(scheme);
    if (!method.empty()) opts.method = method_from_string(method);
    return run_command(sub->get_name(), figure, opts, std::cout, std::cerr);
}
