#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "drivenmem/config.hpp"

namespace drivenmem {

/// Command-line overrides applied on top of the config file.
struct CommandOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_spins;
    std::optional<Scheme> scheme;
    std::optional<Method> method;
};

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_numerical = 2 };

/// Runs one of spectrum, transmission, rabi, memory, optimize, reproduce
/// (`figure` = fig2, fig3 or fig4 for reproduce). Writes CSV files and
/// manifest.json into out_dir, a summary to `log` and diagnostics to `err`.
/// Returns the exit code instead of throwing.
int run_command(const std::string& command, const std::string& figure, const CommandOptions& opts,
                std::ostream& log, std::ostream& err);

}  // namespace drivenmem
