#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drivenmem/dynamics.hpp"
#include "drivenmem/error.hpp"
#include "drivenmem/memory.hpp"
#include "drivenmem/spectral.hpp"

namespace drivenmem {

struct ConfigIssue {
    std::size_t line;
    std::size_t column;
    std::string message;
};

/// Every problem found in a config, not only the first.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    [[nodiscard]] const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

struct DriveBand {
    double b_min;
    double b_max;
    bool operator==(const DriveBand&) const = default;
};

/// Resolved scenario. Frequencies are in units of delta (the Lorentzian
/// FWHM), times in units of 1/delta. MHz are angular (rad/us), as in the
/// usual spin-resonance convention, so a value in MHz divided by delta in
/// MHz gives the reduced value directly.
struct ScenarioConfig {
    double delta_mhz = 1.0;

    // [ensemble]
    double collective = 10.0;  ///< bare Omega
    double gamma = 1e-4;
    std::size_t n_spins = 0;   ///< 0: automatic
    Scheme scheme = Scheme::grid;
    std::optional<double> window_lo;
    std::optional<double> window_hi;

    // [drive]
    std::optional<DriveBand> drive;

    // [cavity]
    double kappa = 0.1;
    std::optional<double> detuning;  ///< cavity at line centre - detuning

    // [run]
    double horizon = 50.0;
    double time_step = 0.05;
    double target_time = 50.0;
    Method method = Method::eigen;
    Backend backend = Backend::automatic;
    double bracket_lo = -20.0;  ///< in units of the effective coupling
    double bracket_hi = 20.0;
    std::size_t scan_points = 64;
    double resolution = 1e-3;
    std::vector<double> collectives;  ///< Omega scan; empty means {collective}
    std::optional<double> probe_lo;   ///< probe frequency relative to the cavity
    std::optional<double> probe_hi;
    std::size_t probe_points = 2001;
    double density_lo = -20.0;        ///< density grid (spectrum, fig2)
    double density_hi = 40.0;
    std::size_t density_points = 2001;
    std::uint64_t seed = 1;

    bool operator==(const ScenarioConfig&) const = default;

    [[nodiscard]] std::optional<Window> window() const;
    [[nodiscard]] MemoryScenario memory_scenario() const;
    [[nodiscard]] MemoryScenario memory_scenario(double collective_value) const;
    [[nodiscard]] SpectralDensity density() const;
    /// Probe grid for transmission, relative to the cavity frequency.
    [[nodiscard]] std::vector<double> probe_grid() const;
};

/// Strict parse: unknown sections or keys, missing or wrong units, bad
/// numbers, negative rates and inconsistent values are all collected and
/// thrown together as a ConfigError.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Canonical text in reduced units; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& cfg);

}  // namespace drivenmem
