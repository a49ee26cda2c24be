#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drivenmem/dynamics.hpp"
#include "drivenmem/field_profile.hpp"
#include "drivenmem/laplace.hpp"
#include "drivenmem/spectral.hpp"

namespace drivenmem {

/// cos(theta/2)|1,G> - sin(theta/2)|0,S> with cot(theta) = detuning / (2 Omega).
struct PolaritonState {
    double detuning;
    double theta;              ///< in (0, pi)
    double cavity_amplitude;   ///< cos(theta/2)
    double spin_amplitude;     ///< -sin(theta/2)
};

/// Throws ValidationError unless collective > 0.
PolaritonState polariton_state(double detuning, double collective);

/// Full (N+1)-vector: cavity amplitude, then spin_amplitude * g_k / Omega.
Eigen::VectorXd polariton_vector(const PolaritonState& state, const Ensemble& ensemble);

enum class Method { eigen, bromwich };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// One storage experiment. All frequencies in units of the Lorentzian width
/// (or any consistent unit), times in the inverse unit.
///
/// The spin line is centred at the density reference (Lorentzian centre, or
/// (b_min + b_max)/2 when driven). The cavity sits at reference - detuning,
/// which makes the polariton of `polariton_state` an exact eigenvector of the
/// cavity/superradiant-mode block; positive detuning is the photon-like side.
struct MemoryScenario {
    double width = 1.0;
    std::optional<DriveAmplitudeRange> drive;  ///< driven iff set
    double collective = 10.0;  ///< bare Omega; a driven ensemble couples with Omega/2
    double kappa = 0.1;
    double gamma = 1e-4;
    std::optional<double> detuning;  ///< unset: optimize at target_time
    double horizon = 50.0;
    double time_step = 0.05;
    double target_time = 50.0;
    std::size_t n_spins = 0;  ///< 0: see scenario_spin_count
    Scheme scheme = Scheme::grid;
    std::optional<Window> window;  ///< scenario_window when unset
    Method method = Method::eigen;
    Backend backend = Backend::automatic;
    /// Optimizer bracket in units of the effective coupling; [-20, 20] by default.
    double bracket_lo = -20.0;
    double bracket_hi = 20.0;
    std::size_t scan_points = 64;
    double resolution = 1e-3;
    /// Also run the other method and report the largest |F| difference.
    bool cross_check = false;

    [[nodiscard]] bool driven() const noexcept { return drive.has_value(); }
    /// Omega seen by the model: Omega/2 when driven.
    [[nodiscard]] double effective_coupling() const noexcept { return driven() ? 0.5 * collective : collective; }
    void validate() const;
};

inline constexpr double kCavityMargin = 20.0;       ///< widths kept beyond the cavity
inline constexpr double kDrivenSpacing = 0.05;      ///< widths per spin, dressed line
inline constexpr double kLorentzianSpacing = 0.1;   ///< widths per spin, Lorentzian line

/// default_window widened so the cavity stays kCavityMargin widths inside it
/// at both bracket ends (clipped at b_min when driven).
Window scenario_window(const MemoryScenario& sc);
/// n_spins, or with n_spins == 0 enough spins for the spacing above (at least 4000).
/// The spacing keeps the comb recurrence time 2pi/h well past t = 50.
std::size_t scenario_spin_count(const MemoryScenario& sc);

/// Ensemble built for a scenario, already shifted so the density reference
/// sits at frequency 0.
Ensemble scenario_ensemble(const MemoryScenario& sc);

struct DetuningScanPoint {
    double detuning;
    double fidelity;
};

struct FidelityReport {
    std::vector<double> t;
    std::vector<cplx> f;
    std::vector<double> F;
    double target_time = 0.0;
    double target_fidelity = 0.0;
    double detuning = 0.0;
    std::optional<double> optimal_detuning;
    std::vector<DetuningScanPoint> scan;  ///< coarse optimizer grid, when optimized
    std::size_t n_spins = 0;
    double collective = 0.0;  ///< effective coupling of the model
    double truncated_mass = 0.0;
    bool window_warning = false;
    std::string method;
    std::string backend;
    std::optional<double> method_residual;  ///< max_t |F_eigen - F_bromwich|
};

/// Fidelity machinery for one ensemble; the cavity detuning is the only thing
/// that changes between evaluations. The Bromwich path keeps M(s) on the
/// contour, so a new detuning costs O(points) instead of O(N points).
class FidelityEngine {
public:
    explicit FidelityEngine(const MemoryScenario& sc);
    FidelityEngine(const MemoryScenario& sc, Ensemble ensemble);

    [[nodiscard]] const MemoryScenario& scenario() const noexcept { return sc_; }
    [[nodiscard]] const Ensemble& ensemble() const noexcept { return ensemble_; }
    [[nodiscard]] SingleExcitationModel model(double detuning) const;
    [[nodiscard]] PolaritonState state(double detuning) const;

    /// f(t) on the given times.
    [[nodiscard]] std::vector<cplx> overlap(double detuning, const std::vector<double>& times, Method method) const;
    [[nodiscard]] double fidelity_at(double detuning, double t, Method method) const;
    /// Bromwich F(t) from the cached kernel; the band covers the whole bracket.
    [[nodiscard]] double fast_fidelity(double detuning, double t) const;

    [[nodiscard]] std::string last_backend() const { return backend_; }

private:
    void build_kernel_cache() const;
    [[nodiscard]] std::vector<cplx> bromwich_overlap(double detuning, const std::vector<double>& times) const;

    MemoryScenario sc_;
    Ensemble ensemble_;
    mutable std::string backend_;
    mutable std::unique_ptr<BromwichGrid> cache_grid_;
    mutable std::vector<cplx> cache_kernel_;
    mutable std::vector<double> cache_times_;
};

/// Uniform time grid 0, dt, ..., horizon.
std::vector<double> time_grid(double horizon, double step);

FidelityReport fidelity_curve(const MemoryScenario& sc);
double fidelity_at(const MemoryScenario& sc, double t);

struct OptimumResult {
    double detuning;
    double fidelity;  ///< at target_time, with the scenario method
    std::vector<DetuningScanPoint> scan;
};

/// Coarse scan (log-spaced above Omega/10 on each side of zero) followed by
/// golden-section refinement around the best scan point. Ties go to the
/// smaller |detuning|. Throws NumericalError if a fidelity is not finite.
OptimumResult optimize_detuning(const MemoryScenario& sc, double target_time);
OptimumResult optimize_detuning(const FidelityEngine& engine, double target_time);

struct ComparisonRow {
    double collective;
    OptimumResult undriven;
    OptimumResult driven;
    double ratio;  ///< driven / undriven fidelity
};

/// For each Omega, optimized undriven and driven fidelity at target_time.
/// `base` supplies everything except the coupling; its drive must be set.
std::vector<ComparisonRow> compare_driven_undriven(const MemoryScenario& base,
                                                   const std::vector<double>& collectives);

}  // namespace drivenmem
