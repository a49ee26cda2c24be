#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "drivenmem/field_profile.hpp"

namespace drivenmem {

/// Lorentzian distribution of spin detunings with full width `width` (FWHM)
/// about `center`.
class LorentzianDensity {
public:
    explicit LorentzianDensity(double width, double center = 0.0);

    [[nodiscard]] double width() const noexcept { return width_; }
    [[nodiscard]] double center() const noexcept { return center_; }

    /// Density of the detuning x (measured from the center).
    [[nodiscard]] double pdf(double detuning) const;
    [[nodiscard]] double cdf(double detuning) const;
    /// 1 - cdf, without cancellation in the upper tail.
    [[nodiscard]] double survival(double detuning) const;
    [[nodiscard]] double quantile(double q) const;

    /// Density, cdf and quantile in absolute frequency.
    [[nodiscard]] double pdf_at(double omega) const { return pdf(omega - center_); }
    [[nodiscard]] double cdf_at(double omega) const { return cdf(omega - center_); }
    [[nodiscard]] double quantile_at(double q) const { return center_ + quantile(q); }

    [[nodiscard]] double sample(std::mt19937_64& rng) const;

private:
    double width_;
    double center_;
};

double lorentzian_pdf(const LorentzianDensity& den, double detuning);

struct DressedSpin {
    double frequency;  ///< sqrt(detuning^2 + drive^2)
    double coupling;   ///< exact dressed coupling (g/2)(1 + detuning/frequency)
};

/// Diagonalizes a driven spin in the rotating frame. Throws ValidationError
/// unless drive > 0.
DressedSpin dress_spin(double detuning, double drive, double bare_coupling);

/// arctan(b W / sqrt((4 w^2 + W^2)(w^2 - b^2))) with W the Lorentzian width;
/// returns pi/2 at w == b and throws DomainError for b > w.
double mu_kernel(double drive, double omega_bar, double width);

/// Distribution of dressed frequencies obtained by driving a Lorentzian
/// ensemble with an amplitude drawn uniformly from a DriveAmplitudeRange
/// (or fixed, in the homogeneous case).
class DressedDensity {
public:
    DressedDensity(double width, DriveAmplitudeRange drive);

    [[nodiscard]] double width() const noexcept { return width_; }
    [[nodiscard]] const DriveAmplitudeRange& drive() const noexcept { return drive_; }
    [[nodiscard]] bool homogeneous() const noexcept { return drive_.homogeneous(); }
    /// Midpoint of the drive range; the driven cavity sits here.
    [[nodiscard]] double reference() const noexcept {
        return 0.5 * (drive_.b_min() + drive_.b_max());
    }

    /// Closed-form density. In the homogeneous case the lower edge is an
    /// integrable singularity and evaluates to +inf. Throws ValidationError on NaN.
    [[nodiscard]] double pdf(double omega_bar) const;
    [[nodiscard]] double cdf(double omega_bar) const;
    [[nodiscard]] double survival(double omega_bar) const;
    [[nodiscard]] double quantile(double q) const;

    /// Draws (detuning, drive) and returns the dressed frequency.
    [[nodiscard]] double sample(std::mt19937_64& rng) const;

private:
    void build_cache();

    double width_;
    DriveAmplitudeRange drive_;
    // (omega_bar, cdf) nodes used to bracket quantile searches.
    std::vector<double> cache_x_;
    std::vector<double> cache_cdf_;
};

double dressed_pdf(const DressedDensity& den, double omega_bar);
double dressed_cdf(const DressedDensity& den, double omega_bar);

using SpectralDensity = std::variant<LorentzianDensity, DressedDensity>;

double density_pdf(const SpectralDensity& den, double omega);
double density_cdf(const SpectralDensity& den, double omega);
double density_quantile(const SpectralDensity& den, double q);
/// Line center that the cavity detuning is measured from: the Lorentzian
/// center, or (b_min + b_max)/2 for a dressed density.
double density_reference(const SpectralDensity& den);

enum class Scheme { quantile, grid };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct Window {
    double lo;
    double hi;
};

/// +-200 W around a Lorentzian center; [b_min, b_min + 200 W] for a dressed density.
Window default_window(const SpectralDensity& den);

struct EnsembleMetadata {
    std::string scheme = "custom";
    double truncated_mass = 0.0;  ///< density mass outside the represented window
    bool window_warning = false;  ///< truncated_mass above 1e-3
};

/// Finite set of spins: frequencies (ascending), couplings, a common spin
/// damping rate, and the frequency cell each spin stands for.
class Ensemble {
public:
    /// Sorts the spins by frequency. Cell widths default to the spacing
    /// between neighbour midpoints.
    static Ensemble from_spins(std::vector<double> frequencies, std::vector<double> couplings,
                               double gamma, std::vector<double> cell_widths = {},
                               EnsembleMetadata meta = {});
    static Ensemble single(double frequency, double coupling, double gamma);

    [[nodiscard]] std::size_t size() const noexcept { return frequencies_.size(); }
    [[nodiscard]] const std::vector<double>& frequencies() const noexcept { return frequencies_; }
    [[nodiscard]] const std::vector<double>& couplings() const noexcept { return couplings_; }
    [[nodiscard]] const std::vector<double>& coupling_squares() const noexcept { return squares_; }
    [[nodiscard]] const std::vector<double>& cell_widths() const noexcept { return cell_widths_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] double collective_coupling() const noexcept { return collective_; }
    [[nodiscard]] const EnsembleMetadata& metadata() const noexcept { return meta_; }

    /// Same spins moved by a constant frequency offset.
    [[nodiscard]] Ensemble shifted(double offset) const;
    /// Same spins with every coupling multiplied by `factor`.
    [[nodiscard]] Ensemble scaled(double factor) const;
    [[nodiscard]] Ensemble with_gamma(double gamma) const;
    /// Coupling-weighted mean frequency, sum g_k^2 w_k / Omega^2.
    [[nodiscard]] double mean_frequency() const;

private:
    Ensemble() = default;
    void validate() const;
    void update_squares();

    std::vector<double> frequencies_;
    std::vector<double> couplings_;
    std::vector<double> squares_;
    std::vector<double> cell_widths_;
    double gamma_ = 0.0;
    double collective_ = 0.0;
    EnsembleMetadata meta_;
};

/// Finite representation of a continuous density with total coupling
/// `collective_coupling`.
///  - quantile: spins at the (k - 1/2)/N quantiles, equal couplings.
///  - grid: spins at the cell midpoints of a uniform grid over the window,
///    g_k^2 proportional to the density mass of cell k, renormalized so that
///    sum g_k^2 equals collective_coupling^2.
/// Throws ValidationError for n < 2.
Ensemble discretize(const SpectralDensity& den, std::size_t n, double collective_coupling,
                    Scheme scheme, std::optional<Window> window = std::nullopt,
                    double gamma = 0.0);

/// Degenerate one-spin ensemble at the median of the density.
Ensemble single_spin_at_median(const SpectralDensity& den, double collective_coupling,
                               double gamma = 0.0);

/// Uniform double in [0, 1) from the top 53 bits of one generator draw;
/// identical across standard libraries.
double uniform01(std::mt19937_64& rng);

}  // namespace drivenmem
