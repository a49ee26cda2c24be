#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include "drivenmem/dynamics.hpp"

namespace drivenmem {

struct BromwichOptions {
    double abscissa = 0.05;          ///< Re(s) of the contour
    double half_span = 400.0;        ///< band |Im(s) - center| <= half_span
    std::size_t points = std::size_t{1} << 20;  ///< 0: smallest power of two that avoids aliasing
    double center = 0.0;
};

/// Sampling of the line Re(s) = abscissa used by the FFT inversion
///     f(t) = (1/2pi) int exp(st) fbar(s) dIm(s).
/// For a uniform time grid starting at 0 the band is widened slightly so that
/// the requested step is a whole multiple of the FFT time step; otherwise
/// each time is summed directly. Throws ValidationError when the FFT period
/// 2pi/dOmega does not exceed the horizon by a margin of 20/abscissa.
class BromwichGrid {
public:
    BromwichGrid(const BromwichOptions& opts, const std::vector<double>& times);

    [[nodiscard]] std::size_t size() const noexcept { return points_; }
    [[nodiscard]] double abscissa() const noexcept { return eps_; }
    [[nodiscard]] double omega(std::size_t m) const noexcept { return omega0_ + static_cast<double>(m) * domega_; }
    [[nodiscard]] std::complex<double> node(std::size_t m) const noexcept { return {eps_, omega(m)}; }
    [[nodiscard]] double frequency_step() const noexcept { return domega_; }
    [[nodiscard]] double time_step() const noexcept { return dt_; }
    [[nodiscard]] double period() const noexcept { return dt_ * static_cast<double>(points_); }
    [[nodiscard]] double half_span() const noexcept { return 0.5 * domega_ * static_cast<double>(points_); }

    /// Time values of the sampled transform `values` (one per node).
    [[nodiscard]] std::vector<std::complex<double>> invert(const std::vector<std::complex<double>>& values,
                                                           const std::vector<double>& times) const;
    /// Single time by direct summation.
    [[nodiscard]] std::complex<double> invert_at(const std::vector<std::complex<double>>& values, double t) const;

private:
    double eps_;
    double omega0_;
    double domega_;
    double dt_;
    std::size_t points_;
    std::size_t stride_ = 0;  // FFT samples per requested step, 0 when not uniform
};

/// Numerical inverse Laplace transform on the given times.
/// `subtract` is a sum of exponentials with known inverse that is removed
/// from fbar before sampling (its poles must lie left of the contour). With
/// no subtraction a single pole matching f(0) and f'(0) is estimated from
/// fbar far out on the contour.
std::vector<std::complex<double>> invert_laplace(const std::function<std::complex<double>(std::complex<double>)>& fbar,
                                                 const std::vector<double>& times,
                                                 const BromwichOptions& opts = {},
                                                 const PoleSum* subtract = nullptr);

}  // namespace drivenmem
