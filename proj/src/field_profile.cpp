#include "drivenmem/field_profile.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "drivenmem/error.hpp"
#include "drivenmem/quadrature.hpp"

namespace drivenmem {

using detail::require;
using detail::require_finite;

DriveCoil::DriveCoil(double loop_radius, double sample_radius, double sample_height,
                     double current_scale)
    : loop_radius_(loop_radius),
      sample_radius_(sample_radius),
      sample_height_(sample_height),
      current_scale_(current_scale) {
    require_finite(loop_radius, "loop_radius");
    require_finite(sample_radius, "sample_radius");
    require_finite(sample_height, "sample_height");
    require_finite(current_scale, "current_scale");
    require(loop_radius > 0.0, "loop_radius must be positive");
    require(sample_radius >= 0.0, "sample_radius must be non-negative");
    require(sample_height > 0.0, "sample_height must be positive");
    require(current_scale > 0.0, "current_scale must be positive");
    require(sample_radius < loop_radius, "sample must lie strictly inside the drive loop");
}

double DriveCoil::center_field() const noexcept {
    return 2.0 * std::numbers::pi * current_scale_ / loop_radius_;
}

DriveAmplitudeRange::DriveAmplitudeRange(double b_min, double b_max)
    : b_min_(b_min), b_max_(b_max) {
    require_finite(b_min, "b_min");
    require_finite(b_max, "b_max");
    require(b_min > 0.0, "b_min must be positive");
    require(b_min <= b_max, "b_min must not exceed b_max");
}

namespace {

void check_radius(const DriveCoil& coil, double r) {
    require_finite(r, "r");
    require(r >= 0.0, "radius must be non-negative");
    if (r >= coil.loop_radius()) {
        throw DomainError("field integrand is singular for r >= loop radius (r = " +
                          std::to_string(r) + ")");
    }
}

}  // namespace

double field_at_radius(const DriveCoil& coil, double r) {
    check_radius(coil, r);
    const double R = coil.loop_radius();
    if (r == 0.0) return coil.center_field();

    auto integrand = [R, r](double theta) {
        const double c = std::cos(theta);
        const double dist2 = R * R - 2.0 * R * r * c + r * r;
        return R * (R - r * c) / (dist2 * std::sqrt(dist2));
    };
    // Symmetric in theta -> 2 pi - theta.
    quad::Options opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 0.0;
    const auto res = quad::integrate(integrand, 0.0, std::numbers::pi, opts);
    if (!res.converged) throw NumericalError("field quadrature did not converge");
    return coil.current_scale() * 2.0 * res.value;
}

double field_series_approx(const DriveCoil& coil, double r) {
    check_radius(coil, r);
    const double x = r / coil.loop_radius();
    return coil.center_field() * (1.0 + 0.75 * x * x);
}

DriveAmplitudeRange amplitude_range(const DriveCoil& coil) {
    return {coil.center_field(), field_series_approx(coil, coil.sample_radius())};
}

double drive_amplitude_pdf(const DriveAmplitudeRange& range, double b) {
    if (range.homogeneous()) {
        return b == range.b_min() ? std::numeric_limits<double>::infinity() : 0.0;
    }
    if (b < range.b_min() || b > range.b_max()) return 0.0;
    return 1.0 / range.spread();
}

}  // namespace drivenmem
