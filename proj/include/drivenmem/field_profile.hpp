#pragma once

// Drive-field amplitude across a cylindrical sample sitting inside a single
// circular drive loop, and the resulting distribution of drive amplitudes.

namespace drivenmem {

/// Geometry and strength of the drive loop.
///
/// `current_scale` lumps the physical prefactor (g_e mu_B mu_0 I / 4 pi) into
/// one number, so field values come out directly as Rabi frequencies.
class DriveCoil {
public:
    DriveCoil(double loop_radius, double sample_radius, double sample_height,
              double current_scale);

    [[nodiscard]] double loop_radius() const noexcept { return loop_radius_; }
    [[nodiscard]] double sample_radius() const noexcept { return sample_radius_; }
    [[nodiscard]] double sample_height() const noexcept { return sample_height_; }
    [[nodiscard]] double current_scale() const noexcept { return current_scale_; }

    /// Field on the loop axis, 2 pi K0 / R.
    [[nodiscard]] double center_field() const noexcept;

private:
    double loop_radius_;
    double sample_radius_;
    double sample_height_;
    double current_scale_;
};

/// Smallest and largest drive amplitude seen by the sample.
class DriveAmplitudeRange {
public:
    DriveAmplitudeRange(double b_min, double b_max);

    [[nodiscard]] double b_min() const noexcept { return b_min_; }
    [[nodiscard]] double b_max() const noexcept { return b_max_; }
    [[nodiscard]] double spread() const noexcept { return b_max_ - b_min_; }
    [[nodiscard]] bool homogeneous() const noexcept { return b_max_ == b_min_; }

    friend bool operator==(const DriveAmplitudeRange&, const DriveAmplitudeRange&) = default;

private:
    double b_min_;
    double b_max_;
};

/// Biot-Savart loop integral at distance r from the axis, by adaptive
/// quadrature (relative tolerance 1e-10). Throws DomainError for r >= R.
double field_at_radius(const DriveCoil& coil, double r);

/// Same field truncated after the quadratic term: 2 pi K0/R [1 + 3/4 (r/R)^2].
double field_series_approx(const DriveCoil& coil, double r);

/// b_min at the axis, b_max at the sample edge r = d (series form).
DriveAmplitudeRange amplitude_range(const DriveCoil& coil);

/// Rectangular density 1/(b_max - b_min) on [b_min, b_max].
/// For a homogeneous range the distribution is a point mass: +inf at b_min,
/// zero elsewhere.
double drive_amplitude_pdf(const DriveAmplitudeRange& range, double b);

}  // namespace drivenmem
