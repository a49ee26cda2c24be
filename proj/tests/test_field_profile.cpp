#include <cmath>
#include <numbers>

#include "doctest.h"
#include "drivenmem/error.hpp"
#include "drivenmem/field_profile.hpp"
#include "drivenmem/quadrature.hpp"

using namespace drivenmem;

namespace {

constexpr double pi = std::numbers::pi;

// Loop field from complete elliptic integrals (unit loop, K0 = 1), evaluated
// in extended precision outside this code base.
struct EllipticPoint {
    double r;
    double field;
};
constexpr EllipticPoint kElliptic[] = {
    {0.10, 6.330755321299669},
    {0.20, 6.479035609343871},
    {0.25, 6.596084292716651},
    {0.30, 6.746520724937357},
};

}  // namespace

TEST_CASE("coil validation") {
    CHECK_THROWS_AS(DriveCoil(0.0, 0.1, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(DriveCoil(1.0, -0.1, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(DriveCoil(1.0, 1.0, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(DriveCoil(1.0, 0.1, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(DriveCoil(1.0, 0.1, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(DriveAmplitudeRange(0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(DriveAmplitudeRange(2.0, 1.0), ValidationError);
}

TEST_CASE("field on the axis") {
    DriveCoil coil(2.0, 0.5, 1.0, 3.0);
    CHECK(field_at_radius(coil, 0.0) == doctest::Approx(2.0 * pi * 3.0 / 2.0).epsilon(1e-15));
    CHECK(field_series_approx(coil, 0.0) == doctest::Approx(coil.center_field()).epsilon(1e-15));
    CHECK_THROWS_AS(field_at_radius(coil, 2.0), DomainError);
}

TEST_CASE("quadrature matches the elliptic-integral field") {
    DriveCoil coil(1.0, 0.3, 1.0, 1.0);
    for (const auto& p : kElliptic) {
        CAPTURE(p.r);
        CHECK(field_at_radius(coil, p.r) == doctest::Approx(p.field).epsilon(1e-11));
    }
}

TEST_CASE("series stays within its quartic bound") {
    DriveCoil coil(1.0, 0.3, 1.0, 1.0);
    for (double r = 0.01; r < 0.3; r += 0.01) {
        const double q = field_at_radius(coil, r);
        const double s = field_series_approx(coil, r);
        CHECK(std::abs(s - q) / q < 2.0 * std::pow(r, 4));
    }
    // At r/R = 0.2 the neglected quartic term is 1.135e-3 of the field.
    const double q = field_at_radius(coil, 0.2);
    CHECK(std::abs(field_series_approx(coil, 0.2) - q) / q < 1.2e-3);
}

TEST_CASE("inhomogeneity below five percent for R = 4d") {
    DriveCoil coil(4.0, 1.0, 1.0, 1.0);
    const double rel = (field_at_radius(coil, 1.0) - field_at_radius(coil, 0.0)) / field_at_radius(coil, 0.0);
    CHECK(rel < 0.05);
    CHECK(rel == doctest::Approx(0.04979942023666336).epsilon(1e-9));
    CHECK(field_series_approx(coil, 1.0) == doctest::Approx(coil.center_field() * 1.046875).epsilon(1e-15));
}

TEST_CASE("amplitude range") {
    DriveCoil point(1.0, 0.0, 1.0, 1.0);
    const auto flat = amplitude_range(point);
    CHECK(flat.homogeneous());

    const double k0 = 10.0 / (2.0 * pi / 4.0);
    const auto r = amplitude_range(DriveCoil(4.0, 1.0, 1.0, k0));
    CHECK(r.b_min() == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(r.b_max() == doctest::Approx(10.46875).epsilon(1e-14));

    DriveAmplitudeRange narrow(10.0, 10.5);
    CHECK(narrow.spread() == 0.5);
}

TEST_CASE("drive amplitude density") {
    DriveAmplitudeRange r(10.0, 10.5);
    CHECK(drive_amplitude_pdf(r, 10.25) == 2.0);
    CHECK(drive_amplitude_pdf(r, 9.0) == 0.0);
    CHECK(drive_amplitude_pdf(r, 11.0) == 0.0);
    const auto res = quad::integrate([&](double b) { return drive_amplitude_pdf(r, b); }, 10.0, 10.5);
    CHECK(res.value == doctest::Approx(1.0).epsilon(1e-12));

    DriveAmplitudeRange flat(10.0, 10.0);
    CHECK(std::isinf(drive_amplitude_pdf(flat, 10.0)));
    CHECK(drive_amplitude_pdf(flat, 10.1) == 0.0);
}

TEST_CASE("quadrature with endpoint singularities") {
    const auto a = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
    CHECK(a.converged);
    CHECK(a.value == doctest::Approx(2.0).epsilon(1e-10));
    const auto b = quad::integrate([](double x) { return std::log(x); }, 0.0, 1.0);
    CHECK(b.value == doctest::Approx(-1.0).epsilon(1e-10));
    const auto c = quad::integrate_to_infinity([](double x) { return 1.0 / (1.0 + x * x); }, 0.0);
    CHECK(c.value == doctest::Approx(pi / 2.0).epsilon(1e-10));
}
