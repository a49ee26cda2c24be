#pragma once

#include <cstddef>
#include <functional>

namespace drivenmem::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    std::size_t max_intervals = 4000;
};

/// Globally adaptive Gauss-Kronrod (G7/K15) on a finite interval [a, b].
/// The interval with the largest error estimate is bisected until the total
/// error satisfies max(abs_tol, rel_tol * |value|). Endpoints are never
/// sampled, so integrable endpoint singularities are tolerated.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opts = {});

/// Integral over [a, +inf) through the map x = a + t / (1 - t).
Result integrate_to_infinity(const std::function<double(double)>& f, double a,
                             const Options& opts = {});

}  // namespace drivenmem::quad
