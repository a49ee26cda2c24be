#include "drivenmem/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "drivenmem/error.hpp"
#include "drivenmem/parallel.hpp"

namespace drivenmem {

namespace {

// FFTW planning is not thread safe.
std::mutex g_plan_mutex;

bool is_uniform_from_zero(const std::vector<double>& t, double& step) {
    if (t.size() < 2 || t[0] != 0.0) return false;
    step = t[1] - t[0];
    if (!(step > 0.0)) return false;
    const double tol = 1e-10 * step;
    for (std::size_t j = 0; j < t.size(); ++j) {
        if (std::abs(t[j] - static_cast<double>(j) * step) > tol * static_cast<double>(j + 1)) return false;
    }
    return true;
}

}  // namespace

BromwichGrid::BromwichGrid(const BromwichOptions& opts, const std::vector<double>& times) {
    detail::require(opts.abscissa > 0.0 && std::isfinite(opts.abscissa), "Bromwich abscissa must be positive");
    detail::require(opts.half_span > 0.0 && std::isfinite(opts.half_span), "Bromwich half span must be positive");
    detail::require_finite(opts.center, "Bromwich center");
    double t_max = 0.0;
    for (double t : times) {
        detail::require(std::isfinite(t) && t >= 0.0, "inversion times must be finite and non-negative");
        t_max = std::max(t_max, t);
    }
    eps_ = opts.abscissa;

    double half = opts.half_span;
    double step = 0.0;
    if (is_uniform_from_zero(times, step)) {
        const auto q = static_cast<std::size_t>(std::ceil(step * half / std::numbers::pi - 1e-9));
        stride_ = std::max<std::size_t>(q, 1);
        half = static_cast<double>(stride_) * std::numbers::pi / step;
        dt_ = step / static_cast<double>(stride_);
    } else {
        dt_ = std::numbers::pi / half;
    }

    const double needed = t_max + 20.0 / eps_;
    if (opts.points == 0) {
        points_ = 2;
        while (static_cast<double>(points_) * dt_ < needed) points_ *= 2;
    } else {
        points_ = opts.points;
        if (static_cast<double>(points_) * dt_ < needed) {
            throw ValidationError("Bromwich grid too coarse: the FFT period " +
                                  std::to_string(static_cast<double>(points_) * dt_) +
                                  " does not cover the horizon plus aliasing margin " + std::to_string(needed));
        }
    }
    domega_ = 2.0 * half / static_cast<double>(points_);
    omega0_ = opts.center - half;
}

std::vector<std::complex<double>> BromwichGrid::invert(const std::vector<std::complex<double>>& values,
                                                       const std::vector<double>& times) const {
    detail::require(values.size() == points_, "sample count does not match the Bromwich grid");
    std::vector<std::complex<double>> out(times.size());
    double step = 0.0;
    if (stride_ == 0 || !is_uniform_from_zero(times, step) ||
        std::abs(step - dt_ * static_cast<double>(stride_)) > 1e-12 * step) {
        parallel_for(times.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t j = b; j < e; ++j) out[j] = invert_at(values, times[j]);
        }, 4);
        return out;
    }

    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * points_));
    if (buf == nullptr) throw NumericalError("FFT buffer allocation failed");
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        plan = fftw_plan_dft_1d(static_cast<int>(points_), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    for (std::size_t m = 0; m < points_; ++m) {
        buf[m][0] = values[m].real();
        buf[m][1] = values[m].imag();
    }
    fftw_execute(plan);
    const double scale = domega_ / (2.0 * std::numbers::pi);
    for (std::size_t j = 0; j < times.size(); ++j) {
        const std::size_t n = j * stride_;
        const double t = static_cast<double>(n) * dt_;
        const std::complex<double> sum{buf[n][0], buf[n][1]};
        out[j] = scale * std::exp(std::complex<double>{eps_ * t, omega0_ * t}) * sum;
    }
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        fftw_destroy_plan(plan);
    }
    fftw_free(buf);
    return out;
}

std::complex<double> BromwichGrid::invert_at(const std::vector<std::complex<double>>& values, double t) const {
    detail::require(values.size() == points_, "sample count does not match the Bromwich grid");
    const std::complex<double> rot = std::exp(std::complex<double>{0.0, domega_ * t});
    std::complex<double> acc{0.0, 0.0};
    std::complex<double> phase{1.0, 0.0};
    for (std::size_t m = 0; m < points_; ++m) {
        // Re-seed the phase recurrence now and then to stop error growth.
        if ((m & 1023u) == 0) phase = std::exp(std::complex<double>{0.0, domega_ * static_cast<double>(m) * t});
        acc += values[m] * phase;
        phase *= rot;
    }
    const double scale = domega_ / (2.0 * std::numbers::pi);
    return scale * std::exp(std::complex<double>{eps_ * t, omega0_ * t}) * acc;
}

std::vector<std::complex<double>> invert_laplace(const std::function<std::complex<double>(std::complex<double>)>& fbar,
                                                 const std::vector<double>& times,
                                                 const BromwichOptions& opts, const PoleSum* subtract) {
    const BromwichGrid grid(opts, times);
    PoleSum approx;
    if (subtract != nullptr) {
        for (const auto& lam : subtract->eigenvalues) {
            if (!(lam.imag() < grid.abscissa())) {
                throw ValidationError("subtracted pole lies on or right of the Bromwich contour");
            }
        }
        approx = *subtract;
    } else {
        // s fbar(s) ~ m0 + m1/s far out on the contour; m0/(s + a) with
        // a = -m1/m0 reproduces f(0) and f'(0).
        const double far = 100.0 * (grid.half_span() + std::abs(opts.center) + 1.0);
        const std::complex<double> s1{grid.abscissa(), far};
        const std::complex<double> s2{grid.abscissa(), -far};
        const std::complex<double> g1 = s1 * fbar(s1);
        const std::complex<double> g2 = s2 * fbar(s2);
        const std::complex<double> m1 = (g1 - g2) / (1.0 / s1 - 1.0 / s2);
        const std::complex<double> m0 = g1 - m1 / s1;
        if (std::abs(m0) > 0.0) {
            const std::complex<double> a = -m1 / m0;
            // pole of m0/(s + a) at s = -a; inverse m0 exp(-a t) = w exp(-i lambda t), lambda = -i a
            const std::complex<double> lambda = std::complex<double>{0.0, -1.0} * a;
            if (lambda.imag() < grid.abscissa()) {
                approx.eigenvalues.push_back(lambda);
                approx.weights.push_back(m0);
            }
        }
    }

    std::vector<std::complex<double>> values(grid.size());
    parallel_for(grid.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t m = b; m < e; ++m) {
            const auto s = grid.node(m);
            values[m] = fbar(s) - approx.laplace_value(s);
        }
    }, 4096);
    auto out = grid.invert(values, times);
    for (std::size_t j = 0; j < times.size(); ++j) out[j] += approx.time_value(times[j]);
    return out;
}

}  // namespace drivenmem
