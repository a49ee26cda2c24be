#include "drivenmem/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "drivenmem/error.hpp"
#include "drivenmem/parallel.hpp"

namespace drivenmem {

namespace {

void check_cavity(const CavitySpec& c) {
    detail::require_finite(c.frequency, "cavity frequency");
    detail::require_finite(c.kappa, "kappa");
    detail::require(c.kappa >= 0.0, "kappa must be non-negative");
}

[[noreturn]] void throw_pole(const char* where, double pole) {
    std::ostringstream msg;
    msg.precision(17);
    msg << where << ": evaluation point sits on the spin pole at " << pole;
    throw PoleError(msg.str(), pole);
}

}  // namespace

SingleExcitationModel::SingleExcitationModel(CavitySpec cavity, Ensemble ensemble)
    : cavity_(cavity), ensemble_(std::move(ensemble)) {
    check_cavity(cavity_);
}

cplx SingleExcitationModel::cavity_diagonal() const noexcept {
    return {cavity_.frequency, -0.5 * cavity_.kappa};
}

cplx SingleExcitationModel::spin_diagonal(std::size_t k) const {
    return {ensemble_.frequencies().at(k), -0.5 * ensemble_.gamma()};
}

Eigen::MatrixXcd SingleExcitationModel::dense() const {
    const auto n = static_cast<Eigen::Index>(dimension());
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    h(0, 0) = cavity_diagonal();
    for (std::size_t k = 0; k < ensemble_.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k + 1);
        h(i, i) = spin_diagonal(k);
        h(0, i) = h(i, 0) = ensemble_.couplings()[k];
    }
    return h;
}

ArrowheadSpec SingleExcitationModel::arrowhead() const {
    return {cavity_diagonal(), ensemble_.frequencies(), ensemble_.couplings(), 0.5 * ensemble_.gamma()};
}

Eigen::VectorXcd SingleExcitationModel::apply(const Eigen::VectorXcd& v) const {
    if (static_cast<std::size_t>(v.size()) != dimension()) {
        throw ValidationError("state dimension does not match the model");
    }
    Eigen::VectorXcd out(v.size());
    const auto& w = ensemble_.frequencies();
    const auto& g = ensemble_.couplings();
    const cplx spin_damp{0.0, -0.5 * ensemble_.gamma()};
    cplx top = cavity_diagonal() * v(0);
    for (std::size_t k = 0; k < w.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k + 1);
        top += g[k] * v(i);
        out(i) = g[k] * v(0) + (w[k] + spin_damp) * v(i);
    }
    out(0) = top;
    return out;
}

SingleExcitationModel build_model(const CavitySpec& cavity, const Ensemble& ensemble) {
    return SingleExcitationModel(cavity, ensemble);
}

std::string to_string(Backend b) {
    switch (b) {
        case Backend::dense: return "dense";
        case Backend::arrowhead: return "arrowhead";
        default: return "auto";
    }
}

Backend backend_from_string(const std::string& s) {
    if (s == "auto") return Backend::automatic;
    if (s == "dense") return Backend::dense;
    if (s == "arrowhead") return Backend::arrowhead;
    throw ValidationError("unknown backend '" + s + "' (expected auto, dense or arrowhead)");
}

std::unique_ptr<ModalDecomposition> decompose(const SingleExcitationModel& model, Backend backend) {
    if (backend == Backend::automatic) {
        backend = model.dimension() <= 400 ? Backend::dense : Backend::arrowhead;
    }
    if (backend == Backend::dense) return dense_decomposition(model.dense());
    return arrowhead_decomposition(model.arrowhead());
}

// ---------------------------------------------------------------------------

cplx transmission(const SingleExcitationModel& model, double omega, Kernel kernel) {
    detail::require_finite(omega, "probe frequency");
    const auto& cav = model.cavity();
    if (cav.kappa == 0.0) return {0.0, 0.0};
    const auto& ens = model.ensemble();
    const auto& w = ens.frequencies();
    const auto& g = ens.couplings();
    const double half_gamma = 0.5 * ens.gamma();
    cplx self{0.0, 0.0};
    if (kernel == Kernel::discrete) {
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (g[k] == 0.0) continue;
            const cplx d{w[k] - omega, -half_gamma};
            if (d == cplx{}) throw_pole("transmission", w[k]);
            self += g[k] * g[k] / d;
        }
    } else {
        // Cells tile the line: inner boundaries halfway between neighbouring
        // spins, outer ones half a cell width beyond the end spins.
        const auto& h = ens.cell_widths();
        const auto& g2 = ens.coupling_squares();
        const std::size_t n = w.size();
        auto lower = [&](std::size_t k) { return k == 0 ? w[0] - 0.5 * h[0] : 0.5 * (w[k - 1] + w[k]); };
        auto upper = [&](std::size_t k) { return k + 1 == n ? w[k] + 0.5 * h[k] : 0.5 * (w[k] + w[k + 1]); };
        auto density = [&](std::size_t k) {
            const double width = upper(k) - lower(k);
            return width > 0.0 ? g2[k] / width : 0.0;
        };
        // -0.0 keeps the gamma = 0 limit on the lower side of the branch cut.
        const double im = half_gamma > 0.0 ? -half_gamma : -0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (g[k] == 0.0) continue;
            const double lo = lower(k), hi = upper(k);
            if (!(hi > lo)) {
                const cplx d{w[k] - omega, -half_gamma};
                if (d == cplx{}) throw_pole("transmission", w[k]);
                self += g2[k] / d;
                continue;
            }
            const double rho = density(k);
            const double centre = 0.5 * (lo + hi);
            // Linear density across the cell (centred slope, same cell mass,
            // never negative). A flat block leaves an O(h log(h/gamma)) error
            // next to the probe frequency.
            double slope = 0.0;
            if (k > 0 && k + 1 < n) {
                const double c_prev = 0.5 * (lower(k - 1) + upper(k - 1));
                const double c_next = 0.5 * (lower(k + 1) + upper(k + 1));
                slope = (density(k + 1) - density(k - 1)) / (c_next - c_prev);
                const double cap = 2.0 * rho / (hi - lo);
                slope = std::clamp(slope, -cap, cap);
            }
            const double a = lo - omega;
            const double b = hi - omega;
            if (im == 0.0 && (a == 0.0 || b == 0.0)) throw_pole("transmission", omega);
            const cplx log_ratio = std::log(cplx{b, im}) - std::log(cplx{a, im});
            // integral of (rho + slope (x - c)) / (x - z) over the cell, z = i gamma/2
            const cplx z_minus_c{-(centre - omega), -im};
            self += rho * log_ratio + slope * ((hi - lo) + z_minus_c * log_ratio);
        }
    }
    const cplx denom = cplx{cav.frequency - omega, -0.5 * cav.kappa} - self;
    return cplx{0.0, 0.5 * cav.kappa} / denom;
}

std::vector<Peak> find_peaks(const std::vector<double>& x, const std::vector<double>& y,
                             std::size_t max_peaks, double min_relative_height) {
    const std::size_t n = x.size();
    std::vector<Peak> peaks;
    if (n < 3 || y.size() != n) return peaks;
    const double top = *std::max_element(y.begin(), y.end());
    if (!(top > 0.0)) return peaks;

    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] >= min_relative_height * top) idx.push_back(i);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
    if (idx.size() > max_peaks) idx.resize(max_peaks);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i : idx) {
        // Parabola through the three samples around the maximum.
        const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
        const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
        const double d01 = (y1 - y0) / (x1 - x0);
        const double d12 = (y2 - y1) / (x2 - x1);
        const double curv = (d12 - d01) / (x2 - x0);
        double pos = x1, height = y1;
        if (curv < 0.0) {
            const double slope = d01 - curv * (x0 + x1);
            const double c = y1 - (slope + curv * x1) * x1;
            pos = std::clamp(-slope / (2.0 * curv), x0, x2);
            height = std::max(y1, c + slope * pos + curv * pos * pos);
        }
        const double half = 0.5 * height;
        double left = nan, right = nan;
        for (std::size_t j = i; j > 0; --j) {
            if (y[j - 1] < half) {
                left = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1]);
                break;
            }
        }
        for (std::size_t j = i; j + 1 < n; ++j) {
            if (y[j + 1] < half) {
                right = x[j] + (y[j] - half) * (x[j + 1] - x[j]) / (y[j] - y[j + 1]);
                break;
            }
        }
        peaks.push_back({pos, height, right - left});
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.position < b.position; });
    return peaks;
}

TransmissionSpectrum transmission_spectrum(const SingleExcitationModel& model,
                                           const std::vector<double>& omega_grid, Kernel kernel) {
    detail::require(omega_grid.size() >= 3, "transmission grid needs at least 3 points");
    for (std::size_t i = 1; i < omega_grid.size(); ++i) {
        detail::require(omega_grid[i] > omega_grid[i - 1], "transmission grid must be strictly increasing");
    }
    TransmissionSpectrum out;
    out.omega = omega_grid;
    out.t.resize(omega_grid.size());
    out.abs2.resize(omega_grid.size());
    parallel_for(omega_grid.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            out.t[i] = transmission(model, omega_grid[i], kernel);
            out.abs2[i] = std::norm(out.t[i]);
        }
    }, 64);
    out.peaks = find_peaks(out.omega, out.abs2);
    return out;
}

// ---------------------------------------------------------------------------

AmplitudeTrajectory evolve(const ModalDecomposition& modes, const Eigen::VectorXcd& initial,
                           const std::vector<double>& times) {
    detail::require(static_cast<std::size_t>(initial.size()) == modes.dimension(),
                    "initial state dimension does not match the model");
    detail::require(initial.squaredNorm() <= 1.0 + 1e-12, "initial state norm exceeds 1");
    for (double t : times) detail::require_finite(t, "time");

    Eigen::VectorXcd cavity = Eigen::VectorXcd::Zero(initial.size());
    cavity(0) = 1.0;
    const auto w_overlap = modes.mode_weights(initial, initial);
    const auto w_cavity = modes.mode_weights(cavity, initial);
    const auto& lambda = modes.eigenvalues();

    AmplitudeTrajectory out;
    out.t = times;
    out.alpha0.resize(times.size());
    out.f.resize(times.size());
    out.F.resize(times.size());
    parallel_for(times.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            out.alpha0[i] = modal_sum(lambda, w_cavity, times[i]);
            out.f[i] = modal_sum(lambda, w_overlap, times[i]);
            out.F[i] = std::norm(out.f[i]);
        }
    }, 8);
    return out;
}

AmplitudeTrajectory evolve(const SingleExcitationModel& model, const Eigen::VectorXcd& initial,
                           const std::vector<double>& times, Backend backend) {
    detail::require(static_cast<std::size_t>(initial.size()) == model.dimension(),
                    "initial state dimension does not match the model");
    const auto modes = decompose(model, backend);
    return evolve(*modes, initial, times);
}

// ---------------------------------------------------------------------------

cplx memory_kernel(const SingleExcitationModel& model, cplx s) {
    const auto& ens = model.ensemble();
    const auto& w = ens.frequencies();
    const auto& g2 = ens.coupling_squares();
    // s + i(w_k - i gamma/2) = re + i(s.im + w_k); blocks keep Eigen's
    // vectorized reductions on stack storage.
    const double re = s.real() + 0.5 * ens.gamma();
    const double re2 = re * re;
    const double shift = s.imag();
    constexpr Eigen::Index block = 512;
    double buf[block];
    double sum_re = 0.0, sum_im = 0.0;
    const auto n = static_cast<Eigen::Index>(w.size());
    for (Eigen::Index b = 0; b < n; b += block) {
        const Eigen::Index m = std::min(block, n - b);
        const Eigen::Map<const Eigen::ArrayXd> wk(w.data() + b, m);
        const Eigen::Map<const Eigen::ArrayXd> gk(g2.data() + b, m);
        Eigen::Map<Eigen::ArrayXd> inv(buf, m);
        inv = gk / (re2 + (wk + shift).square());
        sum_re += inv.sum();
        sum_im += (inv * (wk + shift)).sum();
    }
    if (!std::isfinite(sum_re) || !std::isfinite(sum_im)) {
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (re == 0.0 && shift + w[k] == 0.0) throw_pole("memory kernel", w[k]);
        }
    }
    return {re * sum_re, -sum_im};
}

cplx cavity_resolvent(const SingleExcitationModel& model, cplx s) {
    const cplx m = memory_kernel(model, s);
    const cplx d = s + cplx{0.0, 1.0} * model.cavity_diagonal() + m;
    if (d == cplx{}) throw PoleError("cavity resolvent: evaluation point is a pole", s.imag());
    return 1.0 / d;
}

cplx laplace_overlap_from_kernel(cplx kernel, cplx s, cplx cavity_diagonal, double collective,
                                 double theta) {
    detail::require(collective > 0.0, "overlap transform needs a coupled ensemble");
    const double c = std::cos(0.5 * theta);
    const double sn = std::sin(0.5 * theta);
    const cplx d = s + cplx{0.0, 1.0} * cavity_diagonal + kernel;
    if (d == cplx{}) throw PoleError("overlap transform: evaluation point is a pole", s.imag());
    const cplx T = 1.0 / d;
    const cplx a0 = (c + cplx{0.0, sn / collective} * kernel) * T;
    return a0 * (c + cplx{0.0, sn / collective} * kernel) + sn * sn * kernel / (collective * collective);
}

cplx laplace_overlap(const SingleExcitationModel& model, double theta, cplx s) {
    detail::require_finite(theta, "theta");
    return laplace_overlap_from_kernel(memory_kernel(model, s), s, model.cavity_diagonal(),
                                       model.ensemble().collective_coupling(), theta);
}

// ---------------------------------------------------------------------------

cplx PoleSum::time_value(double t) const { return modal_sum(eigenvalues, weights, t); }

cplx PoleSum::laplace_value(cplx s) const {
    cplx acc{0.0, 0.0};
    for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
        acc += weights[j] / (s + cplx{0.0, 1.0} * eigenvalues[j]);
    }
    return acc;
}

PoleSum lanczos_approximant(const SingleExcitationModel& model, const Eigen::VectorXd& psi,
                            std::size_t steps, double max_imag) {
    detail::require(static_cast<std::size_t>(psi.size()) == model.dimension(),
                    "Lanczos start vector dimension does not match the model");
    detail::require(steps >= 1, "Lanczos needs at least one step");
    const double norm2 = psi.squaredNorm();
    detail::require(norm2 > 0.0, "Lanczos start vector is zero");

    // Complex-symmetric Lanczos in the bilinear form x^T y, fully
    // re-orthogonalized (the basis is tiny).
    std::vector<Eigen::VectorXcd> q;
    std::vector<cplx> alpha, beta;
    q.push_back(psi.cast<cplx>() / std::sqrt(norm2));
    for (std::size_t j = 0; j < steps; ++j) {
        Eigen::VectorXcd w = model.apply(q[j]);
        alpha.push_back((q[j].transpose() * w)(0));
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& v : q) w -= (v.transpose() * w)(0) * v;
        }
        if (j + 1 == steps) break;
        const cplx b = std::sqrt((w.transpose() * w)(0));
        if (std::abs(b) <= 1e-12 * std::sqrt(w.squaredNorm() + 1e-300) || std::abs(b) < 1e-14) break;
        beta.push_back(b);
        q.push_back(w / b);
    }

    for (std::size_t k = alpha.size(); k >= 1; --k) {
        Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < k; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            T(ii, ii) = alpha[i];
            if (i + 1 < k) T(ii, ii + 1) = T(ii + 1, ii) = beta[i];
        }
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(T, true);
        if (es.info() != Eigen::Success) continue;
        bool ok = true;
        for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
            if (!(es.eigenvalues()(j).imag() < max_imag)) ok = false;
        }
        const Eigen::MatrixXcd V = es.eigenvectors();
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(V);
        if (!ok || !(lu.rcond() > 1e-10)) continue;
        const Eigen::MatrixXcd Vinv = lu.inverse();
        PoleSum out;
        for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
            out.eigenvalues.push_back(es.eigenvalues()(j));
            out.weights.push_back(norm2 * V(0, j) * Vinv(j, 0));
        }
        return out;
    }
    return {};
}

}  // namespace drivenmem
