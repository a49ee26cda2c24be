#include "drivenmem/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "drivenmem/error.hpp"
#include "drivenmem/quadrature.hpp"

namespace drivenmem {

using detail::require;
using detail::require_finite;
using std::numbers::pi;

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Lorentzian

LorentzianDensity::LorentzianDensity(double width, double center)
    : width_(width), center_(center) {
    require_finite(width, "width");
    require_finite(center, "center");
    require(width > 0.0, "Lorentzian width must be positive");
}

double LorentzianDensity::pdf(double x) const {
    return 2.0 * width_ / (pi * (width_ * width_ + 4.0 * x * x));
}

double LorentzianDensity::cdf(double x) const {
    if (x > 0.0) return 1.0 - survival(x);
    return std::atan(width_ / (2.0 * std::abs(x))) / pi;
}

double LorentzianDensity::survival(double x) const {
    if (x <= 0.0) return 1.0 - cdf(x);
    return std::atan(width_ / (2.0 * x)) / pi;
}

double LorentzianDensity::quantile(double q) const {
    require(q > 0.0 && q < 1.0, "quantile level must lie in (0, 1)");
    return 0.5 * width_ * std::tan(pi * (q - 0.5));
}

double LorentzianDensity::sample(std::mt19937_64& rng) const {
    double u = uniform01(rng);
    while (u == 0.0) u = uniform01(rng);
    return center_ + quantile(u);
}

double lorentzian_pdf(const LorentzianDensity& den, double detuning) {
    return den.pdf(detuning);
}

// ---------------------------------------------------------------------------
// Dressing

DressedSpin dress_spin(double detuning, double drive, double bare_coupling) {
    require_finite(detuning, "detuning");
    require_finite(drive, "drive");
    require_finite(bare_coupling, "coupling");
    require(drive > 0.0, "dressing requires a positive drive amplitude");
    const double omega_bar = std::hypot(detuning, drive);
    return {omega_bar, 0.5 * bare_coupling * (1.0 + detuning / omega_bar)};
}

namespace {

// sqrt((4 w^2 + W^2)(w^2 - b^2)) with the difference of squares factored.
double mu_denominator(double b, double w, double width) {
    return std::sqrt((4.0 * w * w + width * width) * (w - b) * (w + b));
}

// pi/2 - mu(b, w) without the cancellation near w = b.
double mu_complement(double b, double w, double width) {
    return std::atan2(mu_denominator(b, w, width), b * width);
}

}  // namespace

double mu_kernel(double drive, double omega_bar, double width) {
    require_finite(drive, "drive");
    require_finite(omega_bar, "omega_bar");
    require(width > 0.0, "width must be positive");
    require(drive > 0.0, "drive must be positive");
    if (drive > omega_bar) throw DomainError("mu_kernel requires drive <= omega_bar");
    if (drive == omega_bar) return pi / 2;
    return std::atan2(drive * width, mu_denominator(drive, omega_bar, width));
}

// ---------------------------------------------------------------------------
// Dressed density

DressedDensity::DressedDensity(double width, DriveAmplitudeRange drive)
    : width_(width), drive_(drive) {
    require_finite(width, "width");
    require(width > 0.0, "width must be positive");
    build_cache();
}

double DressedDensity::pdf(double w) const {
    if (std::isnan(w)) throw ValidationError("dressed_pdf: NaN frequency");
    const double bmin = drive_.b_min();
    const double bmax = drive_.b_max();
    if (w < bmin) return 0.0;
    const double W = width_;
    if (homogeneous()) {
        if (w == bmin) return std::numeric_limits<double>::infinity();
        const double s2 = (w - bmin) * (w + bmin);
        return 4.0 * w * W / (pi * std::sqrt(s2) * (W * W + 4.0 * s2));
    }
    const double prefactor = 4.0 * w / (pi * drive_.spread() * std::sqrt(4.0 * w * w + W * W));
    if (w <= bmax) return prefactor * mu_complement(bmin, w, W);
    // mu(bmax) - mu(bmin) = atan(x) - atan(y) = atan((x - y)/(1 + x y))
    const double x = bmax * W / mu_denominator(bmax, w, W);
    const double y = bmin * W / mu_denominator(bmin, w, W);
    if (!std::isfinite(x)) return prefactor * mu_complement(bmin, w, W);
    return prefactor * std::atan((x - y) / (1.0 + x * y));
}

namespace {

// Probability that sqrt(D^2 + B^2) <= w for a Lorentzian detuning D at fixed B.
double fixed_drive_cdf(double w, double b, double width) {
    if (w <= b) return 0.0;
    return (2.0 / pi) * std::atan(2.0 * std::sqrt((w - b) * (w + b)) / width);
}

double fixed_drive_survival(double w, double b, double width) {
    if (w <= b) return 1.0;
    return (2.0 / pi) * std::atan(width / (2.0 * std::sqrt((w - b) * (w + b))));
}

quad::Options cdf_quad_options() {
    quad::Options o;
    o.rel_tol = 1e-14;
    o.abs_tol = 1e-16;
    o.max_intervals = 2000;
    return o;
}

}  // namespace

double DressedDensity::cdf(double w) const {
    if (std::isnan(w)) throw ValidationError("dressed_cdf: NaN frequency");
    const double bmin = drive_.b_min();
    if (w <= bmin) return 0.0;
    if (w > drive_.b_max()) return 1.0 - survival(w);
    if (homogeneous()) return fixed_drive_cdf(w, bmin, width_);
    const double hi = std::min(w, drive_.b_max());
    auto integrand = [&](double b) { return fixed_drive_cdf(w, b, width_); };
    return quad::integrate(integrand, bmin, hi, cdf_quad_options()).value / drive_.spread();
}

double DressedDensity::survival(double w) const {
    if (std::isnan(w)) throw ValidationError("dressed_cdf: NaN frequency");
    if (w <= drive_.b_max()) return 1.0 - cdf(w);
    if (homogeneous()) return fixed_drive_survival(w, drive_.b_min(), width_);
    auto integrand = [&](double b) { return fixed_drive_survival(w, b, width_); };
    return quad::integrate(integrand, drive_.b_min(), drive_.b_max(), cdf_quad_options()).value /
           drive_.spread();
}

void DressedDensity::build_cache() {
    const double bmin = drive_.b_min();
    const double bmax = drive_.b_max();
    const double W = width_;
    std::vector<double> xs;
    // Square-root clustering at the lower edge, uniform through the band,
    // geometric through the tail.
    constexpr int kEdge = 64;
    const double edge_span = (bmax - bmin) + 2.0 * W;
    for (int i = 0; i <= kEdge; ++i) {
        const double u = static_cast<double>(i) / kEdge;
        xs.push_back(bmin + edge_span * u * u);
    }
    double x = xs.back();
    double step = edge_span / kEdge;
    while (x < bmin + 1e7 * W) {
        x += step;
        step *= 1.08;
        xs.push_back(x);
    }
    cache_x_ = xs;
    cache_cdf_.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) cache_cdf_[i] = cdf(xs[i]);
}

double DressedDensity::quantile(double q) const {
    require(q > 0.0 && q < 1.0, "quantile level must lie in (0, 1)");
    const bool upper = q > 0.5;
    // Work with the tail probability in the upper half to keep precision.
    auto residual = [&](double w) { return upper ? (1.0 - q) - survival(w) : cdf(w) - q; };

    double lo, hi;
    auto it = std::lower_bound(cache_cdf_.begin(), cache_cdf_.end(), q);
    if (it == cache_cdf_.end()) {
        lo = cache_x_.back();
        hi = lo;
        do {
            hi = 2.0 * hi + width_ / (1.0 - q);
        } while (residual(hi) < 0.0);
    } else {
        const auto idx = static_cast<std::size_t>(it - cache_cdf_.begin());
        hi = cache_x_[idx];
        lo = idx == 0 ? drive_.b_min() : cache_x_[idx - 1];
    }

    // Safeguarded Newton on the monotone cdf with the closed-form density.
    double w = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double r = residual(w);
        if (r == 0.0) return w;
        if (r > 0.0) hi = w; else lo = w;
        const double d = pdf(w);
        double next = (d > 0.0 && std::isfinite(d)) ? w - r / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - w) <= 1e-15 * std::max(1.0, std::abs(w)) || hi - lo <= 1e-15 * hi) {
            return next;
        }
        w = next;
    }
    return w;
}

double DressedDensity::sample(std::mt19937_64& rng) const {
    double u = uniform01(rng);
    while (u == 0.0) u = uniform01(rng);
    const double detuning = 0.5 * width_ * std::tan(pi * (u - 0.5));
    const double b = drive_.b_min() + drive_.spread() * uniform01(rng);
    return std::hypot(detuning, b);
}

double dressed_pdf(const DressedDensity& den, double omega_bar) { return den.pdf(omega_bar); }
double dressed_cdf(const DressedDensity& den, double omega_bar) { return den.cdf(omega_bar); }

// ---------------------------------------------------------------------------
// Variant helpers

double density_pdf(const SpectralDensity& den, double omega) {
    return std::visit(
        [omega](const auto& d) {
            if constexpr (std::is_same_v<std::decay_t<decltype(d)>, LorentzianDensity>) {
                return d.pdf_at(omega);
            } else {
                return d.pdf(omega);
            }
        },
        den);
}

double density_cdf(const SpectralDensity& den, double omega) {
    return std::visit(
        [omega](const auto& d) {
            if constexpr (std::is_same_v<std::decay_t<decltype(d)>, LorentzianDensity>) {
                return d.cdf_at(omega);
            } else {
                return d.cdf(omega);
            }
        },
        den);
}

double density_quantile(const SpectralDensity& den, double q) {
    return std::visit(
        [q](const auto& d) {
            if constexpr (std::is_same_v<std::decay_t<decltype(d)>, LorentzianDensity>) {
                return d.quantile_at(q);
            } else {
                return d.quantile(q);
            }
        },
        den);
}

double density_reference(const SpectralDensity& den) {
    if (const auto* l = std::get_if<LorentzianDensity>(&den)) return l->center();
    return std::get<DressedDensity>(den).reference();
}

namespace {

double density_width(const SpectralDensity& den) {
    return std::visit([](const auto& d) { return d.width(); }, den);
}

// Mass of the density inside [lo, hi], computed from whichever tail keeps
// the most digits.
double mass_between(const SpectralDensity& den, double lo, double hi) {
    if (const auto* l = std::get_if<LorentzianDensity>(&den)) {
        return l->cdf_at(hi) - l->cdf_at(lo);
    }
    const auto& d = std::get<DressedDensity>(den);
    return d.survival(lo) - d.survival(hi);
}

}  // namespace

std::string to_string(Scheme s) { return s == Scheme::quantile ? "quantile" : "grid"; }

Scheme scheme_from_string(const std::string& s) {
    if (s == "quantile") return Scheme::quantile;
    if (s == "grid") return Scheme::grid;
    throw ValidationError("unknown discretization scheme '" + s + "'");
}

Window default_window(const SpectralDensity& den) {
    const double W = density_width(den);
    if (const auto* l = std::get_if<LorentzianDensity>(&den)) {
        return {l->center() - 200.0 * W, l->center() + 200.0 * W};
    }
    const double bmin = std::get<DressedDensity>(den).drive().b_min();
    return {bmin, bmin + 200.0 * W};
}

// ---------------------------------------------------------------------------
// Ensemble

Ensemble Ensemble::from_spins(std::vector<double> frequencies, std::vector<double> couplings,
                              double gamma, std::vector<double> cell_widths,
                              EnsembleMetadata meta) {
    require(!frequencies.empty(), "ensemble needs at least one spin");
    require(frequencies.size() == couplings.size(), "frequency/coupling length mismatch");
    require(cell_widths.empty() || cell_widths.size() == frequencies.size(),
            "cell width length mismatch");
    require_finite(gamma, "gamma");
    require(gamma >= 0.0, "spin damping must be non-negative");

    const std::size_t n = frequencies.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frequencies[a] < frequencies[b]; });

    Ensemble e;
    e.frequencies_.resize(n);
    e.couplings_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        e.frequencies_[i] = frequencies[order[i]];
        e.couplings_[i] = couplings[order[i]];
    }
    if (!cell_widths.empty()) {
        e.cell_widths_.resize(n);
        for (std::size_t i = 0; i < n; ++i) e.cell_widths_[i] = cell_widths[order[i]];
    } else {
        e.cell_widths_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double left = i > 0 ? e.frequencies_[i] - e.frequencies_[i - 1] : 0.0;
            const double right = i + 1 < n ? e.frequencies_[i + 1] - e.frequencies_[i] : 0.0;
            if (n == 1) break;
            if (i == 0) e.cell_widths_[i] = right;
            else if (i + 1 == n) e.cell_widths_[i] = left;
            else e.cell_widths_[i] = 0.5 * (left + right);
        }
    }
    e.gamma_ = gamma;
    e.update_squares();
    e.meta_ = std::move(meta);
    e.validate();
    return e;
}

Ensemble Ensemble::single(double frequency, double coupling, double gamma) {
    return from_spins({frequency}, {coupling}, gamma, {0.0}, {"single", 0.0, false});
}

void Ensemble::update_squares() {
    squares_.resize(couplings_.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < couplings_.size(); ++i) {
        squares_[i] = couplings_[i] * couplings_[i];
        sum += squares_[i];
    }
    collective_ = std::sqrt(sum);
}

void Ensemble::validate() const {
    for (std::size_t i = 0; i < frequencies_.size(); ++i) {
        require_finite(frequencies_[i], "spin frequency");
        require_finite(couplings_[i], "spin coupling");
        require(couplings_[i] >= 0.0, "spin couplings must be non-negative");
        require(cell_widths_[i] >= 0.0, "cell widths must be non-negative");
    }
}

Ensemble Ensemble::shifted(double offset) const {
    Ensemble e = *this;
    for (double& w : e.frequencies_) w += offset;
    return e;
}

Ensemble Ensemble::scaled(double factor) const {
    require(factor >= 0.0, "coupling scale must be non-negative");
    Ensemble e = *this;
    for (double& g : e.couplings_) g *= factor;
    e.update_squares();
    return e;
}

Ensemble Ensemble::with_gamma(double gamma) const {
    require(gamma >= 0.0, "spin damping must be non-negative");
    Ensemble e = *this;
    e.gamma_ = gamma;
    return e;
}

double Ensemble::mean_frequency() const {
    if (collective_ == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < size(); ++i) acc += couplings_[i] * couplings_[i] * frequencies_[i];
    return acc / (collective_ * collective_);
}

Ensemble discretize(const SpectralDensity& den, std::size_t n, double collective_coupling,
                    Scheme scheme, std::optional<Window> window, double gamma) {
    require(n >= 2, "discretize needs at least two spins (use single_spin_at_median for one)");
    require_finite(collective_coupling, "collective coupling");
    require(collective_coupling > 0.0, "collective coupling must be positive");

    std::vector<double> freqs(n), couplings(n), widths(n);
    EnsembleMetadata meta;
    meta.scheme = to_string(scheme);

    if (scheme == Scheme::quantile) {
        const double nd = static_cast<double>(n);
        std::vector<double> edges(n + 1);
        for (std::size_t k = 0; k < n; ++k) {
            freqs[k] = density_quantile(den, (static_cast<double>(k) + 0.5) / nd);
        }
        for (std::size_t k = 1; k < n; ++k) {
            edges[k] = density_quantile(den, static_cast<double>(k) / nd);
        }
        edges[0] = freqs[0] - (edges[1] - freqs[0]);
        edges[n] = freqs[n - 1] + (freqs[n - 1] - edges[n - 1]);
        if (const auto* d = std::get_if<DressedDensity>(&den)) {
            edges[0] = std::max(edges[0], d->drive().b_min());
        }
        for (std::size_t k = 0; k < n; ++k) widths[k] = edges[k + 1] - edges[k];
        couplings.assign(n, collective_coupling / std::sqrt(nd));
        meta.truncated_mass = 0.0;
    } else {
        const Window w = window.value_or(default_window(den));
        require(w.hi > w.lo, "window must have positive length");
        const double h = (w.hi - w.lo) / static_cast<double>(n);
        double total = 0.0;
        std::vector<double> weights(n);
        double edge_lo = w.lo;
        double surv_lo = 0.0;
        const auto* dressed = std::get_if<DressedDensity>(&den);
        if (dressed) surv_lo = dressed->survival(edge_lo);
        for (std::size_t k = 0; k < n; ++k) {
            const double edge_hi = w.lo + h * static_cast<double>(k + 1);
            freqs[k] = w.lo + h * (static_cast<double>(k) + 0.5);
            widths[k] = h;
            // Cell mass; equals p(w_k) h up to O(h^3) and stays finite next to
            // integrable edge singularities.
            double m;
            if (dressed) {
                const double surv_hi = dressed->survival(edge_hi);
                m = surv_lo - surv_hi;
                surv_lo = surv_hi;
            } else {
                m = mass_between(den, edge_lo, edge_hi);
            }
            weights[k] = std::max(m, 0.0);
            total += weights[k];
            edge_lo = edge_hi;
        }
        require(total > 0.0, "window contains no density mass");
        for (std::size_t k = 0; k < n; ++k) {
            couplings[k] = collective_coupling * std::sqrt(weights[k] / total);
        }
        meta.truncated_mass = std::max(0.0, 1.0 - mass_between(den, w.lo, w.hi));
    }
    meta.window_warning = meta.truncated_mass > 1e-3;

    Ensemble e = Ensemble::from_spins(std::move(freqs), std::move(couplings), gamma,
                                      std::move(widths), meta);
    // Exact renormalization so that sum g^2 hits the target.
    return e.scaled(collective_coupling / e.collective_coupling());
}

Ensemble single_spin_at_median(const SpectralDensity& den, double collective_coupling,
                               double gamma) {
    require(collective_coupling > 0.0, "collective coupling must be positive");
    return Ensemble::single(density_quantile(den, 0.5), collective_coupling, gamma);
}

}  // namespace drivenmem
