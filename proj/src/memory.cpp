#include "drivenmem/memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drivenmem/error.hpp"
#include "drivenmem/parallel.hpp"

namespace drivenmem {

namespace {

constexpr std::size_t kLanczosSteps = 10;
// Margin kept around the spectrum on the Bromwich band.
constexpr double kBandMargin = 200.0;

struct Band {
    double center;
    double half;
};

Band band_for(const Ensemble& ens, double cavity_lo, double cavity_hi, double coupling) {
    const auto& w = ens.frequencies();
    double lo = std::min(w.front(), cavity_lo - 2.0 * coupling);
    double hi = std::max(w.back(), cavity_hi + 2.0 * coupling);
    // The pole approximant leaves a remainder falling like (extent/distance)^13,
    // so the margin grows with the spectrum.
    const double margin = std::max(kBandMargin, hi - lo);
    lo -= margin;
    hi += margin;
    return {0.5 * (lo + hi), std::max(400.0, 0.5 * (hi - lo))};
}

SpectralDensity scenario_density(const MemoryScenario& sc) {
    if (sc.drive) return DressedDensity(sc.width, *sc.drive);
    return LorentzianDensity(sc.width, 0.0);
}

}  // namespace

PolaritonState polariton_state(double detuning, double collective) {
    detail::require_finite(detuning, "detuning");
    detail::require(collective > 0.0 && std::isfinite(collective), "collective coupling must be positive");
    const double theta = std::atan2(2.0 * collective, detuning);
    return {detuning, theta, std::cos(0.5 * theta), -std::sin(0.5 * theta)};
}

Eigen::VectorXd polariton_vector(const PolaritonState& state, const Ensemble& ensemble) {
    const double omega = ensemble.collective_coupling();
    detail::require(omega > 0.0, "polariton needs a coupled ensemble");
    Eigen::VectorXd v(static_cast<Eigen::Index>(ensemble.size() + 1));
    v(0) = state.cavity_amplitude;
    const auto& g = ensemble.couplings();
    for (std::size_t k = 0; k < g.size(); ++k) {
        v(static_cast<Eigen::Index>(k + 1)) = state.spin_amplitude * g[k] / omega;
    }
    return v;
}

std::string to_string(Method m) { return m == Method::eigen ? "eigen" : "bromwich"; }

Method method_from_string(const std::string& s) {
    if (s == "eigen") return Method::eigen;
    if (s == "bromwich" || s == "bromwich-fft") return Method::bromwich;
    throw ValidationError("unknown method '" + s + "' (expected eigen or bromwich)");
}

void MemoryScenario::validate() const {
    detail::require(width > 0.0 && std::isfinite(width), "width must be positive");
    detail::require(collective > 0.0 && std::isfinite(collective), "collective coupling must be positive");
    detail::require(kappa >= 0.0 && std::isfinite(kappa), "kappa must be non-negative");
    detail::require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be non-negative");
    detail::require(horizon > 0.0 && std::isfinite(horizon), "horizon must be positive");
    detail::require(time_step > 0.0 && time_step <= horizon, "time step must be in (0, horizon]");
    detail::require(target_time >= 0.0 && std::isfinite(target_time), "target time must be non-negative");
    detail::require(n_spins == 0 || n_spins >= 2, "n_spins must be 0 (auto) or at least 2");
    detail::require(bracket_lo < bracket_hi, "detuning bracket is empty");
    detail::require(scan_points >= 4, "scan needs at least 4 points");
    detail::require(resolution > 0.0, "detuning resolution must be positive");
    if (detuning) detail::require_finite(*detuning, "detuning");
}

Window scenario_window(const MemoryScenario& sc) {
    sc.validate();
    if (sc.window) return *sc.window;
    const auto den = scenario_density(sc);
    Window w = default_window(den);
    // The cavity must sit inside the represented band for every bracket
    // detuning, or it sees no tail spins to decay into.
    const double ref = density_reference(den);
    const double omega = sc.effective_coupling();
    const double margin = kCavityMargin * sc.width;
    w.lo = std::min(w.lo, ref - sc.bracket_hi * omega - margin);
    w.hi = std::max(w.hi, ref - sc.bracket_lo * omega + margin);
    if (sc.drive) w.lo = std::max(w.lo, sc.drive->b_min());
    return w;
}

std::size_t scenario_spin_count(const MemoryScenario& sc) {
    if (sc.n_spins != 0) return sc.n_spins;
    const Window w = scenario_window(sc);
    const double h = (sc.driven() ? kDrivenSpacing : kLorentzianSpacing) * sc.width;
    const auto n = static_cast<std::size_t>(std::ceil((w.hi - w.lo) / h));
    return std::max<std::size_t>(n, 4000);
}

Ensemble scenario_ensemble(const MemoryScenario& sc) {
    sc.validate();
    const auto den = scenario_density(sc);
    const Ensemble ens = discretize(den, scenario_spin_count(sc), sc.effective_coupling(), sc.scheme,
                                    scenario_window(sc), sc.gamma);
    return ens.shifted(-density_reference(den));
}

std::vector<double> time_grid(double horizon, double step) {
    detail::require(horizon >= 0.0 && step > 0.0, "time grid needs horizon >= 0 and step > 0");
    const auto n = static_cast<std::size_t>(std::floor(horizon / step + 1e-9));
    std::vector<double> t(n + 1);
    for (std::size_t j = 0; j <= n; ++j) t[j] = static_cast<double>(j) * step;
    return t;
}

// ---------------------------------------------------------------------------

FidelityEngine::FidelityEngine(const MemoryScenario& sc) : FidelityEngine(sc, scenario_ensemble(sc)) {}

FidelityEngine::FidelityEngine(const MemoryScenario& sc, Ensemble ensemble)
    : sc_(sc), ensemble_(std::move(ensemble)) {
    sc_.validate();
}

SingleExcitationModel FidelityEngine::model(double detuning) const {
    return SingleExcitationModel(CavitySpec{-detuning, sc_.kappa}, ensemble_);
}

PolaritonState FidelityEngine::state(double detuning) const {
    return polariton_state(detuning, ensemble_.collective_coupling());
}

std::vector<cplx> FidelityEngine::overlap(double detuning, const std::vector<double>& times, Method method) const {
    if (method == Method::bromwich) return bromwich_overlap(detuning, times);
    const auto m = model(detuning);
    const auto modes = decompose(m, sc_.backend);
    backend_ = modes->backend();
    const Eigen::VectorXcd psi = polariton_vector(state(detuning), ensemble_).cast<cplx>();
    const auto w = modes->mode_weights(psi, psi);
    std::vector<cplx> out(times.size());
    parallel_for(times.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) out[j] = modal_sum(modes->eigenvalues(), w, times[j]);
    }, 8);
    return out;
}

double FidelityEngine::fidelity_at(double detuning, double t, Method method) const {
    return std::norm(overlap(detuning, {t}, method).front());
}

std::vector<cplx> FidelityEngine::bromwich_overlap(double detuning, const std::vector<double>& times) const {
    const auto m = model(detuning);
    const double coupling = ensemble_.collective_coupling();
    const Band band = band_for(ensemble_, -detuning, -detuning, coupling);
    BromwichOptions opts;
    opts.center = band.center;
    opts.half_span = band.half;
    opts.points = 0;
    const BromwichGrid grid(opts, times);
    const auto st = state(detuning);
    const PoleSum approx =
        lanczos_approximant(m, polariton_vector(st, ensemble_), kLanczosSteps, 0.5 * grid.abscissa());
    std::vector<cplx> values(grid.size());
    const cplx cav = m.cavity_diagonal();
    parallel_for(grid.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const cplx s = grid.node(i);
            values[i] = laplace_overlap_from_kernel(memory_kernel(m, s), s, cav, coupling, st.theta) -
                        approx.laplace_value(s);
        }
    }, 1024);
    backend_ = "bromwich";
    auto out = grid.invert(values, times);
    for (std::size_t j = 0; j < times.size(); ++j) out[j] += approx.time_value(times[j]);
    return out;
}

void FidelityEngine::build_kernel_cache() const {
    if (cache_grid_) return;
    const double coupling = ensemble_.collective_coupling();
    const double d_lo = sc_.bracket_lo * coupling;
    const double d_hi = sc_.bracket_hi * coupling;
    const Band band = band_for(ensemble_, -d_hi, -d_lo, coupling);
    BromwichOptions opts;
    opts.center = band.center;
    opts.half_span = band.half;
    opts.points = 0;
    const double t_max = std::max(sc_.horizon, sc_.target_time);
    cache_times_ = {t_max};
    cache_grid_ = std::make_unique<BromwichGrid>(opts, cache_times_);
    const SingleExcitationModel m = model(0.0);
    cache_kernel_.resize(cache_grid_->size());
    parallel_for(cache_kernel_.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) cache_kernel_[i] = memory_kernel(m, cache_grid_->node(i));
    }, 1024);
}

double FidelityEngine::fast_fidelity(double detuning, double t) const {
    build_kernel_cache();
    detail::require(t <= cache_times_.front(), "fast fidelity time beyond the cached horizon");
    const auto m = model(detuning);
    const auto st = state(detuning);
    const double coupling = ensemble_.collective_coupling();
    const PoleSum approx =
        lanczos_approximant(m, polariton_vector(st, ensemble_), kLanczosSteps, 0.5 * cache_grid_->abscissa());
    const cplx cav = m.cavity_diagonal();
    std::vector<cplx> values(cache_grid_->size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const cplx s = cache_grid_->node(i);
        values[i] = laplace_overlap_from_kernel(cache_kernel_[i], s, cav, coupling, st.theta) - approx.laplace_value(s);
    }
    return std::norm(cache_grid_->invert_at(values, t) + approx.time_value(t));
}

// ---------------------------------------------------------------------------

namespace {

bool better(const DetuningScanPoint& a, const DetuningScanPoint& b) {
    if (std::abs(a.fidelity - b.fidelity) > 1e-12) return a.fidelity > b.fidelity;
    if (std::abs(a.detuning) != std::abs(b.detuning)) return std::abs(a.detuning) < std::abs(b.detuning);
    return a.detuning < b.detuning;
}

std::vector<double> log_points(double from, double to, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = to;
        return out;
    }
    const double a = std::log(from), b = std::log(to);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = from;
    out.back() = to;
    return out;
}

std::vector<double> scan_grid(double lo, double hi, double floor_value, std::size_t n) {
    std::vector<double> pts;
    const bool neg = lo < -floor_value;
    const bool pos = hi > floor_value;
    if (neg && pos) {
        for (double v : log_points(floor_value, -lo, n / 2)) pts.push_back(-v);
        for (double v : log_points(floor_value, hi, n - n / 2)) pts.push_back(v);
    } else if (pos) {
        const double start = std::max(lo, floor_value);
        if (lo < start) pts.push_back(lo);
        for (double v : log_points(start, hi, n - pts.size())) pts.push_back(v);
    } else if (neg) {
        const double start = std::max(-hi, floor_value);
        if (hi > -start) pts.push_back(hi);
        for (double v : log_points(start, -lo, n - pts.size())) pts.push_back(-v);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace

OptimumResult optimize_detuning(const FidelityEngine& engine, double target_time) {
    const auto& sc = engine.scenario();
    detail::require(target_time >= 0.0 && target_time <= std::max(sc.horizon, sc.target_time),
                    "optimization time outside the scenario horizon");
    const double coupling = engine.ensemble().collective_coupling();
    const double lo = sc.bracket_lo * coupling;
    const double hi = sc.bracket_hi * coupling;

    auto objective = [&](double d) {
        const double f = engine.fast_fidelity(d, target_time);
        if (!std::isfinite(f)) throw NumericalError("non-finite fidelity at detuning " + std::to_string(d));
        return f;
    };

    const auto grid = scan_grid(lo, hi, 0.1 * coupling, sc.scan_points);
    OptimumResult res;
    res.scan.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) res.scan[i] = {grid[i], objective(grid[i])};

    std::size_t best = 0;
    for (std::size_t i = 1; i < res.scan.size(); ++i) {
        if (better(res.scan[i], res.scan[best])) best = i;
    }
    double a = best > 0 ? grid[best - 1] : grid[best];
    double b = best + 1 < grid.size() ? grid[best + 1] : grid[best];

    // Golden-section maximization on [a, b].
    DetuningScanPoint top = res.scan[best];
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - ratio * (b - a);
    double x2 = a + ratio * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (b - a > sc.resolution) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = objective(x2);
        }
    }
    for (const DetuningScanPoint cand : {DetuningScanPoint{x1, f1}, DetuningScanPoint{x2, f2}}) {
        if (better(cand, top)) top = cand;
    }
    res.detuning = top.detuning;
    res.fidelity = sc.method == Method::bromwich ? top.fidelity
                                                 : engine.fidelity_at(top.detuning, target_time, Method::eigen);
    if (!std::isfinite(res.fidelity)) throw NumericalError("non-finite fidelity at the optimum");
    return res;
}

OptimumResult optimize_detuning(const MemoryScenario& sc, double target_time) {
    const FidelityEngine engine(sc);
    return optimize_detuning(engine, target_time);
}

FidelityReport fidelity_curve(const MemoryScenario& sc) {
    const FidelityEngine engine(sc);
    FidelityReport rep;
    rep.target_time = sc.target_time;
    if (sc.detuning) {
        rep.detuning = *sc.detuning;
    } else {
        auto opt = optimize_detuning(engine, sc.target_time);
        rep.detuning = opt.detuning;
        rep.optimal_detuning = opt.detuning;
        rep.scan = std::move(opt.scan);
    }
    rep.t = time_grid(sc.horizon, sc.time_step);
    rep.f = engine.overlap(rep.detuning, rep.t, sc.method);
    rep.backend = engine.last_backend();
    rep.F.resize(rep.f.size());
    for (std::size_t j = 0; j < rep.f.size(); ++j) rep.F[j] = std::norm(rep.f[j]);
    rep.target_fidelity = engine.fidelity_at(rep.detuning, sc.target_time, sc.method);
    rep.n_spins = engine.ensemble().size();
    rep.collective = engine.ensemble().collective_coupling();
    rep.truncated_mass = engine.ensemble().metadata().truncated_mass;
    rep.window_warning = engine.ensemble().metadata().window_warning;
    rep.method = to_string(sc.method);
    if (sc.cross_check) {
        const Method other = sc.method == Method::eigen ? Method::bromwich : Method::eigen;
        const auto g = engine.overlap(rep.detuning, rep.t, other);
        double worst = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) worst = std::max(worst, std::abs(std::norm(g[j]) - rep.F[j]));
        rep.method_residual = worst;
    }
    return rep;
}

double fidelity_at(const MemoryScenario& sc, double t) {
    detail::require(t >= 0.0 && std::isfinite(t), "time must be non-negative");
    const FidelityEngine engine(sc);
    const double d = sc.detuning ? *sc.detuning : optimize_detuning(engine, sc.target_time).detuning;
    return engine.fidelity_at(d, t, sc.method);
}

std::vector<ComparisonRow> compare_driven_undriven(const MemoryScenario& base,
                                                   const std::vector<double>& collectives) {
    detail::require(base.drive.has_value(), "comparison needs a drive range");
    std::vector<ComparisonRow> rows;
    for (double omega : collectives) {
        MemoryScenario und = base;
        und.drive.reset();
        und.window.reset();
        und.collective = omega;
        und.detuning.reset();
        MemoryScenario drv = base;
        drv.collective = omega;
        drv.detuning.reset();
        ComparisonRow row{omega, optimize_detuning(und, base.target_time), optimize_detuning(drv, base.target_time), 0.0};
        row.ratio = row.undriven.fidelity > 0.0 ? row.driven.fidelity / row.undriven.fidelity
                                                : std::numeric_limits<double>::infinity();
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace drivenmem
