#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "drivenmem/error.hpp"
#include "drivenmem/modal.hpp"
#include "drivenmem/parallel.hpp"

namespace drivenmem {

namespace {
std::atomic<unsigned> g_max_threads{1};
constexpr double kEps = std::numeric_limits<double>::epsilon();
}  // namespace

unsigned max_threads() noexcept { return g_max_threads.load(); }
void set_max_threads(unsigned n) noexcept { g_max_threads.store(std::max(1u, n)); }

cplx modal_sum(const std::vector<cplx>& eigenvalues, const std::vector<cplx>& weights, double t) {
    cplx acc{0.0, 0.0};
    const cplx minus_i_t{0.0, -t};
    for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
        if (weights[j] == cplx{}) continue;
        acc += weights[j] * std::exp(minus_i_t * eigenvalues[j]);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Dense backend

namespace {

class DenseModes final : public ModalDecomposition {
public:
    explicit DenseModes(const Eigen::MatrixXcd& h) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(h, true);
        if (solver.info() != Eigen::Success) {
            throw NumericalError("dense eigensolver failed to converge");
        }
        vectors_ = solver.eigenvectors();
        values_.resize(static_cast<std::size_t>(h.rows()));
        for (Eigen::Index j = 0; j < h.rows(); ++j) values_[static_cast<std::size_t>(j)] = solver.eigenvalues()(j);
        lu_.compute(vectors_);
        const double rcond = lu_.rcond();
        if (!(rcond > 1e3 * kEps)) {
            std::ostringstream msg;
            msg << "eigenvector matrix is numerically singular (rcond = " << rcond << ")";
            throw NumericalError(msg.str());
        }
    }

    [[nodiscard]] std::size_t dimension() const override { return values_.size(); }
    [[nodiscard]] const std::vector<cplx>& eigenvalues() const override { return values_; }

    [[nodiscard]] std::vector<cplx> mode_weights(const Eigen::VectorXcd& bra,
                                                const Eigen::VectorXcd& ket) const override {
        const Eigen::RowVectorXcd left = bra.adjoint() * vectors_;
        const Eigen::VectorXcd coef = lu_.solve(ket);
        std::vector<cplx> w(values_.size());
        for (std::size_t j = 0; j < w.size(); ++j) {
            w[j] = left(static_cast<Eigen::Index>(j)) * coef(static_cast<Eigen::Index>(j));
        }
        return w;
    }

    [[nodiscard]] Eigen::VectorXcd propagate(const Eigen::VectorXcd& ket, double t) const override {
        Eigen::VectorXcd coef = lu_.solve(ket);
        for (Eigen::Index j = 0; j < coef.size(); ++j) {
            coef(j) *= std::exp(cplx{0.0, -t} * values_[static_cast<std::size_t>(j)]);
        }
        return vectors_ * coef;
    }

    [[nodiscard]] std::vector<double> cavity_fractions() const override {
        std::vector<double> out(values_.size());
        for (std::size_t j = 0; j < out.size(); ++j) {
            const auto col = vectors_.col(static_cast<Eigen::Index>(j));
            out[j] = std::norm(col(0)) / col.squaredNorm();
        }
        return out;
    }

    [[nodiscard]] const char* backend() const override { return "dense"; }

private:
    std::vector<cplx> values_;
    Eigen::MatrixXcd vectors_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

}  // namespace

std::unique_ptr<ModalDecomposition> dense_decomposition(const Eigen::MatrixXcd& h) {
    return std::make_unique<DenseModes>(h);
}

// ---------------------------------------------------------------------------
// Arrowhead backend
//
// Spin poles share the damping eta, so writing lambda = mu - i eta turns the
// secular equation into
//     phi(mu) = mu - a_hat - sum_i y_i^2 / (mu - q_i) = 0,   a_hat = apex + i eta,
// with real, distinct poles q_i and positive arms y_i after deflation. Roots
// are first found for Re(a_hat) (real symmetric case, one root per interval),
// then followed into the complex plane by Newton continuation in Im(a_hat).
// Each root is stored as (anchor pole, offset) so that mu - q_i is formed as
// (q_anchor - q_i) + offset without cancellation.

namespace {

struct Group {
    double pole;
    double arm;                       // sqrt(sum z_k^2) over members
    std::vector<std::size_t> members; // spin indices (0-based, without the cavity)
};

struct Root {
    std::size_t anchor;
    cplx offset;
};

class SecularSystem {
public:
    SecularSystem(std::vector<double> poles, std::vector<double> arms, cplx apex_hat)
        : q_(std::move(poles)), y_(std::move(arms)), a_(apex_hat) {
        y2_.resize(y_.size());
        for (std::size_t i = 0; i < y_.size(); ++i) y2_[i] = y_[i] * y_[i];
    }

    [[nodiscard]] std::size_t size() const { return q_.size(); }
    [[nodiscard]] const std::vector<double>& poles() const { return q_; }
    [[nodiscard]] const std::vector<double>& arms2() const { return y2_; }

    // Real stage: root in the given interval. interval = 0 is below q_0,
    // interval = m is above q_{m-1}, otherwise between q_{interval-1} and q_interval.
    [[nodiscard]] Root solve_real(std::size_t interval) const {
        const std::size_t m = q_.size();
        const double ar = a_.real();
        double ynorm = 0.0;
        for (double v : y2_) ynorm += v;
        ynorm = std::sqrt(ynorm);

        std::size_t origin;
        double tlo, thi;
        if (interval == 0) {
            origin = 0;
            thi = 0.0;
            tlo = std::min(ar, q_[0]) - ynorm - 1.0 - q_[0];
            while (phi_real(origin, tlo) > 0.0) tlo *= 2.0;
        } else if (interval == m) {
            origin = m - 1;
            tlo = 0.0;
            thi = std::max(ar, q_[m - 1]) + ynorm + 1.0 - q_[m - 1];
            while (phi_real(origin, thi) < 0.0) thi *= 2.0;
        } else {
            const std::size_t left = interval - 1;
            const std::size_t right = interval;
            const double half = 0.5 * (q_[right] - q_[left]);
            if (phi_real(left, half) >= 0.0) {
                origin = left;
                tlo = 0.0;
                thi = half;
            } else {
                origin = right;
                tlo = (q_[left] - q_[right]) + half;
                thi = 0.0;
            }
        }
        const bool positive_side = tlo >= 0.0;
        const double c = y2_[origin];

        double tau = 0.5 * (tlo + thi);
        for (int iter = 0; iter < 300; ++iter) {
            double rest = 0.0, drest = 0.0, scale = 0.0;
            rest_terms(origin, tau, rest, drest, scale);
            const double f = -c / tau + rest;
            if (f == 0.0) break;
            if (f < 0.0) tlo = tau; else thi = tau;
            if (std::abs(f) <= 4.0 * kEps * (scale + c / std::abs(tau))) break;

            // Model: -c/x + A + B x, exact in the origin pole, linear in the rest.
            const double B = drest;
            const double A = rest - drest * tau;
            const double D = std::sqrt(A * A + 4.0 * B * c);
            double next;
            if (positive_side) next = A >= 0.0 ? 2.0 * c / (A + D) : (D - A) / (2.0 * B);
            else next = A > 0.0 ? (-A - D) / (2.0 * B) : -2.0 * c / (D - A);
            if (!(next > tlo && next < thi)) next = 0.5 * (tlo + thi);
            const double step = std::abs(next - tau);
            tau = next;
            if (step <= 2.0 * kEps * std::abs(tau) || (thi - tlo) <= 2.0 * kEps * std::abs(tau)) break;
        }
        return {origin, cplx{tau, 0.0}};
    }

    // Newton on g(tau) = tau * phi(tau) for the complex apex a_hat_r + i*frac*Im(a_hat).
    bool newton_complex(Root& r, double frac) const {
        const std::size_t o = r.anchor;
        cplx tau = r.offset;
        double prev = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 80; ++iter) {
            cplx g, dg;
            evaluate({o, tau}, frac, g, dg);
            if (dg == cplx{}) return false;
            const cplx step = g / dg;
            tau -= step;
            if (!std::isfinite(tau.real()) || !std::isfinite(tau.imag())) return false;
            const double size = std::abs(tau) + kEps * std::abs(q_[o]);
            // Converged, or stalled at the rounding floor.
            if (std::abs(step) <= 4.0 * kEps * size ||
                (iter > 3 && std::abs(step) >= prev && std::abs(step) <= 1e-9 * size)) {
                r.offset = tau;
                return true;
            }
            prev = std::abs(step);
        }
        r.offset = tau;
        return prev <= 1e-10 * (std::abs(tau) + kEps * std::abs(q_[o]));
    }

    // Follows a real-stage root to the full complex apex. A step is accepted
    // only when the root moves by less than half its distance to the nearest
    // pole, so it cannot hop into a neighbour's basin.
    bool track(Root& r) const {
        double frac = 0.0;
        double step = 1.0;
        while (frac < 1.0) {
            step = std::min(step, 1.0 - frac);
            if (step < 1e-7) return false;
            Root trial = r;
            const double reach = 0.5 * pole_distance(r);
            if (newton_complex(trial, frac + step) && std::abs(mu(trial) - mu(r)) <= reach) {
                frac = step >= 1.0 - frac ? 1.0 : frac + step;
                r = reanchor(trial);
                step *= 2.0;
            } else {
                step *= 0.25;
            }
        }
        return true;
    }

    // Continuation of several roots at once, each Newton step deflated by
    // the others (Aberth). Used where single-root tracking let two roots
    // fall onto the same branch past an exceptional point.
    bool track_cluster(std::vector<Root>& rs) const {
        const std::size_t n = rs.size();
        double frac = 0.0;
        double step = 1.0;
        while (frac < 1.0) {
            step = std::min(step, 1.0 - frac);
            if (step < 1e-9) return false;
            const double target = step >= 1.0 - frac ? 1.0 : frac + step;
            std::vector<Root> trial = rs;
            bool ok = aberth(trial, target);
            for (std::size_t j = 0; ok && j < n; ++j) {
                double reach = pole_distance(rs[j]);
                for (std::size_t k = 0; k < n; ++k) {
                    if (k != j) reach = std::min(reach, std::abs(mu(rs[j]) - mu(rs[k])));
                }
                ok = std::abs(mu(trial[j]) - mu(rs[j])) <= 0.5 * reach;
            }
            if (ok) {
                rs = std::move(trial);
                frac = target;
                step *= 2.0;
            } else {
                step *= 0.25;
            }
        }
        return true;
    }

    [[nodiscard]] cplx diff(const Root& r, std::size_t i) const {
        return (q_[r.anchor] - q_[i]) + r.offset;
    }

    [[nodiscard]] cplx mu(const Root& r) const { return q_[r.anchor] + r.offset; }

    // phi'(mu) = 1 + sum y^2/(mu - q)^2 = v^T v for the reduced eigenvector.
    [[nodiscard]] cplx derivative(const Root& r) const {
        cplx acc{1.0, 0.0};
        for (std::size_t i = 0; i < q_.size(); ++i) {
            const cplx inv = 1.0 / diff(r, i);
            acc += y2_[i] * inv * inv;
        }
        return acc;
    }

    [[nodiscard]] cplx apex() const { return a_; }

private:
    // g(tau) = tau * phi(q_anchor + tau) and dg/dtau, for the apex
    // Re(a_hat) + i frac Im(a_hat).
    void evaluate(const Root& r, double frac, cplx& g, cplx& dg) const {
        const cplx a{a_.real(), frac * a_.imag()};
        const std::size_t o = r.anchor;
        const cplx tau = r.offset;
        cplx S{0.0, 0.0}, dS{0.0, 0.0};
        const double qo = q_[o];
        for (std::size_t i = 0; i < q_.size(); ++i) {
            if (i == o) continue;
            const cplx inv = 1.0 / ((qo - q_[i]) + tau);
            const cplx term = y2_[i] * inv;
            S += term;
            dS -= term * inv;
        }
        const cplx base = (qo - a) + tau;
        g = tau * base - y2_[o] - tau * S;
        dg = base + tau - S - tau * dS;
    }

    bool aberth(std::vector<Root>& rs, double frac) const {
        const std::size_t n = rs.size();
        for (int iter = 0; iter < 60; ++iter) {
            double worst = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                cplx g, dg;
                evaluate(rs[j], frac, g, dg);
                if (g == cplx{}) continue;
                // phi'/phi with phi = g / tau, minus the other cluster roots
                cplx ratio = dg / g - 1.0 / rs[j].offset;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k != j) ratio -= 1.0 / (mu(rs[j]) - mu(rs[k]));
                }
                const cplx delta = 1.0 / ratio;
                if (!std::isfinite(delta.real()) || !std::isfinite(delta.imag())) return false;
                rs[j].offset -= delta;
                rs[j] = reanchor(rs[j]);
                const double size = std::abs(rs[j].offset) + kEps * std::abs(q_[rs[j].anchor]);
                worst = std::max(worst, std::abs(delta) / size);
            }
            if (worst <= 1e-13) return true;
        }
        return false;
    }

    [[nodiscard]] double pole_distance(const Root& r) const {
        double d = std::abs(r.offset);
        if (r.anchor > 0) d = std::min(d, std::abs(diff(r, r.anchor - 1)));
        if (r.anchor + 1 < q_.size()) d = std::min(d, std::abs(diff(r, r.anchor + 1)));
        return d;
    }

    // Moves the anchor to the pole nearest Re(mu).
    [[nodiscard]] Root reanchor(const Root& r) const {
        std::size_t best = r.anchor;
        for (;;) {
            if (best > 0 && std::abs(diff(r, best - 1).real()) < std::abs(diff(r, best).real())) --best;
            else if (best + 1 < q_.size() && std::abs(diff(r, best + 1).real()) < std::abs(diff(r, best).real())) ++best;
            else break;
        }
        if (best == r.anchor) return r;
        return {best, diff(r, best)};
    }

    [[nodiscard]] double phi_real(std::size_t origin, double tau) const {
        double rest = 0.0, drest = 0.0, scale = 0.0;
        rest_terms(origin, tau, rest, drest, scale);
        if (tau == 0.0) return origin == 0 && tau == 0.0 ? -std::numeric_limits<double>::infinity() : rest;
        return rest - y2_[origin] / tau;
    }

    void rest_terms(std::size_t origin, double tau, double& rest, double& drest, double& scale) const {
        const double qo = q_[origin];
        const double lin = (qo - a_.real()) + tau;
        rest = lin;
        drest = 1.0;
        scale = std::abs(qo) + std::abs(a_.real()) + std::abs(tau);
        for (std::size_t i = 0; i < q_.size(); ++i) {
            if (i == origin) continue;
            const double inv = 1.0 / ((qo - q_[i]) + tau);
            const double term = y2_[i] * inv;
            rest -= term;
            drest += term * inv;
            scale += std::abs(term);
        }
    }

    std::vector<double> q_;
    std::vector<double> y_;
    std::vector<double> y2_;
    cplx a_;
};

class ArrowheadModes final : public ModalDecomposition {
public:
    explicit ArrowheadModes(const ArrowheadSpec& spec) : spec_(spec) {
        const std::size_t n = spec.poles.size();
        if (spec.arms.size() != n) throw ValidationError("arrowhead: pole/arm length mismatch");
        for (std::size_t k = 1; k < n; ++k) {
            if (spec.poles[k] < spec.poles[k - 1]) throw ValidationError("arrowhead: poles must be sorted");
        }
        deflate();
        solve();
        assemble();
    }

    [[nodiscard]] std::size_t dimension() const override { return spec_.poles.size() + 1; }
    [[nodiscard]] const std::vector<cplx>& eigenvalues() const override { return values_; }

    [[nodiscard]] std::vector<cplx> mode_weights(const Eigen::VectorXcd& bra,
                                                const Eigen::VectorXcd& ket) const override {
        check_dim(bra);
        check_dim(ket);
        const std::size_t m = groups_.size();
        // Reduced bra/ket components along each group's bright direction.
        std::vector<cplx> B(m), P(m);
        for (std::size_t i = 0; i < m; ++i) {
            cplx bsum{}, psum{};
            for (std::size_t k : groups_[i].members) {
                const double z = spec_.arms[k];
                bsum += std::conj(bra(static_cast<Eigen::Index>(k + 1))) * z;
                psum += ket(static_cast<Eigen::Index>(k + 1)) * z;
            }
            B[i] = bsum;
            P[i] = psum;
        }
        std::vector<cplx> w(values_.size(), cplx{});
        const cplx b0 = std::conj(bra(0));
        const cplx p0 = ket(0);
        parallel_for(roots_.size(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t j = begin; j < end; ++j) {
                cplx left = b0, right = p0;
                for (std::size_t i = 0; i < m; ++i) {
                    const cplx inv = 1.0 / system_->diff(roots_[j], i);
                    left += B[i] * inv;
                    right += P[i] * inv;
                }
                w[j] = left * right / norms_[j];
            }
        }, 16);
        std::size_t slot = roots_.size();
        for (std::size_t k : decoupled_) {
            w[slot++] = std::conj(bra(static_cast<Eigen::Index>(k + 1))) * ket(static_cast<Eigen::Index>(k + 1));
        }
        for (std::size_t i = 0; i < m; ++i) {
            const auto& g = groups_[i];
            if (g.members.size() < 2) continue;
            cplx direct{};
            for (std::size_t k : g.members) {
                direct += std::conj(bra(static_cast<Eigen::Index>(k + 1))) * ket(static_cast<Eigen::Index>(k + 1));
            }
            w[slot] = direct - B[i] * P[i] / (g.arm * g.arm);
            slot += g.members.size() - 1;
        }
        return w;
    }

    [[nodiscard]] Eigen::VectorXcd propagate(const Eigen::VectorXcd& ket, double t) const override {
        check_dim(ket);
        const std::size_t m = groups_.size();
        std::vector<cplx> P(m);
        for (std::size_t i = 0; i < m; ++i) {
            cplx psum{};
            for (std::size_t k : groups_[i].members) psum += ket(static_cast<Eigen::Index>(k + 1)) * spec_.arms[k];
            P[i] = psum;
        }
        // Expansion coefficients c_j exp(-i lambda_j t).
        std::vector<cplx> coef(roots_.size());
        for (std::size_t j = 0; j < roots_.size(); ++j) {
            cplx right = ket(0);
            for (std::size_t i = 0; i < m; ++i) right += P[i] / system_->diff(roots_[j], i);
            coef[j] = right / norms_[j] * std::exp(cplx{0.0, -t} * values_[j]);
        }
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(ket.size());
        cplx cav{};
        for (cplx c : coef) cav += c;
        out(0) = cav;
        std::vector<cplx> group_amp(m);
        parallel_for(m, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                cplx acc{};
                for (std::size_t j = 0; j < roots_.size(); ++j) acc += coef[j] / system_->diff(roots_[j], i);
                group_amp[i] = acc;
            }
        }, 16);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& g = groups_[i];
            const cplx phase = std::exp(cplx{0.0, -t} * cplx{g.pole, -spec_.eta});
            for (std::size_t k : g.members) {
                const double z = spec_.arms[k];
                cplx amp = z * group_amp[i];
                if (g.members.size() > 1) {
                    // Dark component: ket minus its projection on the bright direction.
                    const cplx dark = ket(static_cast<Eigen::Index>(k + 1)) - z * P[i] / (g.arm * g.arm);
                    amp += phase * dark;
                }
                out(static_cast<Eigen::Index>(k + 1)) = amp;
            }
        }
        for (std::size_t k : decoupled_) {
            const cplx phase = std::exp(cplx{0.0, -t} * cplx{spec_.poles[k], -spec_.eta});
            out(static_cast<Eigen::Index>(k + 1)) = phase * ket(static_cast<Eigen::Index>(k + 1));
        }
        return out;
    }

    [[nodiscard]] std::vector<double> cavity_fractions() const override {
        std::vector<double> out(values_.size(), 0.0);
        for (std::size_t j = 0; j < roots_.size(); ++j) {
            double s = 1.0;
            for (std::size_t i = 0; i < groups_.size(); ++i) {
                s += system_->arms2()[i] / std::norm(system_->diff(roots_[j], i));
            }
            out[j] = 1.0 / s;
        }
        return out;
    }

    [[nodiscard]] const char* backend() const override { return "arrowhead"; }

private:
    void check_dim(const Eigen::VectorXcd& v) const {
        if (static_cast<std::size_t>(v.size()) != dimension()) {
            throw ValidationError("state dimension does not match the model");
        }
    }

    void deflate() {
        const std::size_t n = spec_.poles.size();
        double scale = std::abs(spec_.apex);
        double znorm2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            scale = std::max(scale, std::abs(spec_.poles[k]));
            znorm2 += spec_.arms[k] * spec_.arms[k];
        }
        scale = std::max(scale, std::sqrt(znorm2));
        const double tol = 8.0 * kEps * scale;
        for (std::size_t k = 0; k < n; ++k) {
            if (spec_.arms[k] < 0.0) throw ValidationError("arrowhead arms must be non-negative");
            if (spec_.arms[k] <= tol) {
                decoupled_.push_back(k);
                continue;
            }
            if (!groups_.empty() && spec_.poles[k] - groups_.back().pole <= tol) {
                groups_.back().members.push_back(k);
                continue;
            }
            groups_.push_back({spec_.poles[k], 0.0, {k}});
        }
        for (auto& g : groups_) {
            double s = 0.0;
            for (std::size_t k : g.members) s += spec_.arms[k] * spec_.arms[k];
            g.arm = std::sqrt(s);
        }
    }

    void solve() {
        const cplx apex_hat = spec_.apex + cplx{0.0, spec_.eta};
        if (groups_.empty()) {
            roots_.clear();
            isolated_cavity_ = true;
            return;
        }
        std::vector<double> q, y;
        for (const auto& g : groups_) {
            q.push_back(g.pole);
            y.push_back(g.arm);
        }
        system_ = std::make_unique<SecularSystem>(std::move(q), std::move(y), apex_hat);
        const std::size_t m = system_->size();

        std::vector<Root> real_roots(m + 1);
        parallel_for(m + 1, [&](std::size_t begin, std::size_t end) {
            for (std::size_t j = begin; j < end; ++j) real_roots[j] = system_->solve_real(j);
        }, 16);

        if (apex_hat.imag() == 0.0) {
            roots_ = std::move(real_roots);
            if (!consistent()) throw NumericalError("arrowhead secular solver: inconsistent real root set");
            return;
        }
        roots_ = real_roots;
        std::atomic<bool> ok{true};
        parallel_for(m + 1, [&](std::size_t begin, std::size_t end) {
            for (std::size_t j = begin; j < end && ok.load(); ++j) {
                if (!system_->track(roots_[j])) ok.store(false);
            }
        }, 16);
        if (ok.load()) {
            separate_collisions(real_roots);
            if (consistent()) return;
        }
        if (ok.load() && consistent()) return;
        throw NumericalError("arrowhead secular solver failed to track the complex roots");
    }

    void separate_collisions(const std::vector<Root>& start) {
        std::vector<std::size_t> order(roots_.size());
        std::iota(order.begin(), order.end(), 0);
        std::vector<cplx> mus(roots_.size());
        for (std::size_t j = 0; j < roots_.size(); ++j) mus[j] = system_->mu(roots_[j]);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return mus[a].real() < mus[b].real();
        });
        std::size_t j = 0;
        while (j < order.size()) {
            std::size_t k = j + 1;
            const double tol = 1e-9 * (1.0 + std::abs(mus[order[j]]));
            while (k < order.size() && std::abs(mus[order[k]] - mus[order[j]]) <= tol) ++k;
            if (k - j > 1) {
                std::vector<Root> cluster;
                for (std::size_t c = j; c < k; ++c) cluster.push_back(start[order[c]]);
                if (system_->track_cluster(cluster)) {
                    for (std::size_t c = j; c < k; ++c) roots_[order[c]] = cluster[c - j];
                }
            }
            j = k;
        }
    }

    // sum_j 1/phi'(mu_j) is the cavity-cavity element of the identity (= 1);
    // a lost or duplicated root breaks it.
    bool consistent() {
        const std::size_t count = roots_.size();
        norms_.assign(count, cplx{});
        parallel_for(count, [&](std::size_t begin, std::size_t end) {
            for (std::size_t j = begin; j < end; ++j) norms_[j] = system_->derivative(roots_[j]);
        }, 16);
        cplx sum{};
        for (const cplx& d : norms_) sum += 1.0 / d;
        if (std::abs(sum - 1.0) > 1e-8) return false;
        // Numerical range: Im(mu) lies between 0 and Im(a_hat).
        const double im_a = system_->apex().imag();
        const double slack = 1e-9 * (1.0 + std::abs(im_a));
        const double im_lo = std::min(0.0, im_a) - slack;
        const double im_hi = std::max(0.0, im_a) + slack;
        for (const auto& r : roots_) {
            const double im = system_->mu(r).imag();
            if (im < im_lo || im > im_hi) return false;
        }
        return true;
    }

    void assemble() {
        values_.clear();
        if (isolated_cavity_) {
            // Only the cavity is coupled to nothing: treat it as one root with unit norm.
            values_.push_back(spec_.apex);
            cavity_only_ = true;
        } else {
            for (const auto& r : roots_) values_.push_back(system_->mu(r) - cplx{0.0, spec_.eta});
        }
        for (std::size_t k : decoupled_) values_.emplace_back(spec_.poles[k], -spec_.eta);
        for (const auto& g : groups_) {
            for (std::size_t c = 1; c < g.members.size(); ++c) values_.emplace_back(g.pole, -spec_.eta);
        }
        if (cavity_only_) {
            roots_.clear();
        }
    }

    ArrowheadSpec spec_;
    std::vector<Group> groups_;
    std::vector<std::size_t> decoupled_;
    std::unique_ptr<SecularSystem> system_;
    std::vector<Root> roots_;
    std::vector<cplx> norms_;
    std::vector<cplx> values_;
    bool isolated_cavity_ = false;
    bool cavity_only_ = false;
};

}  // namespace

std::unique_ptr<ModalDecomposition> arrowhead_decomposition(const ArrowheadSpec& spec) {
    return std::make_unique<ArrowheadModes>(spec);
}

}  // namespace drivenmem
