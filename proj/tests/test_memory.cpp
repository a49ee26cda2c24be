#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "drivenmem/error.hpp"
#include "drivenmem/memory.hpp"

using namespace drivenmem;

namespace {

constexpr double pi = std::numbers::pi;

MemoryScenario driven_scenario(double collective, double b_min) {
    MemoryScenario sc;
    sc.collective = collective;
    sc.drive = DriveAmplitudeRange(b_min, b_min + 0.5);
    return sc;
}

}  // namespace

TEST_CASE("polariton state") {
    const auto mid = polariton_state(0.0, 3.0);
    CHECK(mid.theta == doctest::Approx(pi / 2.0).epsilon(1e-15));
    CHECK(mid.cavity_amplitude == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    CHECK(mid.spin_amplitude == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-15));
    const auto quarter = polariton_state(6.0, 3.0);
    CHECK(quarter.theta == doctest::Approx(pi / 4.0).epsilon(1e-15));
    CHECK(quarter.cavity_amplitude == doctest::Approx(std::cos(pi / 8.0)).epsilon(1e-15));
    CHECK(quarter.spin_amplitude == doctest::Approx(-std::sin(pi / 8.0)).epsilon(1e-15));

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const auto s = polariton_state(u(rng), 10.0);
        CHECK(std::abs(s.cavity_amplitude * s.cavity_amplitude + s.spin_amplitude * s.spin_amplitude - 1.0) < 1e-15);
        CHECK(s.theta > 0.0);
        CHECK(s.theta < pi);
        CHECK(std::abs(1.0 / std::tan(s.theta) - s.detuning / 20.0) < 1e-9 * (1.0 + std::abs(s.detuning)));
    }
    CHECK_THROWS_AS(polariton_state(1.0, 0.0), ValidationError);

    const auto e = Ensemble::from_spins({-1.0, 1.0}, {0.6, 0.8}, 0.0);
    const auto v = polariton_vector(mid, e);
    CHECK(v.size() == 3);
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(v(2) == doctest::Approx(-std::sqrt(0.5) * 0.8).epsilon(1e-15));
}

TEST_CASE("scenario validation") {
    MemoryScenario sc;
    sc.kappa = -0.1;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    sc = MemoryScenario{};
    sc.n_spins = 1;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    sc = MemoryScenario{};
    sc.collective = 0.0;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    sc = MemoryScenario{};
    CHECK_NOTHROW(sc.validate());
}

TEST_CASE("scenario window follows the cavity") {
    MemoryScenario sc;
    sc.collective = 10.0;
    const auto w = scenario_window(sc);
    CHECK(w.lo == doctest::Approx(-220.0));
    CHECK(w.hi == doctest::Approx(220.0));
    CHECK(scenario_spin_count(sc) == 4400);

    const auto d = driven_scenario(40.0, 10.0);
    const auto wd = scenario_window(d);
    CHECK(wd.lo == 10.0);
    CHECK(wd.hi == doctest::Approx(10.25 + 400.0 + 20.0));
    CHECK(scenario_spin_count(d) == static_cast<std::size_t>(std::ceil((wd.hi - wd.lo) / 0.05)));

    MemoryScenario fixed = d;
    fixed.n_spins = 1000;
    fixed.window = Window{10.0, 60.0};
    CHECK(scenario_spin_count(fixed) == 1000);
    CHECK(scenario_window(fixed).hi == 60.0);
    const auto ens = scenario_ensemble(fixed);
    CHECK(ens.size() == 1000);
    CHECK(ens.frequencies().front() == doctest::Approx(10.025 - 10.25));
    CHECK(ens.collective_coupling() == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("stored polariton is stationary without broadening") {
    MemoryScenario sc;
    sc.collective = 2.0;
    sc.kappa = 0.0;
    sc.gamma = 0.0;
    sc.detuning = 0.0;
    const auto ens = Ensemble::from_spins({0.0, 0.0, 0.0}, {1.0, 1.0, std::sqrt(2.0)}, 0.0);
    const FidelityEngine engine(sc, ens);
    const auto ts = time_grid(50.0, 0.5);
    for (Method m : {Method::eigen, Method::bromwich}) {
        const auto f = engine.overlap(0.0, ts, m);
        for (const auto& v : f) CHECK(std::abs(std::norm(v) - 1.0) < 1e-9);
    }
}

TEST_CASE("decoupled ensemble gives two independent terms") {
    MemoryScenario sc;
    sc.collective = 1e-9;
    sc.kappa = 0.2;
    sc.gamma = 0.0;
    sc.detuning = 0.0;
    const FidelityEngine engine(sc, Ensemble::from_spins({0.0, 0.0}, {1e-9 / std::sqrt(2.0), 1e-9 / std::sqrt(2.0)}, 0.0));
    const auto ts = time_grid(20.0, 0.5);
    const auto f = engine.overlap(0.0, ts, Method::eigen);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double expected = std::pow(0.5 * std::exp(-0.1 * ts[i]) + 0.5, 2);
        CHECK(std::norm(f[i]) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("engine matches an independent dense evaluation") {
    // Reference values: the same grid discretization built from an
    // independently derived cdf, diagonalized with a general dense solver.
    struct Pin {
        double t;
        double F;
    };
    {
        MemoryScenario sc = driven_scenario(20.0, 10.0);
        sc.window = Window{10.0, 130.0};
        sc.n_spins = 2400;
        sc.detuning = -84.2459;
        const FidelityEngine engine(sc);
        const Pin pins[] = {{0.0, 1.0}, {10.0, 0.864758010873034}, {25.0, 0.8507925847415568}, {50.0, 0.8236909974056783}};
        for (const auto& p : pins) {
            CAPTURE(p.t);
            CHECK(std::abs(engine.fidelity_at(-84.2459, p.t, Method::eigen) - p.F) < 1e-9);
            CHECK(std::abs(engine.fidelity_at(-84.2459, p.t, Method::bromwich) - p.F) < 1e-9);
        }
    }
    {
        MemoryScenario sc;
        sc.collective = 10.0;
        sc.window = Window{-150.0, 150.0};
        sc.n_spins = 3000;
        const FidelityEngine engine(sc);
        const Pin pins[] = {{10.0, 0.33705543389316106}, {25.0, 0.06594834083606768}, {50.0, 0.004348853288964655}};
        for (const auto& p : pins) {
            CAPTURE(p.t);
            CHECK(std::abs(engine.fidelity_at(100.0, p.t, Method::eigen) - p.F) < 1e-9);
            CHECK(std::abs(engine.fidelity_at(100.0, p.t, Method::bromwich) - p.F) < 1e-9);
        }
    }
}

TEST_CASE("undriven memory against the Lorentzian pseudo-mode") {
    // A Lorentzian line acts on the superradiant mode like one extra mode
    // damped at W/2; the 2x2 problem gives F(5) = 0.0639143 on resonance and
    // F(50) = 0.0060260 at the bracket edge delta = 20 Omega.
    MemoryScenario sc;
    sc.collective = 10.0;
    sc.detuning = 0.0;
    CHECK(fidelity_at(sc, 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    const double f5 = fidelity_at(sc, 5.0);
    CHECK(f5 < 0.1);
    CHECK(std::abs(f5 - 0.06391432225826542) < 1e-3);

    sc.detuning = 200.0;
    CHECK(std::abs(fidelity_at(sc, 50.0) - 0.0060259806656834435) < 1e-5);
}

TEST_CASE("fidelity curve") {
    MemoryScenario sc = driven_scenario(20.0, 10.0);
    sc.window = Window{10.0, 130.0};
    sc.n_spins = 2000;
    sc.detuning = -84.2459;
    sc.cross_check = true;
    const auto rep = fidelity_curve(sc);
    REQUIRE(rep.t.size() == 1001);
    CHECK(rep.F.front() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.target_fidelity == doctest::Approx(rep.F.back()).epsilon(1e-12));
    REQUIRE(rep.method_residual.has_value());
    CHECK(*rep.method_residual < 1e-4);
    CHECK(rep.n_spins == 2000);
    CHECK(rep.collective == doctest::Approx(10.0).epsilon(1e-12));
    for (double F : rep.F) CHECK(F <= 1.0 + 1e-9);
    // A time on the curve grid gives the same value.
    CHECK(fidelity_at(sc, 25.0) == doctest::Approx(rep.F[500]).epsilon(1e-10));
}

TEST_CASE("without broadening the optimum runs to large detuning") {
    MemoryScenario sc;
    sc.collective = 2.0;
    sc.kappa = 0.1;
    sc.gamma = 0.0;
    const FidelityEngine engine(sc, Ensemble::from_spins({0.0, 0.0}, {std::sqrt(2.0), std::sqrt(2.0)}, 0.0));
    const auto opt = optimize_detuning(engine, 50.0);
    std::vector<DetuningScanPoint> side;
    for (const auto& p : opt.scan) if (p.detuning < 0.0) side.push_back(p);
    std::sort(side.begin(), side.end(), [](auto a, auto b) { return a.detuning > b.detuning; });
    REQUIRE(side.size() > 4);
    for (std::size_t i = 1; i < side.size(); ++i) CHECK(side[i].fidelity >= side[i - 1].fidelity - 1e-12);
    CHECK(opt.detuning == doctest::Approx(-40.0));
}

TEST_CASE("driven optimum is finite and reproducible") {
    MemoryScenario sc = driven_scenario(10.0, 10.0);
    sc.kappa = 0.0;
    sc.gamma = 0.0;
    const auto a = optimize_detuning(sc, 50.0);
    const auto b = optimize_detuning(sc, 50.0);
    CHECK(std::isfinite(a.detuning));
    CHECK(a.detuning == b.detuning);
    CHECK(a.fidelity == b.fidelity);
    CHECK(a.fidelity > 0.0);
    CHECK(a.fidelity <= 1.0 + 1e-9);
}

TEST_CASE("headline driven optimum against a brute-force grid") {
    MemoryScenario sc = driven_scenario(20.0, 10.0);
    const FidelityEngine engine(sc);
    const auto opt = optimize_detuning(engine, 50.0);
    CHECK(opt.detuning == doctest::Approx(-84.2459).epsilon(1e-4));
    CHECK(opt.fidelity == doctest::Approx(0.8219).epsilon(1e-3));

    double best = -1.0, best_d = 0.0;
    for (double d = -200.0; d <= 200.0; d += 0.5) {
        const double F = engine.fast_fidelity(d, 50.0);
        if (F > best) {
            best = F;
            best_d = d;
        }
    }
    CHECK(std::abs(opt.detuning - best_d) <= 0.5);
    CHECK(engine.fast_fidelity(opt.detuning, 50.0) >= best - 1e-9);
}

TEST_CASE("driven against undriven") {
    MemoryScenario base = driven_scenario(10.0, 10.0);
    const auto rows = compare_driven_undriven(base, {10.0, 20.0});
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CAPTURE(r.collective);
        CHECK(r.ratio >= 10.0);
        CHECK(r.undriven.fidelity < 0.05);
    }
    CHECK(std::abs(rows[1].undriven.fidelity - rows[0].undriven.fidelity) / rows[0].undriven.fidelity < 0.1);
    CHECK(rows[1].driven.fidelity >= rows[0].driven.fidelity);
}
