#include <doctest.h>

#include <algorithm>
#include <random>

#include "bistab/adiabatic.hpp"
#include "bistab/error.hpp"
#include "bistab/integrator.hpp"
#include "bistab/steady_state.hpp"
#include "fixtures.hpp"

using namespace bistab;
using fixtures::rel;

namespace {

AdiabaticModel lab_model(double c, double pin_over_upper) {
    const auto p = fixtures::lab_params();
    const SteadyStateModel sm(p, fixtures::resonant(c, p));
    const auto f = find_folds(sm, {1e-30, 1e30});
    const double upper = f ? f->upper : 1.0;
    return {c, p.kappa, p.gamma_par, drive_from_power(upper * pin_over_upper, p.kappa)};
}

// V(x) from term-by-term integration of the rhs.
double closed_potential(double x, const AdiabaticModel& m) {
    const double c = m.c_coll, k = m.kappa, g = m.gamma_par, e = m.eta, y = std::sqrt(x);
    return 8.0 * c * k * k * (2.0 / 7.0) * x * x * x * y / e - 8.0 * c * k * x * x * x / 3.0 +
           (2.0 * k * g / e) * (1.0 + c) * 0.4 * x * x * y - g * x * x;
}

std::vector<double> sign_scan_roots(const AdiabaticModel& m, double scale) {
    const double base = m.eta * m.eta / (m.kappa * m.kappa);
    std::vector<double> out;
    const int n = 20000;
    auto f = [&](double x) { return adiabatic_rhs(x, m) / scale; };
    double x0 = base * 1e-12, f0 = f(x0);
    for (int k = 1; k <= n; ++k) {
        const double x1 = base * std::pow(10.0, -12.0 + 12.5 * k / n), f1 = f(x1);
        if ((f0 < 0) != (f1 < 0)) {
            double a = x0, b = x1;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (a + b);
                ((f(mid) < 0) == (f0 < 0) ? a : b) = mid;
            }
            out.push_back(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    return out;
}

}  // namespace

TEST_SUITE("adiabatic") {

TEST_CASE("right-hand side") {
    const AdiabaticModel m{78.0, 2.0, 0.01, 3.0};
    CHECK(adiabatic_rhs(0.0, m) == 0.0);
    const AdiabaticModel free{0.0, 2.0, 0.01, 3.0};
    CHECK(std::abs(adiabatic_rhs(9.0 / 4.0, free)) < 1e-16);
    // at x = eta^2/kappa^2 the quartic terms cancel: rhs = -2 gamma_par C eta^2 / kappa^2
    CHECK(rel(adiabatic_rhs(9.0 / 4.0, m), -2.0 * 0.01 * 78.0 * 9.0 / 4.0) < 1e-12);
    CHECK_THROWS_AS(adiabatic_rhs(-1.0, m), DomainError);
    const double h = 1e-6, x = 0.3;
    const double fd = (adiabatic_rhs(x + h, m) - adiabatic_rhs(x - h, m)) / (2.0 * h);
    CHECK(rel(adiabatic_rhs_slope(x, m), fd) < 1e-7);
}

TEST_CASE("fixed points without spins") {
    const AdiabaticModel m{0.0, 2.0, 0.01, 3.0};
    const auto fp = adiabatic_fixed_points(m);
    REQUIRE(fp.size() == 2);
    CHECK(fp[0].intensity == 0.0);
    CHECK(fp[0].degenerate);
    CHECK(rel(fp[1].intensity, 9.0 / 4.0) < 1e-15);
    CHECK(fp[1].stability == Stability::stable);
    CHECK_THROWS_AS(adiabatic_fixed_points({1.0, 1.0, 1.0, 0.0}), DomainError);
}

TEST_CASE("bistable fixed points against a sign scan") {
    const auto m = lab_model(78.0, from_db(-3.0));
    const auto fp = driven_fixed_points(m);
    REQUIRE(fp.size() == 3);
    CHECK(fp[0].stability == Stability::stable);
    CHECK(fp[1].stability == Stability::unstable);
    CHECK(fp[2].stability == Stability::stable);
    for (double s : {1.0, 1e-3, 1e3}) {
        const auto scan = sign_scan_roots(m, s);
        REQUIRE(scan.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) CHECK(rel(fp[i].intensity, scan[i]) < 1e-9);
    }
    for (const auto& f : fp) CHECK((adiabatic_rhs_slope(f.intensity, m) < 0.0) == (f.stability == Stability::stable));
}

TEST_CASE("fixed points equal steady-state roots") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 20) {
        PhysicalParams p;
        p.kappa = from_hz(std::pow(10.0, 5.0 + u(rng)));
        p.gamma_perp = p.kappa * (0.05 + 0.5 * u(rng));
        p.gamma_par = from_hz(std::pow(10.0, -4.0 + 2.0 * u(rng)));
        const double c = 10.0 + 190.0 * u(rng);
        const auto cl = fixtures::resonant(c, p);
        p.omega_coll = cl.coupling(0);
        const SteadyStateModel sm(p, cl);
        const auto f = find_folds(sm, {1e-30, 1e30});
        if (!f) continue;
        const double pin = f->lower * std::pow(f->upper / f->lower, 0.1 + 0.8 * u(rng));
        const double eta = drive_from_power(pin, p.kappa);
        p.eta = eta;
        const auto am = homogeneous_equivalent(p, cl);
        CHECK(rel(am.c_coll, c) < 1e-12);
        const auto fp = driven_fixed_points(am);
        const auto roots = sm.roots(eta);
        REQUIRE(fp.size() == 3);
        REQUIRE(roots.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(rel(fp[i].intensity, roots[i].intensity) < 1e-8);
            CHECK(fp[i].stability == roots[i].stability);
        }
        ++checked;
    }
}

TEST_CASE("equivalent model needs one resonant cluster") {
    auto p = fixtures::lab_params();
    p.eta = 1.0;
    CHECK_THROWS_AS(homogeneous_equivalent(p, SpinClusters({1.0, 2.0}, {0.0, 1.0})), ContractViolation);
    CHECK_THROWS_AS(homogeneous_equivalent(p, SpinClusters::homogeneous(1.0, 5.0)), ContractViolation);
}

TEST_CASE("potential against closed form and finite differences") {
    const auto m = lab_model(78.0, from_db(-3.0));
    const double x_max = 1.2 * m.eta * m.eta / (m.kappa * m.kappa);
    std::vector<double> grid;
    for (int k = 0; k <= 2000; ++k) grid.push_back(x_max * k / 2000.0);
    const auto v = potential(grid, m);
    CHECK(v[0] == 0.0);
    double v_scale = 0.0, r_scale = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        v_scale = std::max(v_scale, std::abs(closed_potential(grid[k], m)));
        r_scale = std::max(r_scale, std::abs(adiabatic_rhs(grid[k], m)));
    }
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(v[k] - closed_potential(grid[k], m)) < 1e-9 * v_scale);
    for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
        const double fd = -(v[k + 1] - v[k - 1]) / (grid[k + 1] - grid[k - 1]);
        CHECK(std::abs(fd - adiabatic_rhs(grid[k], m)) < 1e-6 * r_scale);
    }
    const std::vector<double> bad{0.0, 2.0, 1.0};
    CHECK_THROWS_AS(potential(bad, m), ContractViolation);
}

TEST_CASE("potential extrema sit at the fixed points") {
    for (double factor : {from_db(-3.0), from_db(3.0)}) {
        const auto m = lab_model(78.0, factor);
        const auto fp = driven_fixed_points(m);
        const double x_max = 1.2 * m.eta * m.eta / (m.kappa * m.kappa);
        const int n = 20000;
        std::vector<double> grid;
        for (int k = 0; k <= n; ++k) grid.push_back(x_max * k / n);
        const auto v = potential(grid, m);
        std::vector<double> minima, maxima;
        for (int k = 1; k < n; ++k) {
            if (v[k] < v[k - 1] && v[k] < v[k + 1]) minima.push_back(grid[k]);
            if (v[k] > v[k - 1] && v[k] > v[k + 1]) maxima.push_back(grid[k]);
        }
        std::vector<double> stable, unstable;
        for (const auto& f : fp) (f.stability == Stability::stable ? stable : unstable).push_back(f.intensity);
        REQUIRE(minima.size() == stable.size());
        REQUIRE(maxima.size() == unstable.size());
        const double dx = x_max / n;
        for (std::size_t i = 0; i < stable.size(); ++i) CHECK(std::abs(minima[i] - stable[i]) <= dx);
        for (std::size_t i = 0; i < unstable.size(); ++i) CHECK(std::abs(maxima[i] - unstable[i]) <= dx);
    }
}

TEST_CASE("potential decreases along trajectories") {
    const auto m = lab_model(78.0, from_db(-3.0));
    const auto fp = driven_fixed_points(m);
    for (double x0 : {0.2 * fp[0].intensity, 0.9 * fp[1].intensity, 1.1 * fp[1].intensity, 2.0 * fp[2].intensity}) {
        std::vector<double> y{x0}, xs;
        std::vector<double> times;
        for (int k = 0; k <= 200; ++k) times.push_back(k * 50.0 / m.gamma_par);
        StepperConfig sc;
        sc.rel_tol = 1e-10;
        sc.abs_tol = 1e-20;
        dopri5([&](double, std::span<const double> s, std::span<double> d) { d[0] = adiabatic_rhs(std::max(s[0], 0.0), m); },
               y, 0.0, times, [&](double, std::span<const double> s) {
                   xs.push_back(s[0]);
                   return true;
               },
               sc);
        std::vector<double> sorted = xs;
        std::sort(sorted.begin(), sorted.end());
        auto v = potential(sorted, m);
        // evaluate V along the trajectory order
        for (std::size_t k = 1; k < xs.size(); ++k) {
            const auto i0 = std::lower_bound(sorted.begin(), sorted.end(), xs[k - 1]) - sorted.begin();
            const auto i1 = std::lower_bound(sorted.begin(), sorted.end(), xs[k]) - sorted.begin();
            CHECK(v[i1] <= v[i0] + 1e-12 * std::abs(v[i0]));
        }
    }
}

}
