#include <doctest.h>

#include <random>

#include "bistab/ensemble.hpp"
#include "bistab/error.hpp"
#include "bistab/steady_state.hpp"
#include "fixtures.hpp"

using namespace bistab;
using fixtures::rel;

namespace {

// Scalar residual for one resonant cluster, written out independently.
struct ResonantOracle {
    double kappa, gp, gpar, g;
    double s() const { return 4.0 * g * g / (gpar * gp); }
    double f(double x, double eta) const {
        const double d = kappa + g * g / (gp * (1.0 + s() * x));
        return x * d * d - eta * eta;
    }
    std::vector<double> roots(double eta) const {
        std::vector<double> out;
        const double base = eta * eta / (kappa * kappa);
        const int n = 20000;
        double x0 = base * 1e-14, f0 = f(x0, eta);
        for (int k = 1; k <= n; ++k) {
            const double x1 = base * std::pow(10.0, -14.0 + 16.0 * k / n), f1 = f(x1, eta);
            if ((f0 < 0) != (f1 < 0)) {
                double a = x0, b = x1;
                for (int it = 0; it < 200; ++it) {
                    const double m = 0.5 * (a + b);
                    ((f(m, eta) < 0) == (f0 < 0) ? a : b) = m;
                }
                out.push_back(0.5 * (a + b));
            }
            x0 = x1;
            f0 = f1;
        }
        return out;
    }
};

// Dense-sample extrema of Y(x) = x |D(x)|^2 for any cluster set.
std::vector<double> dense_fold_powers(const PhysicalParams& p, const SpinClusters& c, double x_lo, double x_hi) {
    auto y = [&](double x) {
        cdouble d(p.kappa, p.delta_c);
        for (std::size_t j = 0; j < c.size(); ++j) {
            const double g2 = c.coupling(j) * c.coupling(j), th = c.detuning(j);
            const double s = 4.0 * g2 * p.gamma_perp / (p.gamma_par * (p.gamma_perp * p.gamma_perp + th * th));
            d += g2 / (cdouble(p.gamma_perp, th) * (1.0 + s * x));
        }
        return x * std::norm(d);
    };
    const int n = 40000;
    std::vector<double> ys(n + 1), out;
    for (int k = 0; k <= n; ++k) ys[k] = y(x_lo * std::pow(x_hi / x_lo, double(k) / n));
    for (int k = 1; k < n; ++k)
        if ((ys[k] > ys[k - 1] && ys[k] > ys[k + 1]) || (ys[k] < ys[k - 1] && ys[k] < ys[k + 1]))
            out.push_back(ys[k] / p.kappa);
    return out;
}

}  // namespace

TEST_SUITE("steady-state") {

TEST_CASE("closed-form inversion") {
    const double g = 1e4, th = 3e5, gp = 1e6, gpar = 1e-2;
    CHECK(sigma_z_steady(0.0, g, th, gp, gpar) == -1.0);
    double prev = -1.0;
    for (double x = 1e-12; x < 1e6; x *= 10.0) {
        const double z = sigma_z_steady(x, g, th, gp, gpar);
        CHECK(z > prev);
        CHECK(z < 0.0);
        prev = z;
    }
    CHECK(prev > -1e-3);
    const double x_half = gpar * (gp * gp + th * th) / (4.0 * g * g * gp);
    CHECK(sigma_z_steady(x_half, g, th, gp, gpar) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK_THROWS_AS(sigma_z_steady(-1.0, g, th, gp, gpar), DomainError);
}

TEST_CASE("empty cavity") {
    auto p = fixtures::lab_params();
    p.omega_coll = 0.0;
    const auto c = SpinClusters::homogeneous(0.0);
    for (double eta : {1.0, 1e3, 1e6}) {
        const auto r = steady_roots(eta, p, c);
        REQUIRE(r.size() == 1);
        CHECK(rel(r[0].intensity, eta * eta / (p.kappa * p.kappa)) < 1e-11);
        CHECK(r[0].stability == Stability::stable);
    }
    p.delta_c = 0.5 * p.kappa;
    const auto r = steady_roots(10.0, p, c);
    REQUIRE(r.size() == 1);
    CHECK(rel(r[0].intensity, 100.0 / (p.kappa * p.kappa + p.delta_c * p.delta_c)) < 1e-11);
    CHECK(steady_roots(0.0, p, c).front().intensity == 0.0);
    CHECK_THROWS_AS(steady_roots(-1.0, p, c), DomainError);
}

TEST_CASE("homogeneous C = 78 root sets against a dense scan") {
    const auto p = fixtures::lab_params();
    const auto c = fixtures::resonant(78.0, p);
    const SteadyStateModel model(p, c);
    const ResonantOracle oracle{p.kappa, p.gamma_perp, p.gamma_par, c.coupling(0)};
    const auto folds = find_folds(model, {1e-30, 1e30});
    REQUIRE(folds);
    int three = 0, one = 0;
    for (double db = -12.125; db <= 6.0; db += 0.25) {
        const double pin = folds->upper * from_db(db);
        const double eta = drive_from_power(pin, p.kappa);
        const auto got = model.roots(eta);
        const auto want = oracle.roots(eta);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(rel(got[i].intensity, want[i]) < 1e-9);
        const bool inside = pin > folds->lower && pin < folds->upper;
        CHECK(got.size() == (inside ? 3u : 1u));
        (inside ? three : one)++;
        if (got.size() == 3) {
            CHECK(got[0].stability == Stability::stable);
            CHECK(got[1].stability == Stability::unstable);
            CHECK(got[2].stability == Stability::stable);
        }
    }
    CHECK(three > 0);
    CHECK(one > 0);
}

TEST_CASE("saturation-free limit gives the low transmission") {
    auto p = fixtures::lab_params();
    p.gamma_par = 1e12;  // saturation impossible; ordering warning is expected
    const auto c = fixtures::resonant(78.0, p);
    const double eta = 1e3;
    const auto r = steady_roots(eta, p, c);
    REQUIRE(r.size() == 1);
    CHECK(rel(r[0].intensity, eta * eta / (p.kappa * p.kappa) / 6241.0) < 1e-9);
}

TEST_CASE("roots are self-consistent") {
    const auto p = fixtures::lab_params();
    const auto c = discretize(fixtures::lab_ensemble(1001), p.omega_coll);
    const SteadyStateModel model(p, c);
    for (double pin : {0.1, 0.47, 0.5, 0.58, 3.0}) {
        const double eta = drive_from_power(pin, p.kappa);
        for (const auto& r : model.roots(eta)) {
            const double x = r.intensity;
            // rebuild D from the cluster inversions
            const auto z = model.sigma_z(x);
            cdouble d(p.kappa, p.delta_c);
            for (std::size_t j = 0; j < c.size(); ++j)
                d -= c.coupling(j) * c.coupling(j) * z[j] / cdouble(p.gamma_perp, c.detuning(j));
            CHECK(rel(eta * eta / std::norm(d), x) < 1e-10);
        }
    }
}

TEST_CASE("root count is odd") {
    const auto p = fixtures::lab_params();
    const auto c = discretize(fixtures::lab_ensemble(501), p.omega_coll);
    const SteadyStateModel model(p, c);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const auto r = model.roots(drive_from_power(std::pow(10.0, u(rng)), p.kappa));
        CHECK(r.size() % 2 == 1);
    }
}

TEST_CASE("low and high drive limits") {
    const auto p = fixtures::lab_params();
    const auto c = fixtures::resonant(78.0, p);
    const SteadyStateModel model(p, c);
    const auto folds = find_folds(model, {1e-30, 1e30});
    REQUIRE(folds);
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(folds->upper * std::pow(10.0, -12.0 + 0.1 * k));
    const auto d = hysteresis_sweep(grid, model);
    CHECK(rel(d.up_branch.front().transmission, 1.0 / 6241.0) < 1e-6);

    // 1 - |T|^2 falls as 1/P on the upper branch.
    auto deficit = [&](double factor) {
        const double pin = folds->upper * factor;
        const double eta = drive_from_power(pin, p.kappa);
        const auto r = model.roots(eta);
        return 1.0 - transmission_from_intensity(r.back().intensity, eta, p.kappa);
    };
    const double d4 = deficit(1e4), d5 = deficit(1e5), d6 = deficit(1e6);
    CHECK(d4 > 0.0);
    CHECK(d4 * 1e4 == doctest::Approx(d5 * 1e5).epsilon(2e-3));
    CHECK(d5 * 1e5 == doctest::Approx(d6 * 1e6).epsilon(2e-3));
    CHECK(d6 < 1e-6);

    const auto inh = discretize(fixtures::lab_ensemble(1001), p.omega_coll);
    const SteadyStateModel mi(p, inh);
    const double eta = drive_from_power(1e-12, p.kappa);
    const double t = transmission_from_intensity(mi.roots(eta).front().intensity, eta, p.kappa);
    const double cc = mi.collective_cooperativity();
    CHECK(rel(t, 1.0 / ((1.0 + cc) * (1.0 + cc))) < 1e-6);
}

TEST_CASE("fold finder against dense sampling") {
    struct Case {
        double omega_hz, kappa_hz;
        bool bistable;
    };
    for (const auto& cs : {Case{9.6e6, 1.2e6, false}, Case{9.6e6, 0.44e6, true}, Case{12.6e6, 0.44e6, true}}) {
        const auto p = fixtures::lab_params(cs.omega_hz, cs.kappa_hz);
        const auto c = discretize(fixtures::lab_ensemble(1001), p.omega_coll);
        const SteadyStateModel model(p, c);
        const auto f = find_folds(model, {1e-30, 1e30});
        const auto dense = dense_fold_powers(p, c, 1e-14, 1e-2);
        CHECK(f.has_value() == cs.bistable);
        if (!f) {
            CHECK(dense.empty());
            continue;
        }
        REQUIRE(dense.size() == 2);
        CHECK(rel(f->upper, dense[0]) < 1e-6);
        CHECK(rel(f->lower, dense[1]) < 1e-6);
        CHECK(f->lower < f->upper);

        // defining conditions of a saddle-node
        for (double x : {f->intensity_at_lower, f->intensity_at_upper}) {
            const double scale = std::norm(model.denominator(x));
            CHECK(std::abs(model.drive_sq_slope(x)) < 1e-8 * scale);
        }
        // root count changes across each fold
        auto count = [&](double pin) { return model.roots(drive_from_power(pin, p.kappa)).size(); };
        CHECK(count(f->lower * (1.0 - 1e-6)) == 1);
        CHECK(count(f->lower * (1.0 + 1e-6)) == 3);
        CHECK(count(f->upper * (1.0 - 1e-6)) == 3);
        CHECK(count(f->upper * (1.0 + 1e-6)) == 1);
    }
}

TEST_CASE("folds outside the window are not reported") {
    const auto p = fixtures::lab_params();
    const SteadyStateModel model(p, fixtures::resonant(78.0, p));
    const auto f = find_folds(model, {1e-30, 1e30});
    REQUIRE(f);
    CHECK(find_folds(model, {f->lower * 1.01, f->upper * 2.0}) == std::nullopt);
    CHECK(find_folds(model, {f->lower * 0.5, f->upper * 2.0}).has_value());
    CHECK_THROWS_AS(find_folds(model, {1.0, 0.5}), DomainError);
}

TEST_CASE("hysteresis sweep") {
    const auto p = fixtures::lab_params();
    const SteadyStateModel model(p, fixtures::resonant(49.0, p));
    const auto f = find_folds(model, {1e-30, 1e30});
    REQUIRE(f);
    std::vector<double> grid;
    for (int k = 0; k < 81; ++k) grid.push_back(f->upper * from_db(-10.0 + 12.0 * k / 80.0));
    const auto d = hysteresis_sweep(grid, model);
    REQUIRE(d.up_branch.size() == grid.size());
    REQUIRE(d.down_branch.size() == grid.size());
    REQUIRE(d.fold_lower);
    CHECK(*d.fold_lower == f->lower);
    CHECK(*d.fold_upper == f->upper);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& up = d.up_branch[k];
        const auto& down = d.down_branch[grid.size() - 1 - k];
        CHECK(up.p_in == down.p_in);
        CHECK(up.stability == Stability::stable);
        const bool differ = rel(up.intensity, down.intensity) > 1e-9;
        if (differ) {
            CHECK(up.p_in > f->lower);
            CHECK(up.p_in < f->upper);
            CHECK(up.intensity < down.intensity);
        }
        CHECK(up.inversion_summary < 0.0);
    }
    for (const auto& u : d.unstable) {
        CHECK(u.stability == Stability::unstable);
        CHECK(u.p_in > f->lower);
        CHECK(u.p_in < f->upper);
    }
    CHECK(!d.unstable.empty());

    const std::vector<double> unsorted{1.0, 0.5};
    CHECK_THROWS_AS(hysteresis_sweep(unsorted, model), ContractViolation);
    const std::vector<double> zero{0.0, 1.0};
    CHECK_THROWS_AS(hysteresis_sweep(zero, model), ContractViolation);
    CHECK_THROWS_AS(hysteresis_sweep(std::vector<double>{}, model), ContractViolation);
}

TEST_CASE("transmission asymptotes") {
    CHECK(asymptotes(0.0).low == 1.0);
    CHECK(asymptotes(0.0).high == 1.0);
    CHECK(rel(asymptotes(78.0).low, 1.0 / 6241.0) < 1e-15);
    CHECK(asymptotes(49.0).low == doctest::Approx(4.0e-4).epsilon(1e-15));
    CHECK_THROWS_AS(asymptotes(-1.0), DomainError);
}

TEST_CASE("scan failure carries the scan") {
    auto p = fixtures::lab_params();
    p.gamma_par = 1e12;
    const auto c = fixtures::resonant(1e7, p);
    try {
        steady_roots(1.0, p, c);
        FAIL("expected RootScanFailure");
    } catch (const RootScanFailure& e) {
        CHECK(e.scan().size() >= 400);
    }
}

}
