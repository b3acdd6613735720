#include <doctest.h>

#include <random>

#include "bistab/error.hpp"
#include "bistab/model.hpp"
#include "bistab/units.hpp"
#include "fixtures.hpp"

using namespace bistab;
using fixtures::rel;

TEST_SUITE("core-model") {

TEST_CASE("dark state is an exact fixed point at zero drive") {
    auto p = fixtures::lab_params();
    SpinClusters c({1e5, 2e5, 1e5}, {-1e6, 0.0, 1e6});
    const auto d = mb_rhs(SystemState::ground(3), p, c);
    CHECK(d.a == cdouble(0.0, 0.0));
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(d.sigma_minus[j] == cdouble(0.0, 0.0));
        CHECK(d.sigma_z[j] == 0.0);
    }
}

TEST_CASE("decoupled cluster") {
    PhysicalParams p{2.0, 0.5, 0.1, 0.0, 0.0, 0.0};
    auto c = SpinClusters::homogeneous(0.0);
    SystemState s(1);
    s.a = 1.0;
    s.sigma_z[0] = -0.3;
    const auto d = mb_rhs(s, p, c);
    CHECK(d.a == cdouble(-2.0, 0.0));
    CHECK(d.sigma_z[0] == doctest::Approx(-0.1 * 0.7).epsilon(1e-15));
}

TEST_CASE("resonant cluster matches scalar equations") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PhysicalParams p{3.1, 0.7, 0.02, 5.0, 1.3, 0.0};
    const double g = 5.0;
    auto c = SpinClusters::homogeneous(g);
    for (int trial = 0; trial < 200; ++trial) {
        const double a = 2.0 * u(rng), s = 0.5 * u(rng), z = -0.5 + 0.5 * u(rng);
        SystemState st(1);
        st.a = a;
        st.sigma_minus[0] = s;
        st.sigma_z[0] = z;
        const auto d = mb_rhs(st, p, c);
        const double da = -p.kappa * a + g * s + p.eta;
        const double ds = -p.gamma_perp * s + g * z * a;
        const double dz = -p.gamma_par * (1.0 + z) - 4.0 * g * s * a;
        CHECK(rel(d.a.real(), da) < 1e-14);
        CHECK(d.a.imag() == 0.0);
        CHECK(rel(d.sigma_minus[0].real(), ds) < 1e-14);
        CHECK(rel(d.sigma_z[0], dz) < 1e-14);
    }
}

TEST_CASE("linear in field and coherence at frozen zero inversion") {
    PhysicalParams p{1.0, 0.4, 0.01, 2.0, 0.8, 0.3};
    SpinClusters c({0.5, 1.1}, {-0.2, 0.4});
    SystemState s(2);
    s.a = {0.3, -0.2};
    s.sigma_minus = {{0.1, 0.05}, {-0.02, 0.07}};
    s.sigma_z = {0.0, 0.0};
    auto d1 = mb_rhs(s, p, c);
    SystemState s2 = s;
    s2.a *= 2.0;
    for (auto& sm : s2.sigma_minus) sm *= 2.0;
    auto d2 = mb_rhs(s2, p.with_drive(2.0 * p.eta), c);
    CHECK(d2.a == 2.0 * d1.a);
    for (std::size_t j = 0; j < 2; ++j) CHECK(d2.sigma_minus[j] == 2.0 * d1.sigma_minus[j]);
}

TEST_CASE("conjugation symmetry") {
    PhysicalParams p{1.0, 0.4, 0.01, 2.0, 0.8, 0.3};
    SpinClusters c({0.5, 1.1}, {-0.2, 0.4});
    SpinClusters cm({1.1, 0.5}, {-0.4, 0.2});
    SystemState s(2);
    s.a = {0.3, -0.2};
    s.sigma_minus = {{0.1, 0.05}, {-0.02, 0.07}};
    s.sigma_z = {-0.6, -0.9};
    SystemState sc(2);
    sc.a = std::conj(s.a);
    sc.sigma_minus = {std::conj(s.sigma_minus[1]), std::conj(s.sigma_minus[0])};
    sc.sigma_z = {s.sigma_z[1], s.sigma_z[0]};
    PhysicalParams pc = p;
    pc.delta_c = -p.delta_c;
    const auto d = mb_rhs(s, p, c);
    const auto dc = mb_rhs(sc, pc, cm);
    CHECK(std::abs(dc.a - std::conj(d.a)) < 1e-15);
    CHECK(std::abs(dc.sigma_minus[0] - std::conj(d.sigma_minus[1])) < 1e-15);
    CHECK(dc.sigma_z[0] == doctest::Approx(d.sigma_z[1]).epsilon(1e-15));
}

TEST_CASE("dimension mismatch") {
    auto p = fixtures::lab_params();
    SpinClusters c({1.0, 2.0}, {0.0, 1.0});
    CHECK_THROWS_AS(mb_rhs(SystemState::ground(3), p, c), ContractViolation);
    std::vector<double> y(flat::size(3)), dy(flat::size(3));
    CHECK_THROWS_AS(flat::mb_rhs(y, dy, p, c), ContractViolation);
}

TEST_CASE("flat layout agrees with the structured form") {
    PhysicalParams p{1.0, 0.4, 0.01, 2.0, 0.8, 0.3};
    SpinClusters c({0.5, 1.1, 0.2}, {-0.2, 0.4, 0.9});
    SystemState s(3);
    s.a = {0.3, -0.2};
    s.sigma_minus = {{0.1, 0.05}, {-0.02, 0.07}, {0.2, -0.1}};
    s.sigma_z = {-0.6, -0.9, -0.1};
    std::vector<double> y(flat::size(3)), dy(flat::size(3));
    flat::pack(s, y);
    const auto back = flat::unpack(y, 3);
    CHECK(back.a == s.a);
    CHECK(back.sigma_minus == s.sigma_minus);
    CHECK(back.sigma_z == s.sigma_z);
    flat::mb_rhs(y, dy, p, c);
    const auto d = mb_rhs(s, p, c);
    std::vector<double> expect(flat::size(3));
    flat::pack(d, expect);
    CHECK(dy == expect);
}

TEST_CASE("drive and power conversions") {
    const double kappa = from_hz(0.44e6);
    CHECK(drive_from_power(0.0, kappa) == 0.0);
    CHECK(drive_from_power(1.0, kappa) == doctest::Approx(std::sqrt(two_pi * 0.44e6)).epsilon(1e-15));
    for (int k = 0; k < 1000; ++k) {
        const double p = std::pow(10.0, -10.0 + 20.0 * k / 999.0);
        CHECK(rel(power_from_drive(drive_from_power(p, kappa), kappa), p) <= 1e-15);
    }
    CHECK_THROWS_AS(drive_from_power(-1.0, kappa), DomainError);
    CHECK_THROWS_AS(power_from_drive(-1.0, kappa), DomainError);
}

TEST_CASE("transmission") {
    const double kappa = 3.0, eta = 2.0;
    CHECK(transmission(eta / kappa, eta, kappa) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(transmission(0.0, eta, kappa) == 0.0);
    // low branch with C = 78: a = (eta/kappa) / (1 + C)
    const double t = transmission(eta / kappa / 79.0, eta, kappa);
    CHECK(rel(t, 1.0 / 6241.0) < 1e-14);
    CHECK(to_db(t) == doctest::Approx(-37.9525).epsilon(1e-5));
    CHECK(from_db(to_db(0.37)) == doctest::Approx(0.37).epsilon(1e-15));
    CHECK_THROWS_AS(transmission(1.0, 0.0, kappa), DomainError);
}

TEST_CASE("parameter validation") {
    auto p = fixtures::lab_params();
    CHECK(validate(p).empty());
    PhysicalParams bad = p;
    bad.kappa = 0.0;
    CHECK_THROWS_AS(validate(bad), DomainError);
    bad = p;
    bad.eta = -1.0;
    CHECK_THROWS_AS(validate(bad), DomainError);
    PhysicalParams swapped = p;
    swapped.gamma_par = 2.0 * p.gamma_perp;
    CHECK(validate(swapped).size() == 1);
    SystemState s(4);
    CHECK(s.sigma_z == std::vector<double>(4, -1.0));
}

TEST_CASE("cluster construction") {
    CHECK_THROWS_AS(SpinClusters({1.0}, {0.0, 1.0}), ContractViolation);
    CHECK_THROWS_AS(SpinClusters({}, {}), ContractViolation);
    CHECK_THROWS_AS(SpinClusters({1.0, 1.0}, {1.0, 1.0}), ContractViolation);
    CHECK_THROWS_AS(SpinClusters({-1.0}, {0.0}), ContractViolation);
    SpinClusters c({3.0, 4.0}, {0.0, 1.0});
    CHECK(c.total_coupling_sq() == 25.0);
    CHECK(c.weights()[1] == doctest::Approx(16.0 / 25.0));
}

}
