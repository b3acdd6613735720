#include "bistab/adiabatic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bistab/ensemble.hpp"
#include "bistab/error.hpp"

namespace bistab {

void validate(const AdiabaticModel& m) {
    if (!(m.c_coll >= 0.0) || !std::isfinite(m.c_coll)) throw DomainError("adiabatic: c_coll must be >= 0");
    if (!(m.kappa > 0.0) || !std::isfinite(m.kappa)) throw DomainError("adiabatic: kappa must be > 0");
    if (!(m.gamma_par > 0.0) || !std::isfinite(m.gamma_par))
        throw DomainError("adiabatic: gamma_par must be > 0");
    if (!(m.eta > 0.0) || !std::isfinite(m.eta)) throw DomainError("adiabatic: eta must be > 0");
}

double adiabatic_rhs(double x, const AdiabaticModel& m) {
    if (!(x >= 0.0)) throw DomainError("adiabatic_rhs: x must be >= 0");
    const double y = std::sqrt(x);
    const double c = m.c_coll, k = m.kappa, gp = m.gamma_par, e = m.eta;
    return -8.0 * c * k * k * x * x * y / e + 8.0 * c * k * x * x -
           (2.0 * k * gp / e) * (1.0 + c) * x * y + 2.0 * gp * x;
}

double adiabatic_rhs_slope(double x, const AdiabaticModel& m) {
    if (!(x >= 0.0)) throw DomainError("adiabatic_rhs_slope: x must be >= 0");
    const double y = std::sqrt(x);
    const double c = m.c_coll, k = m.kappa, gp = m.gamma_par, e = m.eta;
    return -20.0 * c * k * k * x * y / e + 16.0 * c * k * x - 3.0 * (k * gp / e) * (1.0 + c) * y +
           2.0 * gp;
}

namespace {

// Positive real roots of b z^3 - b z^2 + (1 + C) z - 1 with z = kappa |a| / eta.
// Dividing rhs by 2 gamma_par x gives -P(z).
struct Cubic {
    double b, c;
    double p(double z) const { return ((b * z - b) * z + (1.0 + c)) * z - 1.0; }
    double dp(double z) const { return (3.0 * b * z - 2.0 * b) * z + (1.0 + c); }
};

double polish(const Cubic& P, double z) {
    for (int it = 0; it < 8; ++it) {
        const double d = P.dp(z);
        if (d == 0.0) break;
        const double next = z - P.p(z) / d;
        if (!(next > 0.0) || std::abs(P.p(next)) >= std::abs(P.p(z))) break;
        z = next;
    }
    return z;
}

double largest_root(double b, double c) {
    // Monic z^3 + a2 z^2 + a1 z + a0, shifted z = t + 1/3.
    const double a2 = -1.0, a1 = (1.0 + c) / b, a0 = -1.0 / b;
    const double p = a1 - a2 * a2 / 3.0;
    const double q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    const double shift = -a2 / 3.0;
    if (p < 0.0) {
        const double r = std::sqrt(-p / 3.0);
        const double arg = (3.0 * q / (2.0 * p)) / r;
        if (std::abs(arg) <= 1.0) return shift + 2.0 * r * std::cos(std::acos(arg) / 3.0);
        return shift - 2.0 * std::copysign(r, q) * std::cosh(std::acosh(std::abs(arg)) / 3.0);
    }
    if (p > 0.0) {
        const double r = std::sqrt(p / 3.0);
        return shift - 2.0 * r * std::sinh(std::asinh((3.0 * q / (2.0 * p)) / r) / 3.0);
    }
    return shift + std::cbrt(-q);
}

std::vector<double> cubic_roots(double b, double c) {
    if (b == 0.0) return {1.0 / (1.0 + c)};
    const Cubic P{b, c};
    const double z3 = polish(P, largest_root(b, c));
    std::vector<double> zs{z3};
    // Deflate: P = (z - z3)(b z^2 + c1 z + c0).
    const double c0 = 1.0 / z3;
    const double c1 = (c0 - (1.0 + c)) / z3;
    const double disc = c1 * c1 - 4.0 * b * c0;
    if (disc >= 0.0) {
        const double s = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
        for (double z : {s / b, c0 / s})
            if (z > 0.0 && std::isfinite(z)) zs.push_back(polish(P, z));
    }
    std::sort(zs.begin(), zs.end());
    zs.erase(std::unique(zs.begin(), zs.end(),
                         [](double u, double v) { return std::abs(u - v) <= 1e-14 * std::max(u, v); }),
             zs.end());
    return zs;
}

}  // namespace

std::vector<FixedPoint> driven_fixed_points(const AdiabaticModel& m) {
    validate(m);
    const double b = 4.0 * m.c_coll * m.eta * m.eta / (m.kappa * m.gamma_par);
    const Cubic P{b, m.c_coll};
    std::vector<FixedPoint> out;
    for (double z : cubic_roots(b, m.c_coll)) {
        if (!std::isfinite(z)) throw NumericalFailure("adiabatic_fixed_points: non-finite root");
        const double amp = m.eta * z / m.kappa;
        out.push_back({amp * amp, P.dp(z) > 0.0 ? Stability::stable : Stability::unstable, false});
    }
    if (out.empty()) throw NumericalFailure("adiabatic_fixed_points: no driven root");
    return out;
}

std::vector<FixedPoint> adiabatic_fixed_points(const AdiabaticModel& m) {
    auto driven = driven_fixed_points(m);
    std::vector<FixedPoint> out{{0.0, Stability::unstable, true}};
    out.insert(out.end(), driven.begin(), driven.end());
    return out;
}

namespace {

struct Simpson {
    const AdiabaticModel& m;
    double rel_tol;

    double f(double x) const { return adiabatic_rhs(x, m); }

    double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol,
                   int depth) const {
        const double m1 = 0.5 * (a + b);
        const double lm = 0.5 * (a + m1), rm = 0.5 * (m1 + b);
        const double flm = f(lm), frm = f(rm);
        const double left = (m1 - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m1) / 6.0 * (fm + 4.0 * frm + fb);
        const double diff = left + right - whole;
        if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
        return recurse(a, m1, fa, flm, fm, left, 0.5 * tol, depth - 1) +
               recurse(m1, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }

    double integrate(double a, double b) const {
        if (b == a) return 0.0;
        const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
        const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        const double scale = (b - a) / 6.0 * (std::abs(fa) + 4.0 * std::abs(fm) + std::abs(fb));
        const double tol = rel_tol * scale + 1e-300;
        return recurse(a, b, fa, fm, fb, whole, tol, 50);
    }
};

}  // namespace

std::vector<double> potential(std::span<const double> grid, const AdiabaticModel& m) {
    validate(m);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] >= 0.0)) throw ContractViolation("potential: grid must be non-negative");
        if (k > 0 && grid[k] < grid[k - 1]) throw ContractViolation("potential: grid must be ascending");
    }
    const Simpson quad{m, 1e-10};
    std::vector<double> v(grid.size());
    double acc = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        acc -= quad.integrate(prev, grid[k]);
        v[k] = acc;
        prev = grid[k];
    }
    return v;
}

AdiabaticModel homogeneous_equivalent(const PhysicalParams& params, const SpinClusters& clusters) {
    validate(params);
    if (clusters.size() != 1 || clusters.detuning(0) != 0.0 || params.delta_c != 0.0)
        throw ContractViolation("homogeneous_equivalent: needs one resonant cluster and delta_c = 0");
    const auto c = cooperativity(clusters, params.kappa, params.gamma_perp);
    return {c.collective, params.kappa, params.gamma_par, params.eta};
}

}  // namespace bistab
