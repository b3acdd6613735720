#include "bistab/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bistab/ensemble.hpp"
#include "bistab/error.hpp"
#include "bistab/units.hpp"

namespace bistab {

namespace {

constexpr int root_scan_points = 400;
constexpr double root_scan_lo = 1e-12;
constexpr double root_scan_hi = 1e4;
constexpr double root_rel_tol = 1e-12;
constexpr double root_dedup_tol = 1e-9;
constexpr double critical_points_per_decade = 40.0;

}  // namespace

std::string_view to_string(Stability s) noexcept {
    return s == Stability::stable ? "stable" : "unstable";
}

double sigma_z_steady(double x, double g, double theta, double gamma_perp, double gamma_par) {
    if (!(x >= 0.0)) throw DomainError("sigma_z_steady: intensity must be >= 0");
    const double sat = 4.0 * g * g * x * gamma_perp / (gamma_par * (gamma_perp * gamma_perp + theta * theta));
    return -1.0 / (1.0 + sat);
}

SteadyStateModel::SteadyStateModel(const PhysicalParams& params, const SpinClusters& clusters)
    : params_(params), clusters_(clusters) {
    validate(params_);
    const std::size_t m = clusters_.size();
    lorentz_.resize(m);
    saturation_.resize(m);
    const auto coop = cooperativity(clusters_, params_.kappa, params_.gamma_perp);
    coop_ = coop.per_cluster;
    c_coll_ = coop.collective;
    const double gp = params_.gamma_perp;
    for (std::size_t j = 0; j < m; ++j) {
        const double g2 = clusters_.coupling(j) * clusters_.coupling(j);
        const double th = clusters_.detuning(j);
        lorentz_[j] = g2 / cdouble(gp, th);
        saturation_[j] = 4.0 * g2 * gp / (params_.gamma_par * (gp * gp + th * th));
    }
    locate_critical_points();
}

cdouble SteadyStateModel::denominator(double x) const {
    // -z_j = 1 / (1 + s_j x)
    cdouble d(params_.kappa, params_.delta_c);
    for (std::size_t j = 0; j < lorentz_.size(); ++j) d += lorentz_[j] / (1.0 + saturation_[j] * x);
    return d;
}

cdouble SteadyStateModel::denominator_slope(double x) const {
    cdouble d{};
    for (std::size_t j = 0; j < lorentz_.size(); ++j) {
        const double u = 1.0 + saturation_[j] * x;
        d -= lorentz_[j] * (saturation_[j] / (u * u));
    }
    return d;
}

double SteadyStateModel::drive_sq(double x) const { return x * std::norm(denominator(x)); }

double SteadyStateModel::drive_sq_slope(double x) const {
    const cdouble d = denominator(x);
    const cdouble dd = denominator_slope(x);
    return std::norm(d) + 2.0 * x * (std::conj(d) * dd).real();
}

std::vector<double> SteadyStateModel::sigma_z(double x) const {
    std::vector<double> z(saturation_.size());
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = -1.0 / (1.0 + saturation_[j] * x);
    return z;
}

double SteadyStateModel::inversion_summary(double x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < coop_.size(); ++j) s -= coop_[j] / (1.0 + saturation_[j] * x);
    return s;
}

void SteadyStateModel::locate_critical_points() {
    critical_.clear();
    double s_max = 0.0;
    double s_min = std::numeric_limits<double>::infinity();
    for (double s : saturation_) {
        if (s > 0.0) {
            s_max = std::max(s_max, s);
            s_min = std::min(s_min, s);
        }
    }
    if (s_max == 0.0) return;

    // Folds sit between saturation of the strongest cluster and bleaching of
    // the weakest; (1 + C)^2 covers the high-cooperativity upper fold.
    const double lo = std::log10(1e-4 / s_max);
    const double hi = std::log10(1e4 * (1.0 + c_coll_) * (1.0 + c_coll_) / s_min);
    const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) * critical_points_per_decade)) + 1);

    auto x_at = [&](int k) { return std::pow(10.0, lo + (hi - lo) * k / (n - 1)); };
    double x_prev = x_at(0);
    double d_prev = drive_sq_slope(x_prev);
    for (int k = 1; k < n; ++k) {
        const double x = x_at(k);
        const double d = drive_sq_slope(x);
        if ((d_prev > 0.0) != (d > 0.0)) {
            double a = x_prev, b = x;
            const bool rising_at_a = d_prev > 0.0;
            for (int it = 0; it < 200 && b / a - 1.0 > 1e-15; ++it) {
                const double mid = std::sqrt(a * b);
                if ((drive_sq_slope(mid) > 0.0) == rising_at_a)
                    a = mid;
                else
                    b = mid;
            }
            const double xc = std::sqrt(a * b);
            critical_.push_back({xc, drive_sq(xc), rising_at_a});
        }
        x_prev = x;
        d_prev = d;
    }
}

std::vector<SteadyRoot> SteadyStateModel::roots(double eta) const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("steady_roots: eta must be >= 0");
    if (eta == 0.0) return {{0.0, Stability::stable}};

    const double base = eta * eta / (params_.kappa * params_.kappa);
    std::vector<double> xs;
    xs.reserve(root_scan_points + critical_.size());
    const double llo = std::log10(root_scan_lo), lhi = std::log10(root_scan_hi);
    for (int k = 0; k < root_scan_points; ++k)
        xs.push_back(base * std::pow(10.0, llo + (lhi - llo) * k / (root_scan_points - 1)));
    const double x_lo = xs.front(), x_hi = xs.back();
    for (const auto& cp : critical_)
        if (cp.intensity > x_lo && cp.intensity < x_hi) xs.push_back(cp.intensity);
    std::sort(xs.begin(), xs.end());

    std::vector<double> fs(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) fs[k] = residual(xs[k], eta);

    std::vector<double> found;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (!std::isfinite(fs[k])) {
            std::vector<std::pair<double, double>> scan;
            for (std::size_t i = 0; i < xs.size(); ++i) scan.emplace_back(xs[i], fs[i]);
            throw RootScanFailure("steady_roots: non-finite residual in scan", std::move(scan));
        }
        if (fs[k] == 0.0) {
            found.push_back(xs[k]);
            continue;
        }
        if (k + 1 < xs.size() && fs[k + 1] != 0.0 && ((fs[k] < 0.0) != (fs[k + 1] < 0.0))) {
            double a = xs[k], b = xs[k + 1];
            const bool neg_at_a = fs[k] < 0.0;
            while (b - a > root_rel_tol * b) {
                const double mid = (b / a > 2.0) ? std::sqrt(a * b) : 0.5 * (a + b);
                if (mid <= a || mid >= b) break;
                if ((residual(mid, eta) < 0.0) == neg_at_a)
                    a = mid;
                else
                    b = mid;
            }
            found.push_back(0.5 * (a + b));
        }
    }
    if (found.empty()) {
        std::vector<std::pair<double, double>> scan;
        for (std::size_t i = 0; i < xs.size(); ++i) scan.emplace_back(xs[i], fs[i]);
        throw RootScanFailure("steady_roots: no sign change of F over the log scan", std::move(scan));
    }

    std::sort(found.begin(), found.end());
    std::vector<SteadyRoot> out;
    for (double x : found) {
        if (!out.empty() && std::abs(x - out.back().intensity) <= root_dedup_tol * x) continue;
        out.push_back({x, drive_sq_slope(x) > 0.0 ? Stability::stable : Stability::unstable});
    }
    return out;
}

std::vector<SteadyRoot> steady_roots(double eta, const PhysicalParams& params,
                                     const SpinClusters& clusters) {
    return SteadyStateModel(params, clusters).roots(eta);
}

std::optional<FoldPair> find_folds(const SteadyStateModel& model, PowerWindow window) {
    if (!(window.min > 0.0) || !(window.max > window.min))
        throw DomainError("find_folds: power window must be positive and non-empty");
    const auto& cps = model.critical_points();
    const double kappa = model.params().kappa;
    for (std::size_t k = 0; k + 1 < cps.size(); ++k) {
        if (!cps[k].is_maximum || cps[k + 1].is_maximum) continue;
        FoldPair f;
        f.upper = cps[k].drive_sq / kappa;
        f.lower = cps[k + 1].drive_sq / kappa;
        f.intensity_at_upper = cps[k].intensity;
        f.intensity_at_lower = cps[k + 1].intensity;
        if (!(f.lower < f.upper)) continue;
        if (f.lower >= window.min && f.upper <= window.max) return f;
    }
    return std::nullopt;
}

std::optional<FoldPair> find_folds(const PhysicalParams& params, const SpinClusters& clusters,
                                   PowerWindow window) {
    return find_folds(SteadyStateModel(params, clusters), window);
}

namespace {

double log_distance(double a, double b) {
    constexpr double tiny = 1e-300;
    return std::abs(std::log(a + tiny) - std::log(b + tiny));
}

BranchPoint make_point(const SteadyStateModel& model, double p, double eta, const SteadyRoot& r) {
    BranchPoint bp;
    bp.p_in = p;
    bp.intensity = r.intensity;
    bp.transmission = transmission_from_intensity(r.intensity, eta, model.params().kappa);
    bp.stability = r.stability;
    bp.inversion_summary = model.inversion_summary(r.intensity);
    return bp;
}

const SteadyRoot& nearest_stable(const std::vector<SteadyRoot>& roots, double previous) {
    const SteadyRoot* best = nullptr;
    for (const auto& r : roots) {
        if (r.stability != Stability::stable) continue;
        if (!best || log_distance(r.intensity, previous) < log_distance(best->intensity, previous))
            best = &r;
    }
    if (!best) throw NumericalFailure("hysteresis_sweep: no stable root at a grid power");
    return *best;
}

}  // namespace

BistabilityDiagram hysteresis_sweep(std::span<const double> grid, const SteadyStateModel& model) {
    if (grid.empty()) throw ContractViolation("hysteresis_sweep: empty power grid");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] > 0.0)) throw ContractViolation("hysteresis_sweep: powers must be > 0");
        if (k > 0 && !(grid[k] > grid[k - 1]))
            throw ContractViolation("hysteresis_sweep: power grid must be strictly ascending");
    }
    const double kappa = model.params().kappa;

    std::vector<std::vector<SteadyRoot>> roots(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) roots[k] = model.roots(drive_from_power(grid[k], kappa));

    BistabilityDiagram d;
    double prev = roots.front().front().intensity;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double eta = drive_from_power(grid[k], kappa);
        const auto& r = nearest_stable(roots[k], prev);
        prev = r.intensity;
        d.up_branch.push_back(make_point(model, grid[k], eta, r));
        for (const auto& u : roots[k])
            if (u.stability == Stability::unstable) d.unstable.push_back(make_point(model, grid[k], eta, u));
    }
    prev = roots.back().back().intensity;
    for (std::size_t k = grid.size(); k-- > 0;) {
        const double eta = drive_from_power(grid[k], kappa);
        const auto& r = nearest_stable(roots[k], prev);
        prev = r.intensity;
        d.down_branch.push_back(make_point(model, grid[k], eta, r));
    }

    if (grid.size() >= 2) {
        if (auto f = find_folds(model, {grid.front(), grid.back()})) {
            d.fold_lower = f->lower;
            d.fold_upper = f->upper;
        }
    }
    return d;
}

BistabilityDiagram hysteresis_sweep(std::span<const double> grid, const PhysicalParams& params,
                                    const SpinClusters& clusters) {
    return hysteresis_sweep(grid, SteadyStateModel(params, clusters));
}

Asymptotes asymptotes(double c_coll) {
    if (!(c_coll >= 0.0)) throw DomainError("asymptotes: c_coll must be >= 0");
    const double r = 1.0 + c_coll;
    return {1.0 / (r * r), 1.0};
}

}  // namespace bistab
