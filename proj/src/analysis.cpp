#include "bistab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bistab/error.hpp"

namespace bistab {

SteadyDetector::SteadyDetector(double threshold, std::size_t window) : threshold_(threshold), window_(window) {
    if (!(threshold > 0.0)) throw ContractViolation("SteadyDetector: threshold must be > 0");
    if (window == 0) throw ContractViolation("SteadyDetector: window must be >= 1");
}

bool is_quiet(double x, double rate, double threshold) {
    if (x > 0.0) return std::abs(rate) / x < threshold;
    return rate == 0.0;
}

std::optional<double> SteadyDetector::feed(double t, double x, double rate) {
    if (is_quiet(x, rate, threshold_)) {
        if (!run_start_) {
            run_start_ = t;
            run_length_ = 0;
        }
        if (++run_length_ >= window_) return run_start_;
    } else {
        run_start_.reset();
        run_length_ = 0;
    }
    return std::nullopt;
}

std::optional<double> detect_steady(const Trajectory& traj, double threshold) {
    if (traj.empty()) throw ContractViolation("detect_steady: empty trajectory");
    SteadyDetector det(threshold);
    for (const auto& r : traj.records)
        if (auto t = det.feed(r.time, r.intensity, r.intensity_rate)) return t;
    return det.open_run();
}

Transit find_transit(const Trajectory& traj, double start_time) {
    const auto& rs = traj.records;
    std::size_t i0 = 0;
    while (i0 < rs.size() && rs[i0].time < start_time) ++i0;
    if (rs.size() < i0 + 2) throw AnalysisError("switching_time: trajectory too short after start time");
    const double upper = rs[i0].intensity;
    const double lower = rs.back().intensity;
    if (!(lower < 0.95 * upper)) throw AnalysisError("switching_time: no transit to a lower branch");

    Transit tr;
    tr.begin = i0;
    for (std::size_t i = i0; i < rs.size(); ++i)
        if (std::abs(rs[i].intensity - upper) <= 0.05 * upper) tr.begin = i;
    tr.end = rs.size() - 1;
    for (std::size_t i = tr.begin + 1; i < rs.size(); ++i) {
        if (std::abs(rs[i].intensity - lower) <= 0.05 * lower) {
            tr.end = i;
            break;
        }
    }
    return tr;
}

namespace {

// Cubic Hermite in ln x through (ln x, -r) at both records; returns r at the
// point in (lo, hi) where x crosses `level`.
std::optional<double> rate_at_crossing(const TrajectoryRecord& lo, const TrajectoryRecord& hi, double level) {
    const double h = hi.time - lo.time;
    if (!(h > 0.0) || !(lo.intensity > 0.0) || !(hi.intensity > 0.0) || !(level > 0.0)) return std::nullopt;
    if ((lo.intensity - level) * (hi.intensity - level) > 0.0) return std::nullopt;
    const double u0 = std::log(lo.intensity), u1 = std::log(hi.intensity), target = std::log(level);
    const double d0 = -lo.decay_rate() * h, d1 = -hi.decay_rate() * h;
    auto u = [&](double s) {
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * u0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * u1 + (s3 - s2) * d1;
    };
    auto du = [&](double s) {
        const double s2 = s * s;
        return ((6 * s2 - 6 * s) * u0 + (3 * s2 - 4 * s + 1) * d0 + (-6 * s2 + 6 * s) * u1 + (3 * s2 - 2 * s) * d1) / h;
    };
    const bool above_at_lo = u0 > target;
    double a = 0.0, b = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (a + b);
        ((u(m) > target) == above_at_lo ? a : b) = m;
    }
    return -du(0.5 * (a + b));
}

}  // namespace

double switching_time(const Trajectory& traj, double start_time) {
    const Transit tr = find_transit(traj, start_time);
    const auto& rs = traj.records;
    double r_min = std::numeric_limits<double>::infinity();
    auto consider = [&](double r) {
        if (r > 0.0) r_min = std::min(r_min, r);
    };
    std::size_t first = tr.begin, last = tr.end;
    // Interval ends are the band crossings, not the neighbouring samples.
    std::size_t i0 = 0;
    while (rs[i0].time < start_time) ++i0;
    const double upper = rs[i0].intensity, lower = rs.back().intensity;
    if (tr.begin + 1 <= tr.end) {
        if (auto r = rate_at_crossing(rs[tr.begin], rs[tr.begin + 1], 0.95 * upper)) {
            consider(*r);
            first = tr.begin + 1;
        }
    }
    if (tr.end > first && std::abs(rs[tr.end].intensity - lower) <= 0.05 * lower) {
        if (auto r = rate_at_crossing(rs[tr.end - 1], rs[tr.end], 1.05 * lower)) {
            consider(*r);
            last = tr.end - 1;
        }
    }
    for (std::size_t i = first; i <= last; ++i) consider(rs[i].decay_rate());
    if (!std::isfinite(r_min)) throw AnalysisError("switching_time: no positive decay rate along the transit");
    return 1.0 / r_min;
}

namespace {

struct LineFit {
    double slope = 0.0, intercept = 0.0, residual = 0.0;
};

LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError("least squares: abscissae are all equal");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - f.intercept - f.slope * xs[i];
        ss += r * r;
    }
    f.residual = std::sqrt(ss);
    return f;
}

ScalingFit fit_at(std::span<const std::pair<double, double>> pts, double p_crit, const char* mode) {
    std::vector<double> xs, ys;
    for (const auto& [p, t] : pts) {
        xs.push_back(std::log(p_crit - p));
        ys.push_back(std::log(t));
    }
    const LineFit lf = least_squares(xs, ys);
    return {-lf.slope, p_crit, std::exp(lf.intercept), lf.residual, mode};
}

}  // namespace

ScalingFitResult fit_scaling(std::span<const std::pair<double, double>> pts, double hint) {
    if (pts.size() < 4) throw FitError("fit_scaling: at least 4 points required");
    if (!(hint > 0.0) || !std::isfinite(hint)) throw FitError("fit_scaling: p_crit hint must be > 0");
    double p_max = -std::numeric_limits<double>::infinity();
    for (const auto& [p, t] : pts) {
        if (!std::isfinite(p) || !(t > 0.0) || !std::isfinite(t))
            throw FitError("fit_scaling: powers must be finite and switching times > 0");
        if (!(p < hint)) throw FitError("fit_scaling: every power must lie below p_crit");
        p_max = std::max(p_max, p);
    }
    const bool spread = std::any_of(pts.begin(), pts.end(), [&](const auto& pt) { return pt.first != pts[0].first; });
    if (!spread) throw FitError("fit_scaling: all powers are equal");

    ScalingFitResult out;
    out.fixed = fit_at(pts, hint, "fixed");
    if (!(out.fixed.alpha > 0.0)) throw FitError("fit_scaling: fitted exponent is not positive");

    // Free p_crit: scan log(p_crit - p_max), then golden section.
    const double lo = std::max(0.95 * hint, p_max) - p_max;
    const double hi = 1.05 * hint - p_max;
    const double u_lo = std::log(std::max(lo, 1e-9 * hint)), u_hi = std::log(hi);
    auto cost = [&](double u) { return fit_at(pts, p_max + std::exp(u), "free").residual_norm; };
    constexpr int scan = 200;
    int best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= scan; ++k) {
        const double c = cost(u_lo + (u_hi - u_lo) * k / scan);
        if (c < best_cost) {
            best_cost = c;
            best = k;
        }
    }
    double a = u_lo + (u_hi - u_lo) * std::max(best - 1, 0) / scan;
    double b = u_lo + (u_hi - u_lo) * std::min(best + 1, scan) / scan;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c1 = b - inv_phi * (b - a), c2 = a + inv_phi * (b - a);
    double f1 = cost(c1), f2 = cost(c2);
    for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
        if (f1 < f2) {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - inv_phi * (b - a);
            f1 = cost(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + inv_phi * (b - a);
            f2 = cost(c2);
        }
    }
    const double u = f1 < f2 ? c1 : c2;
    ScalingFit free = fit_at(pts, p_max + std::exp(u), "free");
    if (free.alpha > 0.0) out.free = free;
    return out;
}

double asymptotic_decay_rate(const Trajectory& traj) {
    const auto& rs = traj.records;
    if (rs.size() < 3) throw FitError("asymptotic_decay_rate: trajectory too short");
    const double x_f = rs.back().intensity;
    double excursion = 0.0;
    for (const auto& r : rs) excursion = std::max(excursion, std::abs(r.intensity - x_f));
    if (!(excursion > 0.0)) throw FitError("asymptotic_decay_rate: constant trajectory");
    std::size_t start = rs.size();
    while (start > 0 && std::abs(rs[start - 1].intensity - x_f) <= 0.1 * excursion) --start;

    std::vector<double> xs, ys;
    for (std::size_t i = start; i < rs.size(); ++i) {
        xs.push_back(rs[i].intensity);
        ys.push_back(rs[i].intensity_rate);
    }
    if (xs.size() < 3) throw FitError("asymptotic_decay_rate: fewer than 3 tail samples");
    const double trend = xs.back() - xs.front();
    const double slack = 1e-9 * excursion;
    for (std::size_t i = 1; i < xs.size(); ++i)
        if ((xs[i] - xs[i - 1]) * trend < 0.0 && std::abs(xs[i] - xs[i - 1]) > slack)
            throw FitError("asymptotic_decay_rate: tail is not monotone");
    const LineFit lf = least_squares(xs, ys);
    return -lf.slope;
}

BoundsReport check_bounds(const Trajectory& traj, double rel_tol) {
    BoundsReport rep;
    const double slack = 10.0 * rel_tol;
    for (const auto& r : traj.records) {
        rep.worst_sigma_z_low = std::max(rep.worst_sigma_z_low, -1.0 - r.sigma_z_min);
        rep.worst_sigma_z_high = std::max(rep.worst_sigma_z_high, r.sigma_z_max);
        rep.worst_sigma_minus = std::max(rep.worst_sigma_minus, r.sigma_minus_max - 0.5);
    }
    rep.ok = rep.worst_sigma_z_low <= slack && rep.worst_sigma_z_high <= slack && rep.worst_sigma_minus <= slack;
    return rep;
}

}  // namespace bistab
