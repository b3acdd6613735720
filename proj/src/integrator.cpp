#include "bistab/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bistab/error.hpp"

namespace bistab {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// PI controller.
constexpr double safety = 0.9;
constexpr double beta = 0.04;
constexpr double expo1 = 0.2 - beta * 0.75;
constexpr double grow_max = 5.0;
constexpr double shrink_min = 0.1;

struct Work {
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, r1, r2, r3, r4, r5, yout;
    explicit Work(std::size_t n)
        : k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), r1(n), r2(n), r3(n),
          r4(n), r5(n), yout(n) {}
};

double error_norm(std::span<const double> err, std::span<const double> y0, std::span<const double> y1,
                  const StepperConfig& cfg) {
    double acc = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        const double sk = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sk;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

// Starting step after Hairer & Wanner, II.4.
double initial_step(const OdeRhs& rhs, double t0, std::span<const double> y, std::span<const double> f0,
                    double horizon, const StepperConfig& cfg, Work& w, std::size_t& evals) {
    const std::size_t n = y.size();
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sk = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
        dnf += (f0[i] / sk) * (f0[i] / sk);
        dny += (y[i] / sk) * (y[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min({h, cfg.max_step, horizon});
    for (std::size_t i = 0; i < n; ++i) w.ytmp[i] = y[i] + h * f0[i];
    rhs(t0 + h, w.ytmp, w.k2);
    ++evals;
    double der2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sk = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
        const double d = (w.k2[i] - f0[i]) / sk;
        der2 += d * d;
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
    return std::min({100.0 * std::abs(h), h1, cfg.max_step, horizon});
}

}  // namespace

StepperStats dopri5(const OdeRhs& rhs, std::vector<double>& y, double t0, std::span<const double> samples,
                    const OdeObserver& observer, const StepperConfig& cfg) {
    if (!(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0) || !(cfg.abs_tol > 0.0 && cfg.abs_tol < 1.0))
        throw ContractViolation("dopri5: tolerances must lie in (0, 1)");
    if (!(cfg.max_step > 0.0) || !(cfg.min_step >= 0.0))
        throw ContractViolation("dopri5: step bounds must be positive");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i] >= t0)) throw ContractViolation("dopri5: sample before start time");
        if (i > 0 && samples[i] < samples[i - 1]) throw ContractViolation("dopri5: samples must be sorted");
    }

    StepperStats st;
    st.t_end = t0;
    if (samples.empty()) return st;
    const double t_final = samples.back();
    const std::size_t n = y.size();
    Work w(n);
    std::size_t next = 0;

    auto emit_initial = [&]() {
        while (next < samples.size() && samples[next] == t0) {
            if (!observer(t0, y)) {
                st.stopped = true;
                return false;
            }
            ++next;
        }
        return true;
    };
    if (!emit_initial() || next == samples.size()) return st;

    double t = t0;
    rhs(t, y, w.k1);
    ++st.evaluations;
    double h = cfg.initial_step > 0.0
                   ? std::min(cfg.initial_step, cfg.max_step)
                   : initial_step(rhs, t, y, w.k1, t_final - t, cfg, w, st.evaluations);
    double facold = 1e-4;
    bool last_rejected = false;

    while (next < samples.size()) {
        if (st.accepted + st.rejected >= cfg.max_steps)
            throw NumericalFailure("dopri5: step budget exhausted at t = " + std::to_string(t));
        if (h < cfg.min_step || t + h == t)
            throw StiffnessError("dopri5: step size underflow at t = " + std::to_string(t) +
                                 "; the system is too stiff for explicit integration, use the slaved mode");
        bool final_step = false;
        if (t + h >= t_final) {
            h = t_final - t;
            final_step = true;
        }

        for (std::size_t i = 0; i < n; ++i) w.ytmp[i] = y[i] + h * a21 * w.k1[i];
        rhs(t + c2 * h, w.ytmp, w.k2);
        for (std::size_t i = 0; i < n; ++i) w.ytmp[i] = y[i] + h * (a31 * w.k1[i] + a32 * w.k2[i]);
        rhs(t + c3 * h, w.ytmp, w.k3);
        for (std::size_t i = 0; i < n; ++i)
            w.ytmp[i] = y[i] + h * (a41 * w.k1[i] + a42 * w.k2[i] + a43 * w.k3[i]);
        rhs(t + c4 * h, w.ytmp, w.k4);
        for (std::size_t i = 0; i < n; ++i)
            w.ytmp[i] = y[i] + h * (a51 * w.k1[i] + a52 * w.k2[i] + a53 * w.k3[i] + a54 * w.k4[i]);
        rhs(t + c5 * h, w.ytmp, w.k5);
        for (std::size_t i = 0; i < n; ++i)
            w.ytmp[i] = y[i] + h * (a61 * w.k1[i] + a62 * w.k2[i] + a63 * w.k3[i] + a64 * w.k4[i] +
                                    a65 * w.k5[i]);
        const double t_new = final_step ? t_final : t + h;
        rhs(t_new, w.ytmp, w.k6);
        for (std::size_t i = 0; i < n; ++i)
            w.ynew[i] = y[i] + h * (a71 * w.k1[i] + a73 * w.k3[i] + a74 * w.k4[i] + a75 * w.k5[i] +
                                    a76 * w.k6[i]);
        rhs(t_new, w.ynew, w.k7);
        st.evaluations += 6;

        for (std::size_t i = 0; i < n; ++i)
            w.ytmp[i] = h * (e1 * w.k1[i] + e3 * w.k3[i] + e4 * w.k4[i] + e5 * w.k5[i] + e6 * w.k6[i] +
                             e7 * w.k7[i]);
        const double err = error_norm(w.ytmp, y, w.ynew, cfg);
        if (!std::isfinite(err)) {
            if (h <= cfg.min_step) throw NumericalFailure("dopri5: non-finite state at t = " + std::to_string(t));
            h *= shrink_min;
            last_rejected = true;
            ++st.rejected;
            continue;
        }

        const double fac11 = std::pow(err, expo1);
        if (err <= 1.0) {
            double fac = fac11 / std::pow(facold, beta);
            fac = std::clamp(fac / safety, 1.0 / grow_max, 1.0 / shrink_min);
            double h_next = h / fac;
            facold = std::max(err, 1e-4);
            ++st.accepted;

            // Dense output coefficients for this step.
            const bool need_dense = next < samples.size() && samples[next] < t_new;
            if (need_dense) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double ydiff = w.ynew[i] - y[i];
                    const double bspl = h * w.k1[i] - ydiff;
                    w.r1[i] = y[i];
                    w.r2[i] = ydiff;
                    w.r3[i] = bspl;
                    w.r4[i] = ydiff - h * w.k7[i] - bspl;
                    w.r5[i] = h * (d1 * w.k1[i] + d3 * w.k3[i] + d4 * w.k4[i] + d5 * w.k5[i] +
                                   d6 * w.k6[i] + d7 * w.k7[i]);
                }
            }
            while (next < samples.size() && samples[next] <= t_new) {
                const double ts = samples[next];
                std::span<const double> out;
                if (ts == t_new) {
                    out = w.ynew;
                } else {
                    const double th = (ts - t) / h, th1 = 1.0 - th;
                    for (std::size_t i = 0; i < n; ++i)
                        w.yout[i] = w.r1[i] + th * (w.r2[i] + th1 * (w.r3[i] + th * (w.r4[i] + th1 * w.r5[i])));
                    out = w.yout;
                }
                ++next;
                if (!observer(ts, out)) {
                    st.stopped = true;
                    break;
                }
            }

            y.swap(w.ynew);
            w.k1.swap(w.k7);
            t = t_new;
            st.t_end = t;
            if (st.stopped || final_step) break;

            if (last_rejected) h_next = std::min(h_next, h);
            h = std::min(h_next, cfg.max_step);
            last_rejected = false;
        } else {
            h /= std::min(1.0 / shrink_min, fac11 / safety);
            last_rejected = true;
            ++st.rejected;
        }
    }
    return st;
}

}  // namespace bistab
