#include "bistab/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "bistab/analysis.hpp"
#include "bistab/ensemble.hpp"
#include "bistab/error.hpp"
#include "bistab/steady_state.hpp"
#include "bistab/units.hpp"

namespace bistab {

StepperConfig IntegratorConfig::stepper() const {
    StepperConfig s;
    s.rel_tol = rel_tol;
    s.abs_tol = abs_tol;
    s.initial_step = initial_step;
    s.max_step = max_step > 0.0 ? max_step : std::numeric_limits<double>::infinity();
    return s;
}

void validate(const IntegratorConfig& c, const PhysicalParams& p) {
    validate(p);
    auto unit_interval = [](double v, const char* name) {
        if (!(v > 0.0 && v < 1.0)) throw ContractViolation(std::string("integrator.") + name + " must lie in (0, 1)");
    };
    unit_interval(c.rel_tol, "rel_tol");
    unit_interval(c.abs_tol, "abs_tol");
    if (!(c.max_step >= 0.0)) throw ContractViolation("integrator.max_step must be >= 0");
    if (!(c.initial_step >= 0.0)) throw ContractViolation("integrator.initial_step must be >= 0");
    if (!(c.handoff(p) >= 100.0 / p.kappa))
        throw ContractViolation("integrator.handoff_time must be >= 100 / kappa");
    if (!(c.steady_threshold > 0.0)) throw ContractViolation("integrator.steady_threshold must be > 0");
    if (!(c.max_sim_time > c.handoff(p))) throw ContractViolation("integrator.max_sim_time must exceed handoff_time");
    if (c.samples_per_decade < 1) throw ContractViolation("integrator.samples_per_decade must be >= 1");
    if (!(c.first_sample(p) > 0.0)) throw ContractViolation("integrator.first_sample_time must be > 0");
    if (!(c.overlap_factor >= 1.0)) throw ContractViolation("integrator.overlap_factor must be >= 1");
}

std::vector<double> sample_grid(double t0, double t1, const IntegratorConfig& c, const PhysicalParams& p) {
    const double first = c.first_sample(p);
    const double spd = c.samples_per_decade;
    std::vector<double> out;
    if (!(t1 > t0)) return out;
    long k = 0;
    if (t0 > first) k = static_cast<long>(std::floor(spd * std::log10(t0 / first))) - 1;
    for (k = std::max(k, 0L);; ++k) {
        const double t = first * std::pow(10.0, static_cast<double>(k) / spd);
        if (t > t1) break;
        if (t > t0) out.push_back(t);
    }
    return out;
}

namespace {

std::vector<double> with_endpoints(double t0, double t1, std::vector<double> grid) {
    grid.insert(grid.begin(), t0);
    if (grid.back() != t1) grid.push_back(t1);
    return grid;
}

double transmission_or_nan(double x, double eta, double kappa) {
    return eta > 0.0 ? transmission_from_intensity(x, eta, kappa) : std::numeric_limits<double>::quiet_NaN();
}

// Full model, flat layout.
struct FullSystem {
    const PhysicalParams& params;
    const SpinClusters& clusters;
    std::vector<double> weights;
    mutable std::vector<double> scratch;

    FullSystem(const PhysicalParams& p, const SpinClusters& c)
        : params(p), clusters(c), weights(c.weights()), scratch(flat::size(c.size())) {}

    void operator()(double, std::span<const double> y, std::span<double> dy) const {
        flat::mb_rhs(y, dy, params, clusters);
    }

    TrajectoryRecord record(double t, std::span<const double> y) const {
        const std::size_t m = clusters.size();
        flat::mb_rhs(y, scratch, params, clusters);
        TrajectoryRecord r;
        r.time = t;
        r.intensity = y[0] * y[0] + y[1] * y[1];
        r.intensity_rate = 2.0 * (y[0] * scratch[0] + y[1] * scratch[1]);
        r.transmission = transmission_or_nan(r.intensity, params.eta, params.kappa);
        const double* z = y.data() + 2 * (m + 1);
        r.sigma_z_min = *std::min_element(z, z + m);
        r.sigma_z_max = *std::max_element(z, z + m);
        double mean = 0.0, smax = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            mean += weights[j] * z[j];
            smax = std::max(smax, std::hypot(y[2 + 2 * j], y[3 + 2 * j]));
        }
        r.mean_inversion = mean;
        r.sigma_minus_max = smax;
        return r;
    }
};

// Inversions with slaved cavity and coherences.
struct SlavedSystem {
    const PhysicalParams& params;
    const SpinClusters& clusters;
    std::vector<cdouble> lorentz;    // g^2 / (gamma_perp + i Theta)
    std::vector<double> pump;        // 4 g^2 gamma_perp / (gamma_perp^2 + Theta^2)
    std::vector<double> weights;
    mutable std::vector<double> scratch;

    SlavedSystem(const PhysicalParams& p, const SpinClusters& c)
        : params(p), clusters(c), lorentz(c.size()), pump(c.size()), weights(c.weights()), scratch(c.size()) {
        const double gp = p.gamma_perp;
        for (std::size_t j = 0; j < c.size(); ++j) {
            const double g2 = c.coupling(j) * c.coupling(j);
            const double th = c.detuning(j);
            lorentz[j] = g2 / cdouble(gp, th);
            pump[j] = 4.0 * g2 * gp / (gp * gp + th * th);
        }
    }

    cdouble denominator(std::span<const double> z) const {
        cdouble d(params.kappa, params.delta_c);
        for (std::size_t j = 0; j < z.size(); ++j) d -= lorentz[j] * z[j];
        return d;
    }

    cdouble field(std::span<const double> z, cdouble& d) const {
        d = denominator(z);
        if (!(std::norm(d) > 0.0) || !std::isfinite(std::norm(d)))
            throw NumericalFailure("slaved cavity: vanishing denominator");
        return params.eta / d;
    }

    void operator()(double, std::span<const double> z, std::span<double> dz) const {
        cdouble d;
        const double x = std::norm(field(z, d));
        for (std::size_t j = 0; j < z.size(); ++j) dz[j] = -params.gamma_par * (1.0 + z[j]) - pump[j] * x * z[j];
    }

    TrajectoryRecord record(double t, std::span<const double> z) const {
        cdouble d;
        const cdouble a = field(z, d);
        (*this)(t, z, scratch);
        cdouble sum{};
        for (std::size_t j = 0; j < z.size(); ++j) sum += lorentz[j] * scratch[j];
        const cdouble da = a * sum / d;
        TrajectoryRecord r;
        r.time = t;
        r.intensity = std::norm(a);
        r.intensity_rate = 2.0 * (std::conj(a) * da).real();
        r.transmission = transmission_or_nan(r.intensity, params.eta, params.kappa);
        r.sigma_z_min = *std::min_element(z.begin(), z.end());
        r.sigma_z_max = *std::max_element(z.begin(), z.end());
        double mean = 0.0, smax = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) {
            mean += weights[j] * z[j];
            const double g = clusters.coupling(j);
            smax = std::max(smax, std::abs(g * z[j] * a / cdouble(params.gamma_perp, clusters.detuning(j))));
        }
        r.mean_inversion = mean;
        r.sigma_minus_max = smax;
        return r;
    }

    SystemState state(std::span<const double> z) const {
        SystemState s(z.size());
        auto f = slaved_cavity(z, params, clusters);
        s.a = f.a;
        s.sigma_minus = std::move(f.sigma_minus);
        s.sigma_z.assign(z.begin(), z.end());
        return s;
    }
};

void check_state(const SystemState& s, const SpinClusters& c) {
    if (s.sigma_minus.size() != c.size() || s.sigma_z.size() != c.size())
        throw ContractViolation("initial state dimension does not match cluster count");
}

}  // namespace

Trajectory integrate_full(const SystemState& state0, const PhysicalParams& params, const SpinClusters& clusters,
                          TimeSpan span, const IntegratorConfig& config) {
    validate(params);
    check_state(state0, clusters);
    if (!(span.end > span.start) || !(span.start >= 0.0)) throw ContractViolation("integrate_full: empty time span");
    const FullSystem sys(params, clusters);
    std::vector<double> y(flat::size(clusters.size()));
    flat::pack(state0, y);
    const auto samples = with_endpoints(span.start, span.end, sample_grid(span.start, span.end, config, params));
    Trajectory traj;
    dopri5(std::cref(sys), y, span.start, samples,
           [&](double t, std::span<const double> yt) {
               traj.records.push_back(sys.record(t, yt));
               if (config.storage == Storage::full) traj.states.push_back(flat::unpack(yt, clusters.size()));
               return true;
           },
           config.stepper());
    return traj;
}

SlavedFields slaved_cavity(std::span<const double> sigma_z, const PhysicalParams& params,
                           const SpinClusters& clusters) {
    if (sigma_z.size() != clusters.size()) throw ContractViolation("slaved_cavity: size mismatch");
    cdouble d(params.kappa, params.delta_c);
    for (std::size_t j = 0; j < sigma_z.size(); ++j) {
        const double g = clusters.coupling(j);
        d -= g * g * sigma_z[j] / cdouble(params.gamma_perp, clusters.detuning(j));
    }
    if (!(std::norm(d) > 0.0) || !std::isfinite(std::norm(d)))
        throw NumericalFailure("slaved_cavity: vanishing denominator");
    SlavedFields f;
    f.a = params.eta / d;
    f.sigma_minus.resize(sigma_z.size());
    for (std::size_t j = 0; j < sigma_z.size(); ++j)
        f.sigma_minus[j] = clusters.coupling(j) * sigma_z[j] * f.a / cdouble(params.gamma_perp, clusters.detuning(j));
    return f;
}

Trajectory integrate_slaved(std::span<const double> sigma_z0, const PhysicalParams& params,
                            const SpinClusters& clusters, TimeSpan span, const IntegratorConfig& config) {
    validate(params);
    if (sigma_z0.size() != clusters.size()) throw ContractViolation("integrate_slaved: size mismatch");
    if (!(span.end > span.start) || !(span.start >= 0.0))
        throw ContractViolation("integrate_slaved: empty time span");
    const SlavedSystem sys(params, clusters);
    std::vector<double> z(sigma_z0.begin(), sigma_z0.end());
    const auto samples = with_endpoints(span.start, span.end, sample_grid(span.start, span.end, config, params));
    Trajectory traj;
    dopri5(std::cref(sys), z, span.start, samples,
           [&](double t, std::span<const double> zt) {
               traj.records.push_back(sys.record(t, zt));
               if (config.storage == Storage::full) traj.states.push_back(sys.state(zt));
               return true;
           },
           config.stepper());
    return traj;
}

std::string_view to_string(Branch b) noexcept {
    switch (b) {
        case Branch::upper: return "upper";
        case Branch::lower: return "lower";
        default: return "unresolved";
    }
}

namespace {

Branch classify(double x, const SteadyStateModel& model, double eta) {
    std::vector<double> stable;
    for (const auto& r : model.roots(eta))
        if (r.stability == Stability::stable) stable.push_back(r.intensity);
    if (stable.size() >= 2) {
        auto dist = [&](double s) { return std::abs(std::log(s) - std::log(x)); };
        const auto best = std::min_element(stable.begin(), stable.end(),
                                           [&](double u, double v) { return dist(u) < dist(v); });
        return best == stable.begin() ? Branch::lower : Branch::upper;
    }
    // Single branch: split at the geometric mean of the two asymptotes.
    const double t2 = transmission_from_intensity(x, eta, model.params().kappa);
    return t2 >= 1.0 / (1.0 + model.collective_cooperativity()) ? Branch::upper : Branch::lower;
}

}  // namespace

QuenchResult quench(double p_prepare, double p_target, const PhysicalParams& params, const SpinClusters& clusters,
                    const IntegratorConfig& config) {
    validate(config, params);
    if (!(p_target > 0.0)) throw DomainError("quench: p_target must be > 0");
    if (!(p_prepare > p_target)) throw ContractViolation("quench: p_prepare must exceed p_target");

    const SteadyStateModel model(params, clusters);
    const double kappa = params.kappa;
    const double eta_prep = drive_from_power(p_prepare, kappa);
    const double eta_tgt = drive_from_power(p_target, kappa);

    double x_up = -1.0;
    for (const auto& r : model.roots(eta_prep))
        if (r.stability == Stability::stable) x_up = std::max(x_up, r.intensity);
    if (x_up < 0.0) throw NumericalFailure("quench: no stable root at the preparation power");

    const std::size_t m = clusters.size();
    SystemState s0(m);
    s0.sigma_z = model.sigma_z(x_up);
    auto fields = slaved_cavity(s0.sigma_z, params.with_drive(eta_prep), clusters);
    s0.a = fields.a;
    s0.sigma_minus = std::move(fields.sigma_minus);

    const PhysicalParams target = params.with_drive(eta_tgt);
    const double handoff = config.handoff(params);
    const double t_overlap = std::min(config.overlap_factor * handoff, config.max_sim_time);
    const bool full_storage = config.storage == Storage::full;

    QuenchResult res;
    res.p_prepare = p_prepare;
    res.p_target = p_target;
    Trajectory& traj = res.trajectory;
    SteadyDetector detector(config.steady_threshold * params.gamma_par);
    std::optional<double> detected;

    // Stage 1: full model through the overlap window.
    auto samples = sample_grid(0.0, t_overlap, config, params);
    const bool handoff_on_grid = std::binary_search(samples.begin(), samples.end(), handoff);
    samples.insert(samples.begin(), 0.0);
    if (!handoff_on_grid) samples.insert(std::upper_bound(samples.begin(), samples.end(), handoff), handoff);
    const auto on_grid = [&](double t) { return t != handoff || handoff_on_grid; };
    std::vector<double> z_handoff;
    std::vector<std::pair<double, double>> overlap;  // (time, |T|^2) from the full model past handoff
    {
        const FullSystem sys(target, clusters);
        std::vector<double> y(flat::size(m));
        flat::pack(s0, y);
        dopri5(std::cref(sys), y, 0.0, samples,
               [&](double t, std::span<const double> yt) {
                   if (t == handoff) z_handoff.assign(yt.begin() + 2 * (m + 1), yt.end());
                   if (!on_grid(t)) return true;
                   auto rec = sys.record(t, yt);
                   if (t > handoff) {
                       overlap.emplace_back(t, rec.transmission);
                       return true;
                   }
                   traj.records.push_back(rec);
                   if (full_storage) traj.states.push_back(flat::unpack(yt, m));
                   if (!detected) detected = detector.feed(t, rec.intensity, rec.intensity_rate);
                   return true;
               },
               config.stepper());
    }

    // Stage 2: slaved inversions from the handoff state.
    if (!detected && config.max_sim_time > handoff) {
        const SlavedSystem sys(target, clusters);
        auto grid = sample_grid(handoff, config.max_sim_time, config, params);
        std::size_t ov = 0;
        double worst = 0.0;
        bool compared = false;
        dopri5(std::cref(sys), z_handoff, handoff, grid,
               [&](double t, std::span<const double> zt) {
                   auto rec = sys.record(t, zt);
                   while (ov < overlap.size() && overlap[ov].first < t) ++ov;
                   if (ov < overlap.size() && overlap[ov].first == t) {
                       const double ref = overlap[ov].second;
                       worst = std::max(worst, std::abs(rec.transmission - ref) / std::abs(ref));
                       compared = true;
                   }
                   traj.records.push_back(rec);
                   if (full_storage) traj.states.push_back(sys.state(zt));
                   detected = detector.feed(t, rec.intensity, rec.intensity_rate);
                   return !detected.has_value();
               },
               config.stepper());
        if (compared) res.handoff_deviation = worst;
    }

    res.t_steady = detected;
    if (detected) {
        res.final_state_branch = classify(traj.back().intensity, model, eta_tgt);
        if (res.final_state_branch == Branch::lower) {
            try {
                res.t_switch = switching_time(traj, handoff);
            } catch (const AnalysisError&) {
                res.t_switch.reset();
            }
        }
    }
    return res;
}

std::vector<QuenchResult> quench_ladder(double p_prepare, std::span<const double> p_targets,
                                        const PhysicalParams& params, const SpinClusters& clusters,
                                        const IntegratorConfig& config) {
    validate(config, params);
    const std::size_t n = p_targets.size();
    std::vector<QuenchResult> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                results[i] = quench(p_prepare, p_targets[i], params, clusters, config);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::size_t threads = config.workers ? config.workers : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(n, 1));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::stable_sort(results.begin(), results.end(),
                     [](const QuenchResult& a, const QuenchResult& b) { return a.p_target < b.p_target; });
    return results;
}

}  // namespace bistab
