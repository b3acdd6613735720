#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "bistab/integrator.hpp"
#include "bistab/model.hpp"

namespace bistab {

enum class Storage { reduced, full };

/// Time stepping and quench protocol settings. Times in seconds.
struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-16;
    double max_step = 0.0;      ///< 0: unbounded
    double initial_step = 0.0;  ///< 0: automatic
    std::optional<double> handoff_time;  ///< unset: 1000 / kappa
    double steady_threshold = 1e-6;      ///< |d ln|T|^2/dt| bound, in units of gamma_par
    double max_sim_time = 1e6;
    int samples_per_decade = 50;
    std::optional<double> first_sample_time;  ///< unset: 0.01 / kappa
    Storage storage = Storage::reduced;
    double overlap_factor = 2.0;  ///< full stage runs to overlap_factor * handoff for the per-run check
    std::size_t workers = 0;      ///< 0: hardware concurrency

    double handoff(const PhysicalParams& p) const { return handoff_time.value_or(1000.0 / p.kappa); }
    double first_sample(const PhysicalParams& p) const { return first_sample_time.value_or(0.01 / p.kappa); }
    StepperConfig stepper() const;
};

/// Throws ContractViolation on tolerances outside (0, 1), handoff < 100/kappa, etc.
void validate(const IntegratorConfig& config, const PhysicalParams& params);

/// Sample times in (t0, t1]: the points first * 10^(k / samples_per_decade).
/// The grid is shared by every stage so stitched trajectories stay on one lattice.
std::vector<double> sample_grid(double t0, double t1, const IntegratorConfig& config,
                                const PhysicalParams& params);

struct TrajectoryRecord {
    double time = 0.0;
    double intensity = 0.0;       ///< |a|^2
    double transmission = 0.0;    ///< |T|^2
    double mean_inversion = 0.0;  ///< sum_j g_j^2 z_j / sum_j g_j^2
    double intensity_rate = 0.0;  ///< d|a|^2/dt
    double sigma_z_min = 0.0;
    double sigma_z_max = 0.0;
    double sigma_minus_max = 0.0;

    /// -d ln|T|^2/dt
    double decay_rate() const { return intensity > 0.0 ? -intensity_rate / intensity : 0.0; }
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    std::vector<SystemState> states;  ///< filled only with Storage::full

    bool empty() const noexcept { return records.empty(); }
    const TrajectoryRecord& back() const { return records.back(); }
};

struct TimeSpan {
    double start = 0.0;
    double end = 0.0;
};

/// Full Maxwell-Bloch integration, records at t0, the shared grid and t1.
Trajectory integrate_full(const SystemState& state0, const PhysicalParams& params,
                          const SpinClusters& clusters, TimeSpan span, const IntegratorConfig& config);

struct SlavedFields {
    cdouble a;
    std::vector<cdouble> sigma_minus;
};

/// Cavity and coherences at ds/dt = da/dt = 0 for frozen inversions:
///   a = eta / [(kappa + i delta_c) - sum_j g_j^2 z_j / (gamma_perp + i Theta_j)]
///   s_j = g_j z_j a / (gamma_perp + i Theta_j)
SlavedFields slaved_cavity(std::span<const double> sigma_z, const PhysicalParams& params,
                           const SpinClusters& clusters);

/// Inversions only:
///   dz_j/dt = -gamma_par (1 + z_j) - 4 g_j^2 gamma_perp |a(z)|^2 z_j / (gamma_perp^2 + Theta_j^2)
Trajectory integrate_slaved(std::span<const double> sigma_z0, const PhysicalParams& params,
                            const SpinClusters& clusters, TimeSpan span, const IntegratorConfig& config);

enum class Branch { upper, lower, unresolved };
std::string_view to_string(Branch b) noexcept;

struct QuenchResult {
    double p_prepare = 0.0;
    double p_target = 0.0;
    Trajectory trajectory;
    Branch final_state_branch = Branch::unresolved;
    std::optional<double> t_steady;
    std::optional<double> t_switch;
    /// max relative |T|^2 gap between full and slaved stages on (handoff, overlap_factor * handoff]
    std::optional<double> handoff_deviation;
};

/// Prepare on the upper branch at p_prepare, step the drive to p_target at t = 0,
/// integrate the full model to the handoff time, then the slaved model until
/// steady detection or max_sim_time.
QuenchResult quench(double p_prepare, double p_target, const PhysicalParams& params,
                    const SpinClusters& clusters, const IntegratorConfig& config);

/// Independent quenches on a worker pool; results sorted by p_target.
std::vector<QuenchResult> quench_ladder(double p_prepare, std::span<const double> p_targets,
                                        const PhysicalParams& params, const SpinClusters& clusters,
                                        const IntegratorConfig& config);

}  // namespace bistab
