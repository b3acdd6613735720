#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace bistab {

/// Dormand-Prince 5(4) with PI step control and 4th-order dense output.
struct StepperConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;
    double initial_step = 0.0;  ///< 0 picks a starting step from the RHS scale
    double max_step = std::numeric_limits<double>::infinity();
    double min_step = 1e-18;
    std::size_t max_steps = 100'000'000;
};

struct StepperStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t evaluations = 0;
    double t_end = 0.0;
    bool stopped = false;  ///< observer asked to stop
};

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;
/// Called at each requested sample time; return false to stop.
using OdeObserver = std::function<bool(double t, std::span<const double> y)>;

/// Integrates y from t0 through the last sample time. Samples must be
/// non-decreasing and >= t0; a sample equal to t0 reports the initial value.
/// On return y holds the state at stats.t_end.
/// Throws StiffnessError when the step falls below min_step and
/// NumericalFailure on non-finite values or max_steps exhaustion.
StepperStats dopri5(const OdeRhs& rhs, std::vector<double>& y, double t0,
                    std::span<const double> samples, const OdeObserver& observer,
                    const StepperConfig& config);

}  // namespace bistab
