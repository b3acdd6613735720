#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bistab/dynamics.hpp"

namespace bistab {

/// Online steady-state test: |d|T|^2/dt| / |T|^2 below threshold [1/s] on
/// `window` consecutive samples.
class SteadyDetector {
public:
    explicit SteadyDetector(double threshold, std::size_t window = 10);

    /// Returns the start of the qualifying run once it has `window` samples.
    std::optional<double> feed(double time, double intensity, double intensity_rate);
    /// Start of the run that is still open, if any.
    std::optional<double> open_run() const { return run_start_; }
    std::size_t run_length() const noexcept { return run_length_; }

private:
    double threshold_;
    std::size_t window_;
    std::optional<double> run_start_;
    std::size_t run_length_ = 0;
};

bool is_quiet(double intensity, double intensity_rate, double threshold);

/// Earliest time after which the relative rate stays below threshold for 10
/// samples, or through the end of the trajectory.
std::optional<double> detect_steady(const Trajectory& trajectory, double threshold);

struct Transit {
    std::size_t begin = 0;  ///< last sample within 5% of the upper value
    std::size_t end = 0;    ///< first later sample within 5% of the final value
};

/// Throws AnalysisError if |T|^2 does not fall from the value at start_time to the final one.
Transit find_transit(const Trajectory& trajectory, double start_time = 0.0);

/// 1 / min r(t) over the transit, r = -d ln|T|^2/dt, positive r only. The
/// interval ends are located between samples by cubic Hermite interpolation
/// of ln|T|^2.
double switching_time(const Trajectory& trajectory, double start_time = 0.0);

struct ScalingFit {
    double alpha = 0.0;
    double p_crit = 0.0;
    double prefactor = 0.0;
    double residual_norm = 0.0;  ///< 2-norm of log-space residuals
    std::string mode;            ///< "fixed" or "free"
};

struct ScalingFitResult {
    ScalingFit fixed;
    std::optional<ScalingFit> free;
};

/// Least squares of log t = log A - alpha log|p - p_crit|. Fixed mode uses
/// p_crit_hint; free mode refines p_crit within 5% of it (above every p).
/// Throws FitError for < 4 points, p >= hint, equal powers or alpha <= 0.
ScalingFitResult fit_scaling(std::span<const std::pair<double, double>> points, double p_crit_hint);

/// Slope of d|a|^2/dt against |a|^2 over the tail (within 10% of the
/// maximum excursion from the final value). Throws FitError if the tail is
/// not monotone or too short.
double asymptotic_decay_rate(const Trajectory& trajectory);

struct BoundsReport {
    bool ok = true;
    double worst_sigma_z_low = 0.0;   ///< most negative excess below -1
    double worst_sigma_z_high = 0.0;  ///< largest excess above 0
    double worst_sigma_minus = 0.0;   ///< largest excess above 1/2
};

/// sigma_z in [-1 - 10 tol, 10 tol] and |sigma_minus| <= 1/2 + 10 tol on every record.
BoundsReport check_bounds(const Trajectory& trajectory, double rel_tol);

}  // namespace bistab
