#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bistab/model.hpp"

namespace bistab {

enum class Stability { stable, unstable };

std::string_view to_string(Stability s) noexcept;

/// Steady inversion of one cluster at intracavity intensity x = |a|^2:
///   z = -1 / (1 + 4 g^2 x gamma_perp / (gamma_par (gamma_perp^2 + Theta^2)))
double sigma_z_steady(double intensity, double coupling, double detuning, double gamma_perp,
                      double gamma_par);

struct SteadyRoot {
    double intensity = 0.0;  ///< |a|^2
    Stability stability = Stability::stable;
};

/// Local extremum of Y(x) = x |D(x)|^2, i.e. a saddle-node of the steady state.
struct CriticalPoint {
    double intensity = 0.0;
    double drive_sq = 0.0;  ///< eta^2 at which the fold occurs
    bool is_maximum = false;
};

/// Scalar reduction of the steady state. With the cavity and coherences
/// slaved to the inversions, every steady state solves
///   F(x) = x |D(x)|^2 - eta^2 = 0,
///   D(x) = (kappa + i delta_c) - sum_j g_j^2 z_j(x) / (gamma_perp + i Theta_j).
/// dF/dx > 0 marks a stable root. The extrema of Y(x) = x|D(x)|^2 do not
/// depend on eta; they are located once at construction.
class SteadyStateModel {
public:
    /// The drive amplitude in `params` is ignored.
    SteadyStateModel(const PhysicalParams& params, const SpinClusters& clusters);

    cdouble denominator(double x) const;
    cdouble denominator_slope(double x) const;
    double drive_sq(double x) const;        ///< Y(x)
    double drive_sq_slope(double x) const;  ///< dY/dx
    double residual(double x, double eta) const { return drive_sq(x) - eta * eta; }

    std::vector<double> sigma_z(double x) const;
    /// sum_j C_j z_j(x)
    double inversion_summary(double x) const;
    double collective_cooperativity() const noexcept { return c_coll_; }

    /// All roots of F in increasing intensity. eta = 0 gives the single root x = 0.
    /// Throws RootScanFailure if the log scan finds no sign change.
    std::vector<SteadyRoot> roots(double eta) const;

    const std::vector<CriticalPoint>& critical_points() const noexcept { return critical_; }
    const PhysicalParams& params() const noexcept { return params_; }
    const SpinClusters& clusters() const noexcept { return clusters_; }

private:
    void locate_critical_points();

    PhysicalParams params_;
    SpinClusters clusters_;
    std::vector<cdouble> lorentz_;     // g^2 / (gamma_perp + i Theta)
    std::vector<double> saturation_;   // 4 g^2 gamma_perp / (gamma_par (gamma_perp^2 + Theta^2))
    std::vector<double> coop_;
    double c_coll_ = 0.0;
    std::vector<CriticalPoint> critical_;
};

std::vector<SteadyRoot> steady_roots(double eta, const PhysicalParams& params,
                                     const SpinClusters& clusters);

struct BranchPoint {
    double p_in = 0.0;          ///< photon flux [1/s]
    double intensity = 0.0;     ///< |a|^2
    double transmission = 0.0;  ///< |T|^2
    Stability stability = Stability::stable;
    double inversion_summary = 0.0;  ///< sum_j C_j z_j
};

struct BistabilityDiagram {
    std::vector<BranchPoint> up_branch;    ///< increasing power
    std::vector<BranchPoint> down_branch;  ///< decreasing power
    std::vector<BranchPoint> unstable;     ///< middle roots, increasing power
    std::optional<double> fold_lower;
    std::optional<double> fold_upper;
};

struct PowerWindow {
    double min = 0.0;
    double max = 0.0;
};

struct FoldPair {
    double lower = 0.0;  ///< power where the upper branch ends (down-sweep jump)
    double upper = 0.0;  ///< power where the lower branch ends (up-sweep jump)
    double intensity_at_lower = 0.0;
    double intensity_at_upper = 0.0;
};

/// Saddle-node folds whose powers both lie inside the window; nullopt if monostable.
std::optional<FoldPair> find_folds(const SteadyStateModel& model, PowerWindow window);
std::optional<FoldPair> find_folds(const PhysicalParams& params, const SpinClusters& clusters,
                                   PowerWindow window);

/// Up sweep starts on the smallest root, down sweep on the largest; each
/// step keeps the stable root nearest (in log intensity) to the previous one.
BistabilityDiagram hysteresis_sweep(std::span<const double> power_grid, const SteadyStateModel& model);
BistabilityDiagram hysteresis_sweep(std::span<const double> power_grid, const PhysicalParams& params,
                                    const SpinClusters& clusters);

struct Asymptotes {
    double low = 1.0;   ///< 1 / (1 + C_coll)^2
    double high = 1.0;  ///< empty-cavity transmission
};

Asymptotes asymptotes(double c_coll);

}  // namespace bistab
