#pragma once

#include <span>
#include <vector>

#include "bistab/model.hpp"
#include "bistab/steady_state.hpp"

namespace bistab {

/// Giant resonant spin with the cavity and coherences eliminated:
///   dx/dt = -8 C kappa^2 x^(5/2) / eta + 8 C kappa x^2
///           - (2 kappa gamma_par / eta) (1 + C) x^(3/2) + 2 gamma_par x
struct AdiabaticModel {
    double c_coll = 0.0;
    double kappa = 0.0;
    double gamma_par = 0.0;
    double eta = 0.0;
};

/// Throws DomainError unless kappa, gamma_par, eta > 0 and c_coll >= 0.
void validate(const AdiabaticModel& model);

double adiabatic_rhs(double x, const AdiabaticModel& model);
double adiabatic_rhs_slope(double x, const AdiabaticModel& model);

struct FixedPoint {
    double intensity = 0.0;
    Stability stability = Stability::stable;
    bool degenerate = false;  ///< the x = 0 root, never part of the bistability analysis
};

/// Origin first (flagged degenerate), then the driven fixed points in increasing x.
/// Stable iff d(rhs)/dx < 0.
std::vector<FixedPoint> adiabatic_fixed_points(const AdiabaticModel& model);

/// Driven fixed points only.
std::vector<FixedPoint> driven_fixed_points(const AdiabaticModel& model);

/// V(x) = -int_0^x rhs(s) ds on an ascending, non-negative grid.
std::vector<double> potential(std::span<const double> x_grid, const AdiabaticModel& model);

/// Eq.-of-motion parameters for a single resonant cluster at zero cavity detuning.
/// Throws ContractViolation for anything else.
AdiabaticModel homogeneous_equivalent(const PhysicalParams& params, const SpinClusters& clusters);

}  // namespace bistab
