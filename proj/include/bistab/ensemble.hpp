#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bistab/model.hpp"

namespace bistab {

/// q-Gaussian inhomogeneous line and its discretization.
struct EnsembleSpec {
    double q = 1.39;
    double delta_width = 0.0;     ///< q-Gaussian width Delta [rad/s]
    double center_offset = 0.0;   ///< omega_s - omega_p [rad/s]
    std::size_t cluster_count = 1001;
    /// Half-window W [rad/s]; unset means 8 * delta_width.
    std::optional<double> truncation;

    double window() const { return truncation.value_or(8.0 * delta_width); }
};

/// Throws ContractViolation unless 1 < q < 3, delta_width > 0, W > 0 and the
/// cluster count is odd.
void validate(const EnsembleSpec& spec);

/// Unnormalized density [1 - (1 - q) (omega - omega_s)^2 / Delta^2]^(1/(1-q)),
/// equal to 1 at the line center.
double q_gaussian_density(double omega, const EnsembleSpec& spec);

/// Uniform grid on center_offset + [-W, W] with
///   g_j = Omega * sqrt(rho_j / sum_l rho_l),
/// so sum_j g_j^2 = Omega^2. One cluster gives the homogeneous limit.
SpinClusters discretize(const EnsembleSpec& spec, double omega_coll);

struct Cooperativity {
    std::vector<double> per_cluster;  ///< C_j = g_j^2 / [kappa gamma_perp (1 + Theta_j^2/gamma_perp^2)]
    double collective = 0.0;          ///< C_coll = sum_j C_j
};

Cooperativity cooperativity(const SpinClusters& clusters, double kappa, double gamma_perp);

/// Single resonant cluster with the given collective cooperativity:
/// g^2 = c_coll * kappa * gamma_perp.
SpinClusters effective_homogeneous(double c_coll, double kappa, double gamma_perp);

}  // namespace bistab
