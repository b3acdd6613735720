#include "bistab/ensemble.hpp"

#include <cmath>

#include "bistab/error.hpp"

namespace bistab {

void validate(const EnsembleSpec& spec) {
    if (!(spec.q > 1.0 && spec.q < 3.0))
        throw ContractViolation("ensemble: q must lie in (1, 3)");
    if (!(spec.delta_width > 0.0) || !std::isfinite(spec.delta_width))
        throw ContractViolation("ensemble: delta_width must be > 0");
    if (!std::isfinite(spec.center_offset))
        throw ContractViolation("ensemble: center_offset must be finite");
    if (spec.cluster_count == 0 || spec.cluster_count % 2 == 0)
        throw ContractViolation("ensemble: cluster_count must be odd (a cluster sits at the center)");
    if (!(spec.window() > 0.0) || !std::isfinite(spec.window()))
        throw ContractViolation("ensemble: truncation window must be > 0");
}

double q_gaussian_density(double omega, const EnsembleSpec& spec) {
    const double u = (omega - spec.center_offset) / spec.delta_width;
    const double bracket = 1.0 - (1.0 - spec.q) * u * u;
    return std::pow(bracket, 1.0 / (1.0 - spec.q));
}

SpinClusters discretize(const EnsembleSpec& spec, double omega_coll) {
    validate(spec);
    if (!(omega_coll > 0.0)) throw ContractViolation("discretize: omega_coll must be > 0");

    const std::size_t m = spec.cluster_count;
    if (m == 1) return SpinClusters::homogeneous(omega_coll, spec.center_offset);

    const double w = spec.window();
    const double half = static_cast<double>((m - 1) / 2);
    std::vector<double> theta(m);
    std::vector<double> rho(m);
    double rho_sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        // Offsets are symmetric integers times the spacing, so the grid is
        // exactly symmetric about the center.
        const double k = static_cast<double>(j) - half;
        theta[j] = spec.center_offset + w * (k / half);
        rho[j] = q_gaussian_density(theta[j], spec);
        rho_sum += rho[j];
    }
    std::vector<double> g(m);
    for (std::size_t j = 0; j < m; ++j) g[j] = omega_coll * std::sqrt(rho[j] / rho_sum);
    return SpinClusters(std::move(g), std::move(theta));
}

Cooperativity cooperativity(const SpinClusters& clusters, double kappa, double gamma_perp) {
    if (!(kappa > 0.0) || !(gamma_perp > 0.0))
        throw DomainError("cooperativity: rates must be > 0");
    Cooperativity c;
    c.per_cluster.resize(clusters.size());
    for (std::size_t j = 0; j < clusters.size(); ++j) {
        const double g = clusters.coupling(j);
        const double r = clusters.detuning(j) / gamma_perp;
        c.per_cluster[j] = g * g / (kappa * gamma_perp * (1.0 + r * r));
        c.collective += c.per_cluster[j];
    }
    return c;
}

SpinClusters effective_homogeneous(double c_coll, double kappa, double gamma_perp) {
    if (!(c_coll >= 0.0)) throw DomainError("effective_homogeneous: c_coll must be >= 0");
    return SpinClusters::homogeneous(std::sqrt(c_coll * kappa * gamma_perp));
}

}  // namespace bistab
