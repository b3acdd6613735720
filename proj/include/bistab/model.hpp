#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bistab {

using cdouble = std::complex<double>;

/// Rates and drive of the driven cavity + spin ensemble, all in rad/s.
struct PhysicalParams {
    double kappa = 0.0;       ///< cavity field decay rate (HWHM)
    double gamma_perp = 0.0;  ///< transverse spin relaxation 1/T2
    double gamma_par = 0.0;   ///< longitudinal spin relaxation 1/T1
    double omega_coll = 0.0;  ///< collective coupling, Omega^2 = sum_j g_j^2
    double eta = 0.0;         ///< drive amplitude, enters da/dt additively
    double delta_c = 0.0;     ///< cavity-probe detuning omega_c - omega_p

    PhysicalParams with_drive(double new_eta) const {
        PhysicalParams p = *this;
        p.eta = new_eta;
        return p;
    }
};

/// Throws DomainError on non-positive rates or negative drive. Returns
/// warnings for violations of the ordering kappa > gamma_perp > gamma_par.
std::vector<std::string> validate(const PhysicalParams& params);

/// Discretized spin ensemble: per-cluster coupling g_j and detuning Theta_j
/// (relative to the probe frequency), both in rad/s.
class SpinClusters {
public:
    SpinClusters() = default;

    /// Throws ContractViolation unless sizes match, theta is strictly
    /// increasing and every coupling is finite and non-negative.
    SpinClusters(std::vector<double> coupling, std::vector<double> detuning);

    static SpinClusters homogeneous(double coupling, double detuning = 0.0);

    std::size_t size() const noexcept { return g_.size(); }
    const std::vector<double>& coupling() const noexcept { return g_; }
    const std::vector<double>& detuning() const noexcept { return theta_; }
    double coupling(std::size_t j) const { return g_[j]; }
    double detuning(std::size_t j) const { return theta_[j]; }

    /// sum_j g_j^2
    double total_coupling_sq() const noexcept;

    /// Spin-number weights g_j^2 / sum g^2 (uniform if all couplings vanish).
    std::vector<double> weights() const;

private:
    std::vector<double> g_;
    std::vector<double> theta_;
};

/// Expectation values: cavity amplitude, per-cluster coherences and inversions.
struct SystemState {
    cdouble a{};
    std::vector<cdouble> sigma_minus;
    std::vector<double> sigma_z;

    SystemState() = default;
    explicit SystemState(std::size_t clusters)
        : sigma_minus(clusters), sigma_z(clusters, -1.0) {}

    std::size_t size() const noexcept { return sigma_z.size(); }

    /// Ground state: empty cavity, no coherence, all inversions at -1.
    static SystemState ground(std::size_t clusters) { return SystemState(clusters); }
};

/// Time derivative of (a, sigma^-_j, sigma^z_j) under the mean-field
/// Maxwell-Bloch equations:
///   da/dt        = -(kappa + i delta_c) a + sum_j g_j s_j + eta
///   ds_j/dt      = -(gamma_perp + i Theta_j) s_j + g_j z_j a
///   dz_j/dt      = -gamma_par (1 + z_j) - 4 g_j Re(s_j conj(a))
/// Throws ContractViolation if the state and clusters disagree in size.
SystemState mb_rhs(const SystemState& state, const PhysicalParams& params,
                   const SpinClusters& clusters);

/// Flat-buffer layout used by the integrators:
///   [Re a, Im a, Re s_1, Im s_1, ..., Re s_M, Im s_M, z_1, ..., z_M]
namespace flat {

constexpr std::size_t size(std::size_t clusters) noexcept { return 2 * (clusters + 1) + clusters; }

void pack(const SystemState& state, std::span<double> out);
SystemState unpack(std::span<const double> in, std::size_t clusters);

/// mb_rhs on the flat layout, without allocation.
void mb_rhs(std::span<const double> y, std::span<double> dydt, const PhysicalParams& params,
            const SpinClusters& clusters);

}  // namespace flat

}  // namespace bistab
