#include "bistab/model.hpp"

#include <cmath>
#include <numeric>

#include "bistab/error.hpp"
#include "bistab/units.hpp"

namespace bistab {

double drive_from_power(double p_in, double kappa) {
    if (!(p_in >= 0.0)) throw DomainError("drive_from_power: input flux must be >= 0");
    if (!(kappa > 0.0)) throw DomainError("drive_from_power: kappa must be > 0");
    return std::sqrt(p_in * kappa);
}

double power_from_drive(double eta, double kappa) {
    if (!(eta >= 0.0)) throw DomainError("power_from_drive: drive amplitude must be >= 0");
    if (!(kappa > 0.0)) throw DomainError("power_from_drive: kappa must be > 0");
    return eta * eta / kappa;
}

double transmission_from_intensity(double intensity, double eta, double kappa) {
    if (!(eta > 0.0)) throw DomainError("transmission undefined for zero drive");
    const double r = kappa / eta;
    return intensity * r * r;
}

double transmission(cdouble a, double eta, double kappa) {
    return transmission_from_intensity(std::norm(a), eta, kappa);
}

double to_db(double ratio) { return 10.0 * std::log10(ratio); }
double from_db(double db) { return std::pow(10.0, db / 10.0); }

std::vector<std::string> validate(const PhysicalParams& p) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw DomainError(std::string(name) + " must be finite and > 0");
    };
    positive(p.kappa, "kappa");
    positive(p.gamma_perp, "gamma_perp");
    positive(p.gamma_par, "gamma_par");
    if (!(p.omega_coll >= 0.0) || !std::isfinite(p.omega_coll))
        throw DomainError("omega_coll must be finite and >= 0");
    if (!(p.eta >= 0.0) || !std::isfinite(p.eta)) throw DomainError("eta must be finite and >= 0");
    if (!std::isfinite(p.delta_c)) throw DomainError("delta_c must be finite");

    std::vector<std::string> warnings;
    if (!(p.gamma_par < p.gamma_perp))
        warnings.emplace_back("expected gamma_par < gamma_perp (spin inversion slowest)");
    if (!(p.gamma_perp < p.kappa)) warnings.emplace_back("expected gamma_perp < kappa");
    return warnings;
}

SpinClusters::SpinClusters(std::vector<double> coupling, std::vector<double> detuning)
    : g_(std::move(coupling)), theta_(std::move(detuning)) {
    if (g_.size() != theta_.size())
        throw ContractViolation("SpinClusters: coupling and detuning sizes differ");
    if (g_.empty()) throw ContractViolation("SpinClusters: at least one cluster required");
    for (std::size_t j = 0; j < g_.size(); ++j) {
        if (!std::isfinite(g_[j]) || g_[j] < 0.0)
            throw ContractViolation("SpinClusters: couplings must be finite and >= 0");
        if (!std::isfinite(theta_[j]))
            throw ContractViolation("SpinClusters: detunings must be finite");
        if (j > 0 && !(theta_[j] > theta_[j - 1]))
            throw ContractViolation("SpinClusters: detunings must be strictly increasing");
    }
}

SpinClusters SpinClusters::homogeneous(double coupling, double detuning) {
    return SpinClusters({coupling}, {detuning});
}

double SpinClusters::total_coupling_sq() const noexcept {
    return std::transform_reduce(g_.begin(), g_.end(), 0.0, std::plus<>{},
                                 [](double g) { return g * g; });
}

std::vector<double> SpinClusters::weights() const {
    std::vector<double> w(g_.size());
    const double total = total_coupling_sq();
    for (std::size_t j = 0; j < g_.size(); ++j)
        w[j] = total > 0.0 ? g_[j] * g_[j] / total : 1.0 / static_cast<double>(g_.size());
    return w;
}

namespace {

// Shared kernel for both state representations.
void rhs_kernel(cdouble a, const cdouble* sm, const double* sz, std::size_t m,
                const PhysicalParams& p, const SpinClusters& c, cdouble& da, cdouble* dsm,
                double* dsz) {
    const auto& g = c.coupling();
    const auto& theta = c.detuning();
    cdouble field_source{0.0, 0.0};
    for (std::size_t j = 0; j < m; ++j) {
        field_source += g[j] * sm[j];
        dsm[j] = -cdouble(p.gamma_perp, theta[j]) * sm[j] + g[j] * sz[j] * a;
        const double re_s_astar = sm[j].real() * a.real() + sm[j].imag() * a.imag();
        dsz[j] = -p.gamma_par * (1.0 + sz[j]) - 4.0 * g[j] * re_s_astar;
    }
    da = -cdouble(p.kappa, p.delta_c) * a + field_source + p.eta;
}

}  // namespace

SystemState mb_rhs(const SystemState& state, const PhysicalParams& params,
                   const SpinClusters& clusters) {
    const std::size_t m = clusters.size();
    if (state.sigma_minus.size() != m || state.sigma_z.size() != m)
        throw ContractViolation("mb_rhs: state dimension does not match cluster count");
    SystemState d(m);
    rhs_kernel(state.a, state.sigma_minus.data(), state.sigma_z.data(), m, params, clusters, d.a,
               d.sigma_minus.data(), d.sigma_z.data());
    return d;
}

namespace flat {

void pack(const SystemState& s, std::span<double> out) {
    const std::size_t m = s.size();
    if (s.sigma_minus.size() != m || out.size() != size(m))
        throw ContractViolation("flat::pack: size mismatch");
    out[0] = s.a.real();
    out[1] = s.a.imag();
    for (std::size_t j = 0; j < m; ++j) {
        out[2 + 2 * j] = s.sigma_minus[j].real();
        out[3 + 2 * j] = s.sigma_minus[j].imag();
        out[2 * (m + 1) + j] = s.sigma_z[j];
    }
}

SystemState unpack(std::span<const double> in, std::size_t m) {
    if (in.size() != size(m)) throw ContractViolation("flat::unpack: size mismatch");
    SystemState s(m);
    s.a = {in[0], in[1]};
    for (std::size_t j = 0; j < m; ++j) {
        s.sigma_minus[j] = {in[2 + 2 * j], in[3 + 2 * j]};
        s.sigma_z[j] = in[2 * (m + 1) + j];
    }
    return s;
}

void mb_rhs(std::span<const double> y, std::span<double> dydt, const PhysicalParams& params,
            const SpinClusters& clusters) {
    const std::size_t m = clusters.size();
    if (y.size() != size(m) || dydt.size() != size(m))
        throw ContractViolation("flat::mb_rhs: buffer size does not match cluster count");
    // std::complex<double> is layout-compatible with double[2].
    const auto* cy = reinterpret_cast<const cdouble*>(y.data());
    auto* cd = reinterpret_cast<cdouble*>(dydt.data());
    rhs_kernel(cy[0], cy + 1, y.data() + 2 * (m + 1), m, params, clusters, cd[0], cd + 1,
               dydt.data() + 2 * (m + 1));
}

}  // namespace flat

}  // namespace bistab
