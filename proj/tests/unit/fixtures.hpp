#pragma once

#include <cmath>

#include "bistab/ensemble.hpp"
#include "bistab/model.hpp"
#include "bistab/units.hpp"

namespace fixtures {

using namespace bistab;

// Rates used throughout: kappa/2pi = 0.44 MHz, T2 = 4.8 us, gamma_par/2pi = 6.25e-4 Hz.
inline PhysicalParams lab_params(double omega_hz = 12.6e6, double kappa_hz = 0.44e6) {
    PhysicalParams p;
    p.kappa = from_hz(kappa_hz);
    p.gamma_perp = from_hz(1.0 / 4.8e-6);
    p.gamma_par = from_hz(6.25e-4);
    p.omega_coll = from_hz(omega_hz);
    return p;
}

inline EnsembleSpec lab_ensemble(std::size_t m = 1001) {
    EnsembleSpec s;
    s.q = 1.39;
    s.delta_width = from_hz(5.3e6);
    s.cluster_count = m;
    return s;
}

/// Single resonant cluster with the requested cooperativity.
inline SpinClusters resonant(double c_coll, const PhysicalParams& p) {
    return SpinClusters::homogeneous(std::sqrt(c_coll * p.kappa * p.gamma_perp));
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace fixtures
