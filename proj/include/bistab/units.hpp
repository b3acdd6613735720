#pragma once

#include <complex>
#include <numbers>

namespace bistab {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Linear frequency [Hz] to angular frequency [rad/s]. Config files carry `_hz` keys.
constexpr double from_hz(double hz) noexcept { return two_pi * hz; }
constexpr double to_hz(double rad_per_s) noexcept { return rad_per_s / two_pi; }

/// Drive amplitude eta [rad/s] from input photon flux P_in = eta^2/kappa [1/s].
double drive_from_power(double p_in, double kappa);
double power_from_drive(double eta, double kappa);

/// |T|^2 = |a|^2 kappa^2 / eta^2. Throws DomainError for eta == 0.
double transmission(std::complex<double> a, double eta, double kappa);
double transmission_from_intensity(double intensity, double eta, double kappa);

double to_db(double ratio);
double from_db(double db);

}  // namespace bistab
