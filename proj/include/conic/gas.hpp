#pragma once

#include "conic/errors.hpp"

namespace conic {

// Polytropic equation of state P = A rho^gamma with 1 < gamma < 3.
struct GasModel {
    double pressure_coeff = 1.0;  // A
    double gamma = 1.4;

    void validate() const;
};

// Uniform upstream flow (0, 0, q0) with density rho0. Sound speed and the
// Bernoulli constant are derived once and carried along.
struct Freestream {
    double speed = 0.0;        // q0
    double density = 1.0;      // rho0
    double sound_speed = 0.0;  // c(rho0)
    double bernoulli = 0.0;    // C0 = q0^2/2 + h(rho0)
};

Freestream make_freestream(const GasModel& gas, double speed, double density);

double pressure(const GasModel& gas, double rho);
double sound_speed_sq(const GasModel& gas, double rho);
double sound_speed(const GasModel& gas, double rho);

// Specific enthalpy h(rho) = c^2(rho) / (gamma - 1).
double enthalpy(const GasModel& gas, double rho);

// Invert Bernoulli's law: find rho with h(rho) = C0 - speed_sq/2.
// Bracketing bisection refined with secant steps, relative tolerance 1e-12.
double density_from_speed_sq(const GasModel& gas, const Freestream& fs,
                             double speed_sq);

}  // namespace conic
