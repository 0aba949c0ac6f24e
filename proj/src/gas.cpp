#include "conic/gas.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace conic {

void GasModel::validate() const {
    if (!(pressure_coeff > 0.0))
        throw std::domain_error("pressure coefficient must be positive");
    if (!(gamma > 1.0) || !(gamma < 3.0))
        throw std::domain_error("adiabatic exponent must lie in (1, 3)");
}

Freestream make_freestream(const GasModel& gas, double speed, double density) {
    gas.validate();
    if (!(density > 0.0)) throw std::domain_error("upstream density must be positive");
    Freestream fs;
    fs.speed = speed;
    fs.density = density;
    fs.sound_speed = sound_speed(gas, density);
    fs.bernoulli = 0.5 * speed * speed + enthalpy(gas, density);
    if (!(speed > fs.sound_speed))
        throw std::domain_error("upstream flow must be supersonic (q0 > c0)");
    return fs;
}

double pressure(const GasModel& gas, double rho) {
    if (!(rho > 0.0)) throw std::domain_error("density must be positive");
    return gas.pressure_coeff * std::pow(rho, gas.gamma);
}

double sound_speed_sq(const GasModel& gas, double rho) {
    if (!(rho > 0.0)) throw std::domain_error("density must be positive");
    return gas.pressure_coeff * gas.gamma * std::pow(rho, gas.gamma - 1.0);
}

double sound_speed(const GasModel& gas, double rho) {
    return std::sqrt(sound_speed_sq(gas, rho));
}

double enthalpy(const GasModel& gas, double rho) {
    return sound_speed_sq(gas, rho) / (gas.gamma - 1.0);
}

double density_from_speed_sq(const GasModel& gas, const Freestream& fs,
                             double speed_sq) {
    if (speed_sq < 0.0) throw std::domain_error("squared speed must be nonnegative");
    const double target = fs.bernoulli - 0.5 * speed_sq;
    if (!(target > 0.0))
        throw CavitationError("speed_sq >= 2*C0: flow would cavitate (rho -> 0)");

    // Bracket the root of h(rho) = target. h is strictly increasing.
    double lo = fs.density, hi = fs.density;
    while (enthalpy(gas, lo) > target) lo *= 0.5;
    while (enthalpy(gas, hi) < target) hi *= 2.0;

    auto f = [&](double rho) { return enthalpy(gas, rho) - target; };
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;

    const double rel_tol = 1e-12;
    double rho = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        // Secant step from the bracket endpoints, falling back to bisection
        // whenever it lands outside.
        double sec = hi - fhi * (hi - lo) / (fhi - flo);
        rho = (sec > lo && sec < hi) ? sec : 0.5 * (lo + hi);
        double fr = f(rho);
        if (fr == 0.0) break;
        if ((fr > 0.0) == (fhi > 0.0)) {
            hi = rho;
            fhi = fr;
        } else {
            lo = rho;
            flo = fr;
        }
        if (hi - lo <= rel_tol * rho) break;
    }
    return rho;
}

}  // namespace conic
