#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "conic/background.hpp"
#include "conic/gas.hpp"
#include "conic/rate_fit.hpp"

namespace conic {

// Hypersonic leading-order values of the background flow and its derivatives
// on the shock layer, as functions of (b0, gamma, A, q0) only.
struct AsymptoticBackground {
    double s0 = 0.0;
    double u_r = 0.0;
    double u_z = 0.0;
    double rho = 0.0;
    double q_sq_minus_c_sq = 0.0;
    double u_z_sq_minus_c_sq = 0.0;
    double denominator = 0.0;      // (1+s^2)c^2 - (s u_z - u_r)^2
    double du_r = 0.0;             // u_r'(s)
    double du_z = 0.0;             // u_z'(s)
    double lambda1_minus_s = 0.0;
    double lambda2_minus_s = 0.0;
    double rho_deriv_scale = 0.0;  // |rho'| = O(1/b0); the 1/b0 reference
};

// Leading orders of the layer quantities. Throws when b0 is at or beyond the
// supersonic-in-z threshold.
AsymptoticBackground background_asymptotics(double b0, const GasModel& gas,
                                            const Freestream& fs);

// Same struct with the derivative entries filled (u_r', u_z', lambda_i - s).
AsymptoticBackground derivative_asymptotics(double b0, const GasModel& gas,
                                            const Freestream& fs);

// Quantities whose hypersonic remainder rates can be fitted from q0 sweeps.
enum class LayerQuantity {
    shock_slope_gap,  // s0/b0 - 1
    u_r,
    u_z,
    rho,
    q_sq_minus_c_sq,
    u_z_sq_minus_c_sq,
    denominator,
    du_r,
    du_z,
    lambda1_minus_s,
    lambda2_minus_s,
};

const char* quantity_name(LayerQuantity q);

// Dominant (slowest-decaying) remainder exponent carried by the quantity's
// closed-form statement: -2/(gamma-1) alone for the shock slope and the
// velocity components, -min(2, 2/(gamma-1)) for everything else.
double expected_remainder_exponent(LayerQuantity q, double gamma);

// The -min(2, 2/(gamma-1)) rule applied indiscriminately.
double min_rule_exponent(double gamma);

struct RateFit {
    std::string quantity;
    double exponent_fitted = 0.0;
    double exponent_expected = 0.0;  // gate actually applied
    double exponent_min_rule = 0.0;  // -min(2, 2/(gamma-1)), for reference
    double r_squared = 0.0;
    double constant = 0.0;  // fitted |error| ~ constant * (b0 q0)^exponent
    bool pass = false;
    std::vector<double> b0q0;
    std::vector<double> rel_error;
    std::vector<double> ode_value;   // sampled at the cone ray
    std::vector<double> asym_value;
};

// Sweep q0, measure the worst relative error of the quantity against its
// leading-order value over the layer, and fit log|error| vs log(b0 q0).
// Passes when |slope - expected| <= 0.25 |expected| and r^2 >= 0.95.
// expected_override, if finite, replaces the default per-quantity exponent.
RateFit fit_remainder_rate(LayerQuantity q, double b0, const GasModel& gas,
                           std::span<const double> q0_list,
                           double expected_override =
                               std::numeric_limits<double>::quiet_NaN(),
                           const SolveOptions& solve_opt = {});

// Relative error of one quantity for an already-solved background.
double layer_relative_error(LayerQuantity q, const BackgroundSolution& bg);

// Value of the quantity at the cone ray and its leading-order counterpart.
std::pair<double, double> layer_value_pair(LayerQuantity q,
                                           const BackgroundSolution& bg);

}  // namespace conic
