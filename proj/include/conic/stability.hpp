#pragma once

#include <functional>
#include <string>
#include <vector>

#include "conic/background.hpp"

namespace conic {

// Pointwise coefficients of the linearized interior operator
//   d_zz + 2 P1 d_zr + P2 d_rr - P3/r^2 d_tt + 2 P4/r d_z + 2 P5/r d_r.
struct PointCoefficients {
    double P1 = 0.0, P2 = 0.0, P3 = 0.0, P4 = 0.0, P5 = 0.0;
    double dP1 = 0.0, dP2 = 0.0, dP3 = 0.0;  // analytic s-derivatives
};

PointCoefficients linear_coefficients_at(const BackgroundSolution& bg, double s);

// Nodewise tables of the same coefficients on the background grid.
struct LinearCoefficients {
    std::vector<double> s;
    std::vector<double> P1, P2, P3, P4, P5;
    std::vector<double> dP1, dP2, dP3;
};

LinearCoefficients linear_coefficients(const BackgroundSolution& bg);

// Scalar coefficients of the linearized shock condition
//   B1 d_r + B2 d_z + B3 xi = quadratic remainder,  mu_i = B_{i+1}/B1.
struct ShockCoefficients {
    double B1 = 0.0, B2 = 0.0, B3 = 0.0;
    double mu1 = 0.0, mu2 = 0.0;
};

ShockCoefficients shock_coefficients(const BackgroundSolution& bg);

// Hypersonic leading orders of the interior coefficients (functions of b0 and
// gamma only).
struct LeadingCoefficients {
    double P1, P2, P3, P4, P5, dP1, dP2, dP3;
};
LeadingCoefficients leading_linear_coefficients(double b0, double gamma);

struct LeadingShockCoefficients {
    double B1, B2, B3, mu1, mu2;
};
LeadingShockCoefficients leading_shock_coefficients(double b0, const GasModel& gas,
                                                    double q0);

// Everything the energy-multiplier construction produces, with the sign
// verdicts required for a uniform weighted estimate.
struct MultiplierReport {
    double mu = -1.5;                // weight exponent, must be < -1
    std::vector<double> s;           // nodes on [b0, s0] plus endpoint refinements
    std::vector<double> a, b;        // multiplier profile: a = 1, b = s^2 (1 + (s-b0)/b0)
    std::vector<double> K1, K2, K3, K4;
    std::vector<double> discriminant;  // K2^2 - 4 K1 K3
    std::vector<double> lambda_min;    // smallest eigenvalue of the N1 form

    bool k_signs_ok = false;       // K1 > 0, K4 > 0, discriminant < 0 everywhere
    bool lambda_window_ok = false; // lambda1 < b/(s a) < lambda2 everywhere
    bool lambda_min_positive = false;

    // Cone-surface cancellation: coefficients of b0 N1 - N2 under the wall
    // condition d_r = b0 d_z, relative to the size of the cancelling terms.
    double cone_residual_zz = 0.0;
    double cone_residual_tt = 0.0;

    double beta0 = 0.0, beta1 = 0.0, beta2 = 0.0, beta3 = 0.0;
    double Q1 = 0.0;  // coefficient of the shock d_z energy (C3 route)
    double Q2 = 0.0;  // coefficient of the (B0 phi)^2 energy (C6 route)
    double Q0 = 0.0;  // Q1 (1 - 1/mu^2), must be positive
    double C3_closed = 0.0;  // hypersonic closed forms of the same constants
    double C6_closed = 0.0;
    double identity_gap = 0.0;  // |Q2 (1+b0^2)^2 / (4 b0^2 Q1) - 1|

    bool verdict = false;
};

MultiplierReport multiplier_eval(const BackgroundSolution& bg, double mu);

// One test function for the weighted trace inequality on [1, T].
struct HardySample {
    std::function<double(double)> value;
    std::function<double(double)> deriv;
    std::string label;
};

struct HardyResult {
    double worst_ratio = 0.0;
    std::string worst_label;
    std::vector<double> ratios;
};

// Verify int_1^T z^(mu-1) f^2 <= (4/mu^2) int_1^T z^(mu+1) f'^2 + (2/|mu|) f(1)^2
// by quadrature; returns max over samples of LHS/RHS.
HardyResult hardy_check(const std::vector<HardySample>& samples, double mu,
                        double T, int panels = 2048);

// The canned suite: constant, the borderline power z^(-mu/2), and n_random
// seeded trigonometric polynomials.
std::vector<HardySample> hardy_default_samples(double mu, double T, int n_random,
                                               unsigned long long seed);

}  // namespace conic
