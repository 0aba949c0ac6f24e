#pragma once

#include <utility>
#include <vector>

#include "conic/gas.hpp"
#include "conic/pchip.hpp"

namespace conic {

// One sample of the self-similar conical flow at similarity coordinate s = r/z.
struct ConicalState {
    double s = 0.0;
    double rho = 0.0;
    double u_r = 0.0;
    double u_z = 0.0;
};

struct DerivativeTriple {
    double drho = 0.0;
    double du_r = 0.0;
    double du_z = 0.0;
};

// Denominator (1+s^2)c^2(rho) - (s u_z - u_r)^2 of the conical ODE system.
double ode_denominator(const ConicalState& st, const GasModel& gas);

// Right-hand sides (rho', u_r', u_z') of the conical ODE system.
DerivativeTriple ode_rhs(const ConicalState& st, const GasModel& gas);

// Characteristic slopes lambda_1 <= lambda_2 of the self-similar flow.
std::pair<double, double> characteristic_slopes(const ConicalState& st,
                                                const GasModel& gas);

// Density ratio rho+/rho0 > 1 across a shock of slope s0 (compressive root).
double solve_alpha(double s0, const GasModel& gas, const Freestream& fs);

// Post-shock state from the Rankine-Hugoniot relations at slope s0.
ConicalState post_shock_state(double s0, const GasModel& gas, const Freestream& fs);

enum class IntegratorKind { rk4, rk45 };

struct IntegrateOptions {
    int nodes = 2000;                  // output resolution
    IntegratorKind kind = IntegratorKind::rk4;
    double grid_stretch = 8.0;         // spacing ratio, refined toward s_end
    double denominator_floor = 1e-3;   // halve steps below this fraction of start value
    double rk45_tol = 1e-12;
};

// Integrate the conical system from start.s down (or up) to s_end.
// Output is ordered from start.s toward s_end, start state included.
std::vector<ConicalState> integrate_inward(const ConicalState& start, double s_end,
                                           const GasModel& gas,
                                           const IntegrateOptions& opt = {});

// u_r(b0) - b0 u_z(b0) after integrating from the post-shock state at s0.
// Negative when the shock is too weak, positive past the weak-branch root.
double tangency_residual(double s0, double b0, const GasModel& gas,
                         const Freestream& fs, const IntegrateOptions& opt = {});

struct ShockFitResult {
    double s0 = 0.0;
    double alpha = 0.0;        // density ratio rho+/rho0
    ConicalState post;         // state just behind the shock
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    bool entropy_ok = false;
};

struct SolveOptions {
    IntegrateOptions integ;
    double s0_tol = 1e-12;       // bisection/secant tolerance in s0 (then polished)
    int scan_points = 192;       // bracket scan resolution
    double extension = -1.0;     // table width beyond s0; < 0 selects tau0
};

// Self-similar background flow between cone (s = b0) and shock (s = s0),
// tabulated on [b0, s0 + tau_table].
struct BackgroundSolution {
    GasModel gas;
    Freestream fs;
    double b0 = 0.0;
    ShockFitResult fit;
    double tau0 = 0.0;       // extension bound from the self-similar theory
    double tau_table = 0.0;  // extension actually tabulated (>= tau0 resolution)
    std::vector<ConicalState> table;  // ascending in s

    // Interpolated state and flow quantities at s in [b0, s0 + tau_table].
    ConicalState state_at(double s) const;
    double rho_at(double s) const { return rho_itp_(clamp_s(s)); }
    double u_r_at(double s) const { return u_r_itp_(clamp_s(s)); }
    double u_z_at(double s) const { return u_z_itp_(clamp_s(s)); }
    double s_min() const { return b0; }
    double s_max() const { return fit.s0 + tau_table; }

    double tangency_error() const;   // |u_r - b0 u_z| at the cone
    double max_bernoulli_drift() const;

    void build_interpolants();  // called by the solver and by deserialization

private:
    double clamp_s(double s) const;
    Pchip rho_itp_, u_r_itp_, u_z_itp_;
};

// Shoot for the attached weak-branch shock: smallest admissible s0 with zero
// tangency residual. Verifies entropy conditions and supersonic-in-z flow,
// then extends the table past the shock.
BackgroundSolution shoot_attached_shock(double b0, const GasModel& gas,
                                        const Freestream& fs,
                                        const SolveOptions& opt = {});

// Potential Phi = z (u_z(s) + s u_r(s)) and gradient (u_z, u_r) at (z, r).
struct PotentialSample {
    double phi = 0.0;
    double dphi_dz = 0.0;
    double dphi_dr = 0.0;
};
PotentialSample potential_eval(const BackgroundSolution& bg, double z, double r);

// One sample of the shock polar scan: shock slope, resulting cone angle, and
// the velocity on the cone surface.
struct AppleSample {
    double s0 = 0.0;
    double cone_angle = 0.0;
    double u_z_cone = 0.0;
    double u_r_cone = 0.0;
};

// Scan admissible shock slopes and record where the flow turns tangent to a
// ray; the hodograph image of the result is the classical apple curve.
std::vector<AppleSample> apple_curve(const GasModel& gas, const Freestream& fs,
                                     int n);

// Largest cone half-angle slope admitting an attached shock (golden-section
// refinement of the apple-curve maximum).
double critical_angle(const GasModel& gas, const Freestream& fs);

// Closed-form supersonic-in-z threshold sqrt((sqrt((gamma+7)/(gamma-1)) - 1)/2).
double supersonic_z_threshold(double gamma);

}  // namespace conic
