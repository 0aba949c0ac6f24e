#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "conic/background.hpp"
#include "conic/stability.hpp"

namespace conic {

struct MarchConfig {
    double epsilon = 1e-4;       // perturbation amplitude (of the gradient)
    double z_start = 1.0;        // upstream is uniform for z >= 1
    double z_end = 1000.0;
    int n_sigma = 128;
    int n_theta = 1;             // 1 = axisymmetric, else even >= 8
    double cfl = 0.5;
    double mu = -1.5;            // diagnostic weight exponent
    double support_lo = 0.3;     // sigma-support of the initial bump
    double support_hi = 0.7;
    double xi0_scale = 0.0;      // initial shock displacement, in units of the
                                 // epsilon-compatible amplitude
    double theta_phase = 0.0;
    std::uint64_t seed = 0;      // 0 = deterministic default profile
    double dissipation = 0.02;   // fourth-difference filter coefficient
    int record_stride = 1;
    int dump_every = 0;          // binary station dump every K records (0 = off)
    std::string dump_dir;

    void validate() const;
};

// Marching state in shock-fitted coordinates sigma = (r - b0 z)/(chi - b0 z).
// Stored gradients are the physical ones (d_z, d_r, d_theta of the potential
// perturbation).
struct PerturbationField {
    double z = 0.0;
    int n_sigma = 0;
    int n_theta = 0;
    double s0 = 0.0;
    double cone_slope = 0.0;           // b0 of the paired background
    std::vector<double> phi, u, p, w;  // n_sigma * n_theta, row = sigma index
    std::vector<double> chi;           // n_theta
    std::vector<double> dchi_dz;       // slope used on the last accepted step

    int idx(int i, int j) const { return i * n_theta + j; }
    double xi(int j) const { return chi[j] / z - s0; }
    double sup_xi() const;
};

// Test hooks for the stepping machinery (manufactured solutions, frozen
// nonlinearities); not used by production marches.
struct StepHooks {
    bool freeze_nonlinear = false;
    bool freeze_shock = false;  // keep chi on the background ray
    std::function<double(double z, double r, double theta)> source;
    std::function<void(PerturbationField&)> boundary_override;
};

struct StationRecord {
    double z = 0.0;
    double sup_grad = 0.0;
    double sup_xi = 0.0;
    double e0 = 0.0;            // z^mu * slice integral of |grad phi|^2
    double e1 = 0.0;            // z^(2+mu) * slice integral of |grad^2 phi|^2
    double shock_energy = 0.0;  // z^(mu+1) * theta-line integral of |grad phi|^2
    double cum_interior = 0.0;  // running volume integral of z^mu |grad phi|^2
    double cum_shock_phi = 0.0; // running z^(mu-1) phi^2 on the shock
    double cum_shock_dz = 0.0;  // running z^(mu+1) (d_z phi)^2
    double cum_shock_b0 = 0.0;  // running z^(mu+1) (B0 phi)^2
    double cum_shock_th = 0.0;  // running z^(mu+1) (d_theta phi / r)^2
    double consistency = 0.0;   // shock-evolution consistency residual
};

struct EnergyReport {
    MarchConfig config;
    double b0 = 0.0, s0 = 0.0;
    std::vector<StationRecord> series;

    bool completed = false;
    std::string failure;
    double failure_z = 0.0;

    double m0 = 0.0;       // fitted decay exponent of sup|grad phi|
    double m0_r2 = 0.0;
    bool m0_valid = false;

    double sup_weighted_slice_e0 = 0.0;  // sup_z z^(mu+1) slice |grad phi|^2
    double sup_weighted_slice_e1 = 0.0;  // sup_z z^(mu+3) slice |grad^2 phi|^2
    double max_consistency = 0.0;
    std::int64_t steps = 0;
};

struct EnergyVerdict {
    bool pass = false;
    double saturation_ratio = 0.0;  // cumulative energy, z_end vs z_end/2
    bool saturation_ok = false;
    double shock_bound_const = 0.0; // sup_z shock energy / epsilon^2
    bool shock_bounded = false;
    double hardy_trace_ratio = 0.0; // trace inequality on the computed shock
    bool hardy_ok = false;
};

// Compatible initial data at z = z_start: compactly supported bumps for phi
// and d_z phi, with the gradient sup normalized to epsilon.
PerturbationField init_data(const MarchConfig& cfg, const BackgroundSolution& bg);

// Largest stable station step for the current state.
double cfl_step(const PerturbationField& f, const BackgroundSolution& bg,
                double cfl);

// Advance one station by the two-stage predictor-corrector, applying the
// cone and shock closures after each stage and the high-order filter last.
void interior_step(PerturbationField& f, const BackgroundSolution& bg, double dz,
                   const MarchConfig& cfg, const StepHooks& hooks = {});

// Enforce d_r phi = b0 d_z phi at sigma = 0, resolving the evolved state into
// its outgoing characteristic combination plus the wall condition.
void apply_cone_closure(PerturbationField& f, const BackgroundSolution& bg);

// Advance is done inside interior_step; this enforces the shock-side values
// (continuity, jump relation, theta-tangency) on the current state and
// returns the worst consistency residual.
double apply_shock_closure(PerturbationField& f, const BackgroundSolution& bg,
                           const MarchConfig& cfg);

// Full march with per-station diagnostics. Throws only on invalid input;
// run failures (blowup, extension exceeded) are reported in the result.
EnergyReport run_march(const MarchConfig& cfg, const BackgroundSolution& bg);

// Post-run checks: weighted-energy saturation, shock-surface boundedness,
// and the trace inequality on the computed shock.
EnergyVerdict energy_diagnostics(const EnergyReport& report, double mu);

// Background re-extended so the table covers shock excursions up to tau.
BackgroundSolution with_extension(const BackgroundSolution& bg, double tau);

}  // namespace conic
