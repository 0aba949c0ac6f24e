#include "conic/perturb.hpp"

#include "conic/io.hpp"
#include "conic/rate_fit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <random>

namespace conic {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// Closed-form Bernoulli inversion for the polytropic gas; the public solver
// route is bisection-based, this fast path serves the inner marching loops.
double density_fast(const GasModel& gas, const Freestream& fs, double speed_sq,
                    double z_station) {
    double h = fs.bernoulli - 0.5 * speed_sq;
    if (!(h > 0.0))
        throw BlowupError("cavitation: perturbed speed exceeded the Bernoulli bound",
                          z_station);
    return std::pow((gas.gamma - 1.0) * h / (gas.pressure_coeff * gas.gamma),
                    1.0 / (gas.gamma - 1.0));
}

// Everything the interior operator needs about the background at one ray.
struct NodeEnv {
    double uz, ur, c2, W;   // hatted state, sound speed squared, u_z^2 - c^2
    double duz, dur;        // background derivatives in s
    PointCoefficients P;
};

NodeEnv node_env(const BackgroundSolution& bg, double s) {
    NodeEnv e;
    ConicalState st = bg.state_at(s);
    e.uz = st.u_z;
    e.ur = st.u_r;
    e.c2 = sound_speed_sq(bg.gas, st.rho);
    e.W = e.uz * e.uz - e.c2;
    DerivativeTriple d = ode_rhs(st, bg.gas);
    e.duz = d.du_z;
    e.dur = d.du_r;
    e.P = linear_coefficients_at(bg, s);
    return e;
}

struct FSet {
    double f1, f2, f3, f4, f5, f6, f7;
};

// Quasilinear closures of the perturbed interior equation.
FSet closures(const NodeEnv& e, double s, double r, double u, double p, double w,
              double gamma) {
    const double wr = w / r;
    const double bern = (2.0 * e.uz + u) * u + (2.0 * e.ur + p) * p + wr * wr;
    const double gterm = 0.5 * (gamma - 1.0) * bern;
    FSet f;
    f.f1 = -(2.0 * e.uz * u + u * u + gterm) / e.W;
    f.f2 = -(2.0 * e.uz * p + 2.0 * e.ur * u + 2.0 * u * p) / e.W;
    f.f3 = -(2.0 * e.ur * p + p * p + gterm) / e.W;
    f.f4 = -(wr * wr + gterm) / e.W;
    f.f5 = -2.0 * (e.uz + u) * w / (r * e.W);
    f.f6 = -2.0 * (e.ur + p) * w / (r * e.W);
    f.f7 = (s * s * e.duz *
                (0.5 * (gamma + 1.0) * u * u + 0.5 * (gamma - 1.0) * p * p +
                 0.5 * (gamma - 1.0) * wr * wr) -
            s * e.dur *
                (0.5 * (gamma - 1.0) * u * u + 0.5 * (gamma + 1.0) * p * p +
                 0.5 * (gamma - 1.0) * wr * wr) -
            2.0 * s * e.duz * u * p -
            e.ur * (0.5 * (gamma - 1.0) * u * u + 0.5 * (gamma - 1.0) * p * p +
                    0.5 * (gamma - 3.0) * wr * wr) +
            p * (wr * wr - gterm)) /
           e.W;
    return f;
}

// Full nonlinear jump relation at the shock; zero when the Rankine-Hugoniot
// condition holds. u, p, w are perturbation gradients at r = chi.
double rh_residual(const BackgroundSolution& bg, double s_shock, double chi,
                   double u, double p, double w, double z) {
    const double q0 = bg.fs.speed;
    const double rho0 = bg.fs.density;
    const double uz = bg.u_z_at(s_shock) + u;
    const double ur = bg.u_r_at(s_shock) + p;
    const double wt = w / chi;
    const double rho = density_fast(bg.gas, bg.fs, uz * uz + ur * ur + wt * wt, z);
    return rho * (ur * ur + uz * uz - q0 * uz) - rho0 * q0 * uz + rho0 * q0 * q0 +
           rho * wt * wt;
}

// Partial derivatives of rh_residual in the gradient components.
void rh_residual_grad(const BackgroundSolution& bg, double s_shock, double chi,
                      double u, double p, double w, double z, double* dFdu,
                      double* dFdp) {
    const double q0 = bg.fs.speed;
    const double uz = bg.u_z_at(s_shock) + u;
    const double ur = bg.u_r_at(s_shock) + p;
    const double wt = w / chi;
    const double rho = density_fast(bg.gas, bg.fs, uz * uz + ur * ur + wt * wt, z);
    const double c2 = sound_speed_sq(bg.gas, rho);
    const double flux = ur * ur + uz * uz - q0 * uz + wt * wt;
    *dFdp = -rho * ur / c2 * flux + rho * 2.0 * ur;
    *dFdu = -rho * uz / c2 * flux + rho * (2.0 * uz - q0) - bg.fs.density * q0;
}

// Integral of the extended u_r over [s0, s0 + xi] (4-point Gauss-Legendre).
double ur_integral(const BackgroundSolution& bg, double xi) {
    if (xi == 0.0) return 0.0;
    static const double xg[4] = {-0.8611363115940526, -0.3399810435848563,
                                 0.3399810435848563, 0.8611363115940526};
    static const double wg[4] = {0.3478548451374538, 0.6521451548625461,
                                 0.6521451548625461, 0.3478548451374538};
    const double s0 = bg.fit.s0;
    double sum = 0.0;
    for (int k = 0; k < 4; ++k)
        sum += wg[k] * bg.u_r_at(s0 + 0.5 * xi * (1.0 + xg[k]));
    return 0.5 * xi * sum;
}

struct Workspace {
    std::vector<double> dphi, du, dp, dw, dchi;
    std::vector<double> scratch;
};

// Station derivative of the full state at fixed (sigma, theta).
void eval_rhs(const PerturbationField& f, const BackgroundSolution& bg,
              const MarchConfig& cfg, const StepHooks& hooks, Workspace& ws) {
    const int ns = f.n_sigma, nt = f.n_theta;
    const double z = f.z;
    const double b0 = bg.b0;
    const double gamma = bg.gas.gamma;
    const double ds = 1.0 / (ns - 1);
    const double dt = kTwoPi / nt;
    const double s_hi = bg.s_max();

    ws.dphi.assign(ns * nt, 0.0);
    ws.du.assign(ns * nt, 0.0);
    ws.dp.assign(ns * nt, 0.0);
    ws.dw.assign(ns * nt, 0.0);
    ws.dchi.assign(nt, 0.0);

    // Shock-ray motion from the jump relation, resolved per theta.
    for (int j = 0; j < nt; ++j) {
        if (hooks.freeze_shock) {
            ws.dchi[j] = bg.fit.s0;
            continue;
        }
        const double s_shock = f.chi[j] / z;
        if (s_shock > s_hi - 1e-3 * (s_hi - bg.fit.s0))
            throw ExtensionExceededError(
                "shock left the tabulated background extension", z);
        if (s_shock < b0 + 0.05 * (bg.fit.s0 - b0))
            throw BlowupError("shock collapsed onto the cone", z);
        const int q = f.idx(ns - 1, j);
        const double dth_chi =
            (nt > 1)
                ? (f.chi[(j + 1) % nt] - f.chi[(j + nt - 1) % nt]) / (2.0 * dt)
                : 0.0;
        const double uz = bg.u_z_at(s_shock) + f.u[q];
        const double ur = bg.u_r_at(s_shock) + f.p[q];
        const double wt = f.w[q] / f.chi[j];
        const double rho =
            density_fast(bg.gas, bg.fs, uz * uz + ur * ur + wt * wt, z);
        const double den = rho * uz - bg.fs.density * bg.fs.speed;
        if (!(den > 0.0))
            throw EntropyError("mass-flux denominator lost its sign at the shock");
        ws.dchi[j] = (rho * ur - rho * wt * f.w[q] * dth_chi / f.chi[j]) / den;
    }

    for (int j = 0; j < nt; ++j) {
        const double wchi = f.chi[j] - b0 * z;
        if (!(wchi > 0.0)) throw BlowupError("layer width collapsed", z);
        const int jp = (j + 1) % nt, jm = (j + nt - 1) % nt;
        const double dth_chi =
            (nt > 1) ? (f.chi[jp] - f.chi[jm]) / (2.0 * dt) : 0.0;

        for (int i = 0; i < ns; ++i) {
            const double sigma = i * ds;
            const double r = b0 * z + sigma * wchi;
            const double s = r / z;
            const int q = f.idx(i, j);

            // sigma-derivatives (one-sided second order at the walls)
            auto dsig = [&](const std::vector<double>& X) {
                if (i == 0)
                    return (-3.0 * X[f.idx(0, j)] + 4.0 * X[f.idx(1, j)] -
                            X[f.idx(2, j)]) /
                           (2.0 * ds);
                if (i == ns - 1)
                    return (3.0 * X[f.idx(ns - 1, j)] - 4.0 * X[f.idx(ns - 2, j)] +
                            X[f.idx(ns - 3, j)]) /
                           (2.0 * ds);
                return (X[f.idx(i + 1, j)] - X[f.idx(i - 1, j)]) / (2.0 * ds);
            };
            auto dthe = [&](const std::vector<double>& X) {
                return (nt > 1)
                           ? (X[f.idx(i, jp)] - X[f.idx(i, jm)]) / (2.0 * dt)
                           : 0.0;
            };

            const double du_dsig = dsig(f.u);
            const double dp_dsig = dsig(f.p);
            const double dw_dsig = dsig(f.w);

            const double dr_u = du_dsig / wchi;
            const double dr_p = dp_dsig / wchi;
            const double dr_w = dw_dsig / wchi;

            // physical theta-derivative at fixed (z, r)
            const double shift = sigma * dth_chi / wchi;
            const double dth_u = dthe(f.u) - shift * du_dsig;
            const double dth_p = dthe(f.p) - shift * dp_dsig;
            const double dth_w = dthe(f.w) - shift * dw_dsig;

            NodeEnv env = node_env(bg, s);
            double G;
            if (hooks.freeze_nonlinear) {
                G = -2.0 * env.P.P1 * dr_u - env.P.P2 * dr_p +
                    env.P.P3 / (r * r) * dth_w - 2.0 * env.P.P4 / r * f.u[q] -
                    2.0 * env.P.P5 / r * f.p[q];
            } else {
                FSet fc = closures(env, s, r, f.u[q], f.p[q], f.w[q], gamma);
                const double denom = 1.0 - fc.f1;
                if (!(denom > 0.1))
                    throw BlowupError("axial hyperbolicity lost in the interior", z);
                G = ((fc.f2 - 2.0 * env.P.P1) * dr_u + (fc.f3 - env.P.P2) * dr_p +
                     (env.P.P3 + fc.f4) / (r * r) * dth_w + fc.f5 / r * dth_u +
                     fc.f6 / r * dth_p - 2.0 * env.P.P4 / r * f.u[q] -
                     2.0 * env.P.P5 / r * f.p[q] + fc.f7 / r) /
                    denom;
            }
            if (hooks.source) {
                double g = hooks.source(z, r, j * dt);
                if (hooks.freeze_nonlinear)
                    G += g;
                else {
                    FSet fc = closures(env, s, r, f.u[q], f.p[q], f.w[q], gamma);
                    G += g / (1.0 - fc.f1);
                }
            }

            const double rdot = b0 + sigma * (ws.dchi[j] - b0);
            ws.dphi[q] = f.u[q] + rdot * f.p[q];
            ws.du[q] = G + rdot * dr_u;
            ws.dp[q] = dr_u + rdot * dr_p;
            ws.dw[q] = dth_u + rdot * dr_w;
        }
    }
}

void fourth_difference_filter(PerturbationField& f, double cd,
                              std::vector<double>& scratch) {
    if (cd <= 0.0) return;
    const int ns = f.n_sigma, nt = f.n_theta;
    for (std::vector<double>* X : {&f.phi, &f.u, &f.p, &f.w}) {
        scratch = *X;
        for (int j = 0; j < nt; ++j)
            for (int i = 2; i < ns - 2; ++i) {
                double d4 = scratch[f.idx(i - 2, j)] - 4.0 * scratch[f.idx(i - 1, j)] +
                            6.0 * scratch[f.idx(i, j)] - 4.0 * scratch[f.idx(i + 1, j)] +
                            scratch[f.idx(i + 2, j)];
                (*X)[f.idx(i, j)] -= cd * d4;
            }
        if (nt >= 8) {
            scratch = *X;
            for (int i = 1; i < ns - 1; ++i)
                for (int j = 0; j < nt; ++j) {
                    int jm2 = (j + nt - 2) % nt, jm1 = (j + nt - 1) % nt;
                    int jp1 = (j + 1) % nt, jp2 = (j + 2) % nt;
                    double d4 = scratch[f.idx(i, jm2)] - 4.0 * scratch[f.idx(i, jm1)] +
                                6.0 * scratch[f.idx(i, j)] -
                                4.0 * scratch[f.idx(i, jp1)] + scratch[f.idx(i, jp2)];
                    (*X)[f.idx(i, j)] -= cd * d4;
                }
        }
    }
}

}  // namespace

void MarchConfig::validate() const {
    if (!(epsilon >= 0.0)) throw std::domain_error("epsilon must be nonnegative");
    if (!(z_start > 0.0) || !(z_end > z_start))
        throw std::domain_error("need 0 < z_start < z_end");
    if (n_sigma < 16) throw std::domain_error("n_sigma must be at least 16");
    if (!(n_theta == 1 || (n_theta >= 8 && n_theta % 2 == 0)))
        throw std::domain_error("n_theta must be 1 or an even number >= 8");
    if (!(cfl > 0.0) || !(cfl <= 0.9))
        throw std::domain_error("cfl must lie in (0, 0.9]");
    if (!(mu < -1.0)) throw std::domain_error("mu must be < -1");
    if (!(support_lo >= 0.0) || !(support_hi <= 1.0) || !(support_lo < support_hi))
        throw std::domain_error("bump support must satisfy 0 <= lo < hi <= 1");
    if (!(dissipation >= 0.0) || !(dissipation < 1.0 / 16.0))
        throw std::domain_error("dissipation coefficient must lie in [0, 1/16)");
    if (record_stride < 1) throw std::domain_error("record_stride must be >= 1");
}

double PerturbationField::sup_xi() const {
    double m = 0.0;
    for (int j = 0; j < n_theta; ++j) m = std::max(m, std::abs(xi(j)));
    return m;
}

BackgroundSolution with_extension(const BackgroundSolution& bg, double tau) {
    if (tau <= bg.tau_table) return bg;
    SolveOptions opt;
    opt.extension = tau;
    return shoot_attached_shock(bg.b0, bg.gas, bg.fs, opt);
}

void apply_cone_closure(PerturbationField& f, const BackgroundSolution& bg) {
    // Outgoing characteristic combination at the wall is u + lambda2 p; the
    // incoming one is replaced by the wall condition p = b0 u.
    const double b0 = f.cone_slope;
    auto lams = characteristic_slopes(bg.table.front(), bg.gas);
    const double l2 = lams.second;
    for (int j = 0; j < f.n_theta; ++j) {
        const int q = f.idx(0, j);
        const double out = f.u[q] + l2 * f.p[q];
        f.u[q] = out / (1.0 + l2 * b0);
        f.p[q] = b0 * f.u[q];
    }
}

double apply_shock_closure(PerturbationField& f, const BackgroundSolution& bg,
                           const MarchConfig& cfg) {
    const int ns = f.n_sigma, nt = f.n_theta;
    const double z = f.z;
    const double dt = kTwoPi / nt;
    const double s0 = bg.fit.s0;
    double worst = 0.0;

    for (int j = 0; j < nt; ++j) {
        const int q = f.idx(ns - 1, j);
        const double xi = f.chi[j] / z - s0;
        const double s_shock = s0 + xi;

        // potential continuity across the shock
        const double integral = ur_integral(bg, xi);
        f.phi[q] = -z * integral;

        // The lambda2 family leaves through the shock; its Riemann
        // combination u + lambda1 p is the only interior information kept.
        // The jump relation then pins the incoming component (Newton).
        const double l1 = characteristic_slopes(bg.state_at(s_shock), bg.gas).first;
        const double out = f.u[q] + l1 * f.p[q];
        double p = f.p[q];
        for (int it = 0; it < 10; ++it) {
            double u = out - l1 * p;
            double F = rh_residual(bg, s_shock, f.chi[j], u, p, f.w[q], z);
            double dFdu, dFdp;
            rh_residual_grad(bg, s_shock, f.chi[j], u, p, f.w[q], z, &dFdu, &dFdp);
            double dR = dFdp - l1 * dFdu;
            double step = F / dR;
            p -= step;
            if (std::abs(step) <= 1e-14 * std::abs(p)) break;
        }
        f.p[q] = p;
        f.u[q] = out - l1 * p;

        // theta-tangency of the potential jump
        if (nt > 1) {
            const int jp = (j + 1) % nt, jm = (j + nt - 1) % nt;
            const double dth_chi = (f.chi[jp] - f.chi[jm]) / (2.0 * dt);
            f.w[q] = -(bg.u_r_at(s_shock) + p) * dth_chi;
        } else {
            f.w[q] = 0.0;
        }

        // Consistency between the evolved shock ray and the trace dynamics:
        // d/dz of phi on the shock should match u + p dchi/dz.
        const double dxi = (f.dchi_dz[j] - s_shock) / z;
        const double trace_rate = -integral - z * bg.u_r_at(s_shock) * dxi;
        const double direct_rate = f.u[q] + f.p[q] * f.dchi_dz[j];
        double scale = std::max(1e-300, std::abs(trace_rate) + std::abs(direct_rate) +
                                            cfg.epsilon * bg.fs.speed);
        worst = std::max(worst, std::abs(trace_rate - direct_rate) / scale);
    }
    return worst;
}

double cfl_step(const PerturbationField& f, const BackgroundSolution& bg,
                double cfl) {
    const int ns = f.n_sigma, nt = f.n_theta;
    const double z = f.z;
    const double b0 = bg.b0;
    const double ds = 1.0 / (ns - 1);
    const double dt = kTwoPi / nt;
    const double gamma = bg.gas.gamma;
    double dz = 0.2 * z;
    const int stride = std::max(1, ns / 32);
    for (int j = 0; j < nt; ++j) {
        const double wchi = f.chi[j] - b0 * z;
        for (int i = 0; i < ns; i += stride) {
            const double sigma = i * ds;
            const double r = b0 * z + sigma * wchi;
            const double s = r / z;
            const int q = f.idx(i, j);
            NodeEnv env = node_env(bg, s);
            FSet fc = closures(env, s, r, f.u[q], f.p[q], f.w[q], gamma);
            const double A = 1.0 - fc.f1;
            const double B = env.P.P1 - 0.5 * fc.f2;
            const double C = env.P.P2 - fc.f3;
            const double disc = B * B - A * C;
            if (!(A > 0.0) || !(disc > 0.0))
                throw BlowupError("hyperbolicity lost while sizing the step", z);
            const double rdot = b0 + sigma * (f.dchi_dz[j] - b0);
            const double lp = (B + std::sqrt(disc)) / A;
            const double lm = (B - std::sqrt(disc)) / A;
            double vr = std::max(std::abs(lp - rdot), std::abs(lm - rdot));
            // The theta-gradient field is carried along constant-r rays and
            // slides through the fitted grid at speed rdot.
            if (nt > 1) vr = std::max(vr, std::abs(rdot));
            if (vr > 0.0) dz = std::min(dz, wchi * ds / vr);
            if (nt > 1) {
                const double lth = std::sqrt(std::max(0.0, (env.P.P3 + fc.f4) / A));
                if (lth > 0.0) dz = std::min(dz, r * dt / lth);
            }
        }
    }
    return cfl * dz;
}

void interior_step(PerturbationField& f, const BackgroundSolution& bg, double dz,
                   const MarchConfig& cfg, const StepHooks& hooks) {
    static thread_local Workspace ws;
    const int n = f.n_sigma * f.n_theta;

    // predictor
    eval_rhs(f, bg, cfg, hooks, ws);
    PerturbationField star = f;
    star.z = f.z + dz;
    for (int q = 0; q < n; ++q) {
        star.phi[q] += dz * ws.dphi[q];
        star.u[q] += dz * ws.du[q];
        star.p[q] += dz * ws.dp[q];
        star.w[q] += dz * ws.dw[q];
    }
    for (int j = 0; j < f.n_theta; ++j) {
        star.chi[j] += dz * ws.dchi[j];
        star.dchi_dz[j] = ws.dchi[j];
    }
    if (hooks.boundary_override) {
        hooks.boundary_override(star);
    } else {
        apply_cone_closure(star, bg);
        apply_shock_closure(star, bg, cfg);
    }

    // corrector
    static thread_local Workspace ws2;
    eval_rhs(star, bg, cfg, hooks, ws2);
    f.z += dz;
    for (int q = 0; q < n; ++q) {
        f.phi[q] += 0.5 * dz * (ws.dphi[q] + ws2.dphi[q]);
        f.u[q] += 0.5 * dz * (ws.du[q] + ws2.du[q]);
        f.p[q] += 0.5 * dz * (ws.dp[q] + ws2.dp[q]);
        f.w[q] += 0.5 * dz * (ws.dw[q] + ws2.dw[q]);
    }
    for (int j = 0; j < f.n_theta; ++j) {
        f.chi[j] += 0.5 * dz * (ws.dchi[j] + ws2.dchi[j]);
        f.dchi_dz[j] = 0.5 * (ws.dchi[j] + ws2.dchi[j]);
    }
    if (hooks.boundary_override) {
        hooks.boundary_override(f);
    } else {
        apply_cone_closure(f, bg);
        apply_shock_closure(f, bg, cfg);
    }

    fourth_difference_filter(f, cfg.dissipation, ws.scratch);

    for (int q = 0; q < n; ++q)
        if (!std::isfinite(f.phi[q]) || !std::isfinite(f.u[q]) ||
            !std::isfinite(f.p[q]) || !std::isfinite(f.w[q]))
            throw BlowupError("non-finite field value after step", f.z);
}

PerturbationField init_data(const MarchConfig& cfg, const BackgroundSolution& bg) {
    cfg.validate();
    const int ns = cfg.n_sigma, nt = cfg.n_theta;
    PerturbationField f;
    f.z = cfg.z_start;
    f.n_sigma = ns;
    f.n_theta = nt;
    f.s0 = bg.fit.s0;
    f.cone_slope = bg.b0;
    f.phi.assign(ns * nt, 0.0);
    f.u.assign(ns * nt, 0.0);
    f.p.assign(ns * nt, 0.0);
    f.w.assign(ns * nt, 0.0);
    f.chi.assign(nt, bg.fit.s0 * cfg.z_start);
    f.dchi_dz.assign(nt, bg.fit.s0);
    if (cfg.epsilon == 0.0) return f;

    const double lo = cfg.support_lo, hi = cfg.support_hi;
    auto bump = [&](double sigma) {
        double t = (2.0 * sigma - lo - hi) / (hi - lo);
        if (std::abs(t) >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - t * t));
    };
    auto dbump = [&](double sigma) {
        double t = (2.0 * sigma - lo - hi) / (hi - lo);
        if (std::abs(t) >= 1.0) return 0.0;
        double om = 1.0 - t * t;
        return std::exp(1.0 - 1.0 / om) * (-2.0 * t / (om * om)) * 2.0 / (hi - lo);
    };

    double phase = cfg.theta_phase;
    double amp_jitter = 1.0;
    if (cfg.seed != 0) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> uphase(0.0, kTwoPi);
        std::uniform_real_distribution<double> uamp(0.75, 1.25);
        phase += uphase(rng);
        amp_jitter = uamp(rng);
    }
    auto theta_mode = [&](double th) {
        return (nt > 1) ? std::exp(4.0 * (std::cos(th - phase) - 1.0)) : 1.0;
    };
    auto dtheta_mode = [&](double th) {
        return (nt > 1) ? -4.0 * std::sin(th - phase) * theta_mode(th) : 0.0;
    };

    const double wchi = f.chi[0] - bg.b0 * cfg.z_start;
    const double ds = 1.0 / (ns - 1);
    const double dt = kTwoPi / nt;

    // raw phi-bump and its analytic gradient
    double max_grad = 0.0;
    for (int i = 0; i < ns; ++i)
        for (int j = 0; j < nt; ++j) {
            double sigma = i * ds, th = j * dt;
            double r = bg.b0 * cfg.z_start + sigma * wchi;
            double pv = dbump(sigma) * theta_mode(th) / wchi;
            double wv = bump(sigma) * dtheta_mode(th);
            max_grad = std::max(max_grad, std::hypot(pv, wv / r));
        }
    const double scale_phi =
        (max_grad > 0.0) ? 0.5 * cfg.epsilon * amp_jitter / max_grad : 0.0;

    double max_u = 0.0;
    for (int i = 0; i < ns; ++i)
        for (int j = 0; j < nt; ++j)
            max_u = std::max(max_u, std::abs(bump(i * ds) * theta_mode(j * dt)));
    const double scale_u = (max_u > 0.0) ? 0.5 * cfg.epsilon / max_u : 0.0;

    for (int i = 0; i < ns; ++i)
        for (int j = 0; j < nt; ++j) {
            double sigma = i * ds, th = j * dt;
            int q = f.idx(i, j);
            f.phi[q] = scale_phi * bump(sigma) * theta_mode(th);
            f.p[q] = scale_phi * dbump(sigma) * theta_mode(th) / wchi;
            f.w[q] = scale_phi * bump(sigma) * dtheta_mode(th);
            f.u[q] = scale_u * bump(sigma) * theta_mode(th);
        }

    // optional initial shock displacement, kept compatible with the
    // continuity relation through a smooth ramp near sigma = 1
    if (cfg.xi0_scale != 0.0) {
        auto ramp = [](double x) {  // C-infinity on (0,1), 0 at 0, 1 at 1
            if (x <= 0.0) return 0.0;
            if (x >= 1.0) return 1.0;
            double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
            return a / (a + b);
        };
        auto dramp = [&](double x) {
            double h = 1e-6;
            return (ramp(x + h) - ramp(x - h)) / (2.0 * h);
        };
        const double ur0 = bg.u_r_at(bg.fit.s0);
        const double xi_amp =
            cfg.xi0_scale * 0.05 * cfg.epsilon * wchi / std::max(1e-300, ur0);
        for (int j = 0; j < nt; ++j) {
            double th = j * dt;
            double xi = xi_amp * theta_mode(th);
            f.chi[j] = (bg.fit.s0 + xi) * cfg.z_start;
            double target = -cfg.z_start * ur_integral(bg, xi);
            for (int i = 0; i < ns; ++i) {
                double x = (i * ds - 0.85) / 0.15;
                int q = f.idx(i, j);
                f.phi[q] += ramp(x) * target;
                f.p[q] += dramp(x) / (0.15 * wchi) * target;
                f.w[q] += ramp(x) * (-cfg.z_start * bg.u_r_at(bg.fit.s0 + xi)) *
                          xi_amp * dtheta_mode(th);
            }
        }
    }

    apply_cone_closure(f, bg);
    apply_shock_closure(f, bg, cfg);
    return f;
}

namespace {

// Diagnostic pass over one station: slice norms, energies, second-derivative
// energy, and the shock line integrals.
struct SliceDiag {
    double sup_grad = 0.0;
    double grad_sq_integral = 0.0;   // over (r, theta)
    double grad2_sq_integral = 0.0;  // second derivatives
    double shock_grad_sq = 0.0;      // theta-line integral at sigma = 1
    double shock_phi_sq = 0.0;
    double shock_dz_sq = 0.0;
    double shock_b0_sq = 0.0;
    double shock_th_sq = 0.0;
};

SliceDiag slice_diagnostics(const PerturbationField& f, const BackgroundSolution& bg,
                            double mu1, bool with_second) {
    SliceDiag d;
    const int ns = f.n_sigma, nt = f.n_theta;
    const double z = f.z;
    const double b0 = bg.b0;
    const double ds = 1.0 / (ns - 1);
    const double dt = kTwoPi / nt;
    const double gamma = bg.gas.gamma;

    for (int j = 0; j < nt; ++j) {
        const double wchi = f.chi[j] - b0 * z;
        const int jp = (j + 1) % nt, jm = (j + nt - 1) % nt;
        const double dth_chi = (nt > 1) ? (f.chi[jp] - f.chi[jm]) / (2.0 * dt) : 0.0;
        for (int i = 0; i < ns; ++i) {
            const int q = f.idx(i, j);
            const double sigma = i * ds;
            const double r = b0 * z + sigma * wchi;
            const double wr = f.w[q] / r;
            const double g2 = f.u[q] * f.u[q] + f.p[q] * f.p[q] + wr * wr;
            d.sup_grad = std::max(d.sup_grad, std::sqrt(g2));
            double cell = (i == 0 || i == ns - 1) ? 0.5 : 1.0;
            d.grad_sq_integral += g2 * cell * wchi * ds * dt;

            if (with_second) {
                auto dsig = [&](const std::vector<double>& X) {
                    if (i == 0)
                        return (-3.0 * X[f.idx(0, j)] + 4.0 * X[f.idx(1, j)] -
                                X[f.idx(2, j)]) /
                               (2.0 * ds);
                    if (i == ns - 1)
                        return (3.0 * X[f.idx(ns - 1, j)] -
                                4.0 * X[f.idx(ns - 2, j)] + X[f.idx(ns - 3, j)]) /
                               (2.0 * ds);
                    return (X[f.idx(i + 1, j)] - X[f.idx(i - 1, j)]) / (2.0 * ds);
                };
                auto dthe = [&](const std::vector<double>& X) {
                    return (nt > 1) ? (X[f.idx(i, jp)] - X[f.idx(i, jm)]) / (2.0 * dt)
                                    : 0.0;
                };
                const double shift = sigma * dth_chi / wchi;
                const double dr_u = dsig(f.u) / wchi;
                const double dr_p = dsig(f.p) / wchi;
                const double dr_w = dsig(f.w) / wchi;
                const double dth_u = dthe(f.u) - shift * dsig(f.u);
                const double dth_p = dthe(f.p) - shift * dsig(f.p);
                const double dth_w = dthe(f.w) - shift * dsig(f.w);
                const double s = r / z;
                NodeEnv env = node_env(bg, s);
                FSet fc = closures(env, s, r, f.u[q], f.p[q], f.w[q], gamma);
                const double G =
                    ((fc.f2 - 2.0 * env.P.P1) * dr_u + (fc.f3 - env.P.P2) * dr_p +
                     (env.P.P3 + fc.f4) / (r * r) * dth_w + fc.f5 / r * dth_u +
                     fc.f6 / r * dth_p - 2.0 * env.P.P4 / r * f.u[q] -
                     2.0 * env.P.P5 / r * f.p[q] + fc.f7 / r) /
                    (1.0 - fc.f1);
                double h2 = G * G + 2.0 * dr_u * dr_u + dr_p * dr_p +
                            2.0 * (dth_u / r) * (dth_u / r) +
                            2.0 * (dth_p / r) * (dth_p / r) +
                            (dth_w / (r * r)) * (dth_w / (r * r)) * r * r;
                d.grad2_sq_integral += h2 * cell * wchi * ds * dt;
            }
        }
        // shock line integrals (flat z-theta measure, matching the trace use)
        const int q = f.idx(ns - 1, j);
        const double r = f.chi[j];
        const double wr = f.w[q] / r;
        const double b0phi = f.p[q] + mu1 * f.u[q];
        d.shock_grad_sq += (f.u[q] * f.u[q] + f.p[q] * f.p[q] + wr * wr) * dt;
        d.shock_phi_sq += f.phi[q] * f.phi[q] * dt;
        d.shock_dz_sq += f.u[q] * f.u[q] * dt;
        d.shock_b0_sq += b0phi * b0phi * dt;
        d.shock_th_sq += wr * wr * dt;
    }
    return d;
}

}  // namespace

EnergyReport run_march(const MarchConfig& cfg, const BackgroundSolution& bg_in) {
    cfg.validate();
    EnergyReport rep;
    rep.config = cfg;
    rep.b0 = bg_in.b0;

    // The simulator needs the hatted background wherever the perturbed shock
    // can roam; re-extend the table if the stored strip is too narrow.
    const double tau_needed =
        std::max({bg_in.tau_table, 64.0 * cfg.epsilon * (1.0 + bg_in.fit.s0), 1e-9});
    BackgroundSolution bg = with_extension(bg_in, tau_needed);
    rep.s0 = bg.fit.s0;

    double mu1 = 0.0;
    try {
        mu1 = shock_coefficients(bg).mu1;
    } catch (const SolverError&) {
        mu1 = 0.0;
    }

    PerturbationField f = init_data(cfg, bg);

    StationRecord cum;  // running integrals live here
    std::int64_t record_count = 0;
    auto record = [&](const PerturbationField& field, double consistency,
                      bool with_second) {
        if (cfg.dump_every > 0 && record_count % cfg.dump_every == 0) {
            char name[64];
            std::snprintf(name, sizeof name, "station_%06lld.bin",
                          static_cast<long long>(record_count));
            std::string dir = cfg.dump_dir.empty() ? "." : cfg.dump_dir;
            write_station_dump(dir + "/" + name, field);
        }
        ++record_count;
        SliceDiag d = slice_diagnostics(field, bg, mu1, with_second);
        StationRecord r = cum;
        r.z = field.z;
        r.sup_grad = d.sup_grad;
        r.sup_xi = field.sup_xi();
        r.e0 = std::pow(field.z, cfg.mu) * d.grad_sq_integral;
        r.e1 = with_second ? std::pow(field.z, 2.0 + cfg.mu) * d.grad2_sq_integral
                           : 0.0;
        r.shock_energy = std::pow(field.z, cfg.mu + 1.0) * d.shock_grad_sq;
        r.consistency = consistency;
        rep.series.push_back(r);
        rep.max_consistency = std::max(rep.max_consistency, consistency);
        rep.sup_weighted_slice_e0 =
            std::max(rep.sup_weighted_slice_e0,
                     std::pow(field.z, cfg.mu + 1.0) * d.grad_sq_integral);
        if (with_second)
            rep.sup_weighted_slice_e1 =
                std::max(rep.sup_weighted_slice_e1,
                         std::pow(field.z, cfg.mu + 3.0) * d.grad2_sq_integral);
    };

    record(f, 0.0, true);
    try {
        std::int64_t step = 0;
        while (f.z < cfg.z_end) {
            double dz = cfl_step(f, bg, cfg.cfl);
            if (f.z + dz > cfg.z_end) dz = cfg.z_end - f.z;
            if (!(dz > 1e-14 * f.z))
                throw StiffnessError("station step underflow in march");
            interior_step(f, bg, dz, cfg);
            double consistency = apply_shock_closure(f, bg, cfg);

            // accumulate running integrals with the fresh state
            SliceDiag d = slice_diagnostics(f, bg, mu1, false);
            cum.cum_interior += dz * std::pow(f.z, cfg.mu) * d.grad_sq_integral;
            cum.cum_shock_phi += dz * std::pow(f.z, cfg.mu - 1.0) * d.shock_phi_sq;
            cum.cum_shock_dz += dz * std::pow(f.z, cfg.mu + 1.0) * d.shock_dz_sq;
            cum.cum_shock_b0 += dz * std::pow(f.z, cfg.mu + 1.0) * d.shock_b0_sq;
            cum.cum_shock_th += dz * std::pow(f.z, cfg.mu + 1.0) * d.shock_th_sq;

            ++step;
            if (step % cfg.record_stride == 0 || f.z >= cfg.z_end)
                record(f, consistency, true);

            if (d.sup_grad > 1e6 * std::max(cfg.epsilon, 1e-12))
                throw BlowupError("perturbation grew beyond the stability window",
                                  f.z);
        }
        rep.steps = step;
        rep.completed = true;
    } catch (const SolverError& e) {
        rep.failure = e.what();
        rep.failure_z = f.z;
        rep.completed = false;
    }

    // decay-rate fit over the last decade of z
    if (rep.completed && cfg.epsilon > 0.0) {
        std::vector<double> zs, gs;
        for (const auto& r : rep.series)
            if (r.z >= cfg.z_end / 10.0 && r.sup_grad > 0.0) {
                zs.push_back(r.z);
                gs.push_back(r.sup_grad);
            }
        if (zs.size() >= 8) {
            LogLogFit fit = fit_loglog(zs, gs);
            rep.m0 = -fit.slope;
            rep.m0_r2 = fit.r_squared;
            rep.m0_valid = true;
        }
    }
    return rep;
}

EnergyVerdict energy_diagnostics(const EnergyReport& rep, double mu) {
    EnergyVerdict v;
    if (rep.series.empty()) return v;
    const StationRecord& last = rep.series.back();
    const double z_half = 0.5 * last.z;
    const StationRecord* half = &rep.series.front();
    for (const auto& r : rep.series)
        if (r.z <= z_half) half = &r;

    const double eps = rep.config.epsilon;
    if (eps > 0.0 && last.cum_interior > 0.0 && half->cum_interior > 0.0) {
        v.saturation_ratio = last.cum_interior / half->cum_interior;
        v.saturation_ok = v.saturation_ratio <= 1.1;
    } else {
        v.saturation_ratio = 1.0;
        v.saturation_ok = true;
    }

    double cum_shock_end = last.cum_shock_dz + last.cum_shock_th;
    double cum_shock_half = half->cum_shock_dz + half->cum_shock_th;
    v.shock_bound_const = (eps > 0.0) ? cum_shock_end / (eps * eps) : 0.0;
    v.shock_bounded = (eps <= 0.0) || (cum_shock_half <= 0.0) ||
                      (cum_shock_end / std::max(cum_shock_half, 1e-300) <= 1.15);

    const double b0 = rep.b0;
    const double o = 1.0 + b0 * b0;
    double rhs = o * o / (mu * mu) * last.cum_shock_dz +
                 20.0 * eps * (last.cum_shock_b0 + last.cum_shock_th) +
                 20.0 * eps * eps * eps * eps;
    v.hardy_trace_ratio = (rhs > 0.0) ? last.cum_shock_phi / rhs : 0.0;
    v.hardy_ok = v.hardy_trace_ratio <= 1.0 + std::max(50.0 * eps, 1e-6);

    v.pass = v.saturation_ok && v.shock_bounded && v.hardy_ok;
    return v;
}

}  // namespace conic
