#include "conic/background.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace conic {

namespace {

// Upper end of the shock-slope bracket (slope of a ray at 0.99 * 90 degrees).
double slope_cap() { return std::tan(0.99 * 0.5 * M_PI); }

// Smallest admissible shock slope: the Mach-cone slope c0/sqrt(q0^2 - c0^2).
double mach_cone_slope(const Freestream& fs) {
    return fs.sound_speed /
           std::sqrt(fs.speed * fs.speed - fs.sound_speed * fs.sound_speed);
}

struct Triple {
    double rho, u_r, u_z;
};

Triple rhs_raw(double s, const Triple& y, const GasModel& gas) {
    if (!(y.rho > 0.0))
        throw SonicDegeneracyError("density collapsed during conical integration");
    ConicalState st{s, y.rho, y.u_r, y.u_z};
    DerivativeTriple d = ode_rhs(st, gas);
    return {d.drho, d.du_r, d.du_z};
}

Triple axpy(const Triple& y, double a, const Triple& d) {
    return {y.rho + a * d.rho, y.u_r + a * d.u_r, y.u_z + a * d.u_z};
}

double denom_of(double s, const Triple& y, const GasModel& gas) {
    if (!(y.rho > 0.0))
        throw SonicDegeneracyError("density collapsed during conical integration");
    return ode_denominator({s, y.rho, y.u_r, y.u_z}, gas);
}

// One classical RK4 step; throws if the denominator degenerates mid-step.
Triple rk4_step(double s, const Triple& y, double h, const GasModel& gas) {
    Triple k1 = rhs_raw(s, y, gas);
    Triple k2 = rhs_raw(s + 0.5 * h, axpy(y, 0.5 * h, k1), gas);
    Triple k3 = rhs_raw(s + 0.5 * h, axpy(y, 0.5 * h, k2), gas);
    Triple k4 = rhs_raw(s + h, axpy(y, h, k3), gas);
    return {y.rho + h / 6.0 * (k1.rho + 2 * k2.rho + 2 * k3.rho + k4.rho),
            y.u_r + h / 6.0 * (k1.u_r + 2 * k2.u_r + 2 * k3.u_r + k4.u_r),
            y.u_z + h / 6.0 * (k1.u_z + 2 * k2.u_z + 2 * k3.u_z + k4.u_z)};
}

// Cash-Karp 4(5) embedded pair, used as the alternative integrator.
Triple rk45_step(double s, const Triple& y, double h, const GasModel& gas,
                 double* err_out) {
    static const double a2 = 0.2, a3 = 0.3, a4 = 0.6, a5 = 1.0, a6 = 0.875;
    static const double b21 = 0.2;
    static const double b31 = 3.0 / 40, b32 = 9.0 / 40;
    static const double b41 = 0.3, b42 = -0.9, b43 = 1.2;
    static const double b51 = -11.0 / 54, b52 = 2.5, b53 = -70.0 / 27, b54 = 35.0 / 27;
    static const double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                        b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
    static const double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594,
                        c6 = 512.0 / 1771;
    static const double d1 = c1 - 2825.0 / 27648, d3 = c3 - 18575.0 / 48384,
                        d4 = c4 - 13525.0 / 55296, d5 = -277.0 / 14336,
                        d6 = c6 - 0.25;

    Triple k1 = rhs_raw(s, y, gas);
    Triple k2 = rhs_raw(s + a2 * h, axpy(y, b21 * h, k1), gas);
    Triple y3 = {y.rho + h * (b31 * k1.rho + b32 * k2.rho),
                 y.u_r + h * (b31 * k1.u_r + b32 * k2.u_r),
                 y.u_z + h * (b31 * k1.u_z + b32 * k2.u_z)};
    Triple k3 = rhs_raw(s + a3 * h, y3, gas);
    Triple y4 = {y.rho + h * (b41 * k1.rho + b42 * k2.rho + b43 * k3.rho),
                 y.u_r + h * (b41 * k1.u_r + b42 * k2.u_r + b43 * k3.u_r),
                 y.u_z + h * (b41 * k1.u_z + b42 * k2.u_z + b43 * k3.u_z)};
    Triple k4 = rhs_raw(s + a4 * h, y4, gas);
    Triple y5 = {
        y.rho + h * (b51 * k1.rho + b52 * k2.rho + b53 * k3.rho + b54 * k4.rho),
        y.u_r + h * (b51 * k1.u_r + b52 * k2.u_r + b53 * k3.u_r + b54 * k4.u_r),
        y.u_z + h * (b51 * k1.u_z + b52 * k2.u_z + b53 * k3.u_z + b54 * k4.u_z)};
    Triple k5 = rhs_raw(s + a5 * h, y5, gas);
    Triple y6 = {y.rho + h * (b61 * k1.rho + b62 * k2.rho + b63 * k3.rho +
                              b64 * k4.rho + b65 * k5.rho),
                 y.u_r + h * (b61 * k1.u_r + b62 * k2.u_r + b63 * k3.u_r +
                              b64 * k4.u_r + b65 * k5.u_r),
                 y.u_z + h * (b61 * k1.u_z + b62 * k2.u_z + b63 * k3.u_z +
                              b64 * k4.u_z + b65 * k5.u_z)};
    Triple k6 = rhs_raw(s + a6 * h, y6, gas);

    Triple out = {
        y.rho + h * (c1 * k1.rho + c3 * k3.rho + c4 * k4.rho + c6 * k6.rho),
        y.u_r + h * (c1 * k1.u_r + c3 * k3.u_r + c4 * k4.u_r + c6 * k6.u_r),
        y.u_z + h * (c1 * k1.u_z + c3 * k3.u_z + c4 * k4.u_z + c6 * k6.u_z)};
    if (err_out) {
        double er = h * (d1 * k1.rho + d3 * k3.rho + d4 * k4.rho + d5 * k5.rho +
                         d6 * k6.rho);
        double eu = h * (d1 * k1.u_r + d3 * k3.u_r + d4 * k4.u_r + d5 * k5.u_r +
                         d6 * k6.u_r);
        double ez = h * (d1 * k1.u_z + d3 * k3.u_z + d4 * k4.u_z + d5 * k5.u_z +
                         d6 * k6.u_z);
        double scale = std::abs(y.u_z) + std::abs(y.u_r) + std::abs(y.rho) + 1.0;
        *err_out = (std::abs(er) + std::abs(eu) + std::abs(ez)) / scale;
    }
    return out;
}

// Advance from s to s+h keeping the denominator positive, halving on demand.
Triple guarded_advance(double s, const Triple& y, double h, const GasModel& gas,
                       double denom_ref, const IntegrateOptions& opt) {
    int parts = 1;
    for (int attempt = 0; attempt < 44; ++attempt) {
        bool ok = true;
        Triple cur = y;
        double sc = s;
        double hh = h / parts;
        for (int i = 0; i < parts; ++i) {
            double dcur = denom_of(sc, cur, gas);
            if (!(dcur > 0.0))
                throw SonicDegeneracyError("ODE denominator reached zero at s=" +
                                           std::to_string(sc));
            if (dcur < opt.denominator_floor * denom_ref && parts < (1 << 22)) {
                ok = false;  // refine near degeneracy
                break;
            }
            if (opt.kind == IntegratorKind::rk4) {
                cur = rk4_step(sc, cur, hh, gas);
            } else {
                double err = 0.0;
                cur = rk45_step(sc, cur, hh, gas, &err);
                if (err > opt.rk45_tol) {
                    ok = false;
                    break;
                }
            }
            sc += hh;
            if (!std::isfinite(cur.rho) || !std::isfinite(cur.u_r) ||
                !std::isfinite(cur.u_z)) {
                ok = false;
                break;
            }
        }
        if (ok) return cur;
        parts *= 2;
        if (parts >= (1 << 22))
            throw StiffnessError("step underflow integrating conical system");
    }
    throw StiffnessError("step underflow integrating conical system");
}

}  // namespace

double ode_denominator(const ConicalState& st, const GasModel& gas) {
    double c2 = sound_speed_sq(gas, st.rho);
    double sw = st.s * st.u_z - st.u_r;
    return (1.0 + st.s * st.s) * c2 - sw * sw;
}

DerivativeTriple ode_rhs(const ConicalState& st, const GasModel& gas) {
    if (!(st.s > 0.0)) throw std::domain_error("similarity coordinate must be positive");
    double c2 = sound_speed_sq(gas, st.rho);
    double sw = st.s * st.u_z - st.u_r;
    double den = (1.0 + st.s * st.s) * c2 - sw * sw;
    if (!(den > 0.0))
        throw SonicDegeneracyError("conical system denominator nonpositive at s=" +
                                   std::to_string(st.s));
    DerivativeTriple d;
    d.drho = -st.rho * st.u_r * sw / (st.s * den);
    d.du_r = -c2 * st.u_r / (st.s * den);
    d.du_z = c2 * st.u_r / den;
    return d;
}

std::pair<double, double> characteristic_slopes(const ConicalState& st,
                                                const GasModel& gas) {
    double c2 = sound_speed_sq(gas, st.rho);
    double q2 = st.u_r * st.u_r + st.u_z * st.u_z;
    double det = q2 - c2;
    if (!(det > 0.0)) throw SonicDegeneracyError("subsonic state has no real characteristics");
    double w = st.u_z * st.u_z - c2;
    if (w == 0.0) throw SonicDegeneracyError("sonic axial flow in characteristic slopes");
    double root = std::sqrt(c2 * det);
    double l1 = (st.u_r * st.u_z - root) / w;
    double l2 = (st.u_r * st.u_z + root) / w;
    if (l1 > l2) std::swap(l1, l2);
    return {l1, l2};
}

double solve_alpha(double s0, const GasModel& gas, const Freestream& fs) {
    const double g = gas.gamma;
    const double s2 = s0 * s0;
    const double rhs = (g - 1.0) * s2 * fs.speed * fs.speed /
                       (2.0 * gas.pressure_coeff * g * (1.0 + s2) *
                        std::pow(fs.density, g - 1.0));
    // lim_{alpha->1+} of the left side is (gamma-1)/2: below it there is no
    // compressive root (the shock-slope entropy condition fails).
    if (!(rhs > 0.5 * (g - 1.0)))
        throw EntropyError("no compressive density-ratio root: shock too weak");

    auto lhs = [g](double a) {
        return a * a * (std::pow(a, g - 1.0) - 1.0) / (a * a - 1.0);
    };

    double lo = 1.0 + 1e-9, hi = 2.0;
    while (lhs(hi) < rhs) {
        hi *= 4.0;
        if (hi > 1e30) throw SolverError("density ratio bracket blew up");
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (lhs(mid) < rhs)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12 * hi) break;
    }
    // Newton polish on alpha^(gamma-1) = rhs (1 + 1/rhs - 1/alpha^2) so the
    // jump relations later hold to machine precision.
    double a = 0.5 * (lo + hi);
    for (int it = 0; it < 60; ++it) {
        double f = lhs(a) - rhs;
        double h = 1e-7 * a;
        double df = (lhs(a + h) - lhs(a - h)) / (2.0 * h);
        double step = f / df;
        double next = a - step;
        if (!(next > 1.0)) next = 0.5 * (a + 1.0);
        if (std::abs(next - a) <= 4.0 * std::numeric_limits<double>::epsilon() * a) {
            a = next;
            break;
        }
        a = next;
    }
    return a;
}

ConicalState post_shock_state(double s0, const GasModel& gas, const Freestream& fs) {
    double alpha = solve_alpha(s0, gas, fs);
    double s2 = s0 * s0;
    ConicalState st;
    st.s = s0;
    st.rho = alpha * fs.density;
    st.u_z = fs.speed * (1.0 + s2 / alpha) / (1.0 + s2);
    st.u_r = s0 * fs.speed * (1.0 - 1.0 / alpha) / (1.0 + s2);
    return st;
}

std::vector<ConicalState> integrate_inward(const ConicalState& start, double s_end,
                                           const GasModel& gas,
                                           const IntegrateOptions& opt) {
    if (opt.nodes < 2) throw std::domain_error("need at least two output nodes");
    if (start.s == s_end) return {start};

    // Geometric node spacing, finest near s_end.
    const int n = opt.nodes;
    std::vector<double> grid(n);
    const double k = std::log(std::max(1.0 + 1e-12, opt.grid_stretch));
    for (int i = 0; i < n; ++i) {
        double t = double(i) / (n - 1);  // 0 at start, 1 at s_end
        double frac = (std::exp(k * (1.0 - t)) - 1.0) / (std::exp(k) - 1.0);
        grid[i] = s_end + (start.s - s_end) * frac;
    }
    grid.front() = start.s;
    grid.back() = s_end;

    double denom_ref = ode_denominator(start, gas);
    if (!(denom_ref > 0.0))
        throw SonicDegeneracyError("denominator nonpositive at integration start");

    std::vector<ConicalState> out;
    out.reserve(n);
    out.push_back(start);
    Triple y{start.rho, start.u_r, start.u_z};
    for (int i = 1; i < n; ++i) {
        y = guarded_advance(grid[i - 1], y, grid[i] - grid[i - 1], gas, denom_ref, opt);
        out.push_back({grid[i], y.rho, y.u_r, y.u_z});
    }
    return out;
}

double tangency_residual(double s0, double b0, const GasModel& gas,
                         const Freestream& fs, const IntegrateOptions& opt) {
    ConicalState post = post_shock_state(s0, gas, fs);
    auto table = integrate_inward(post, b0, gas, opt);
    const ConicalState& cone = table.back();
    return cone.u_r - b0 * cone.u_z;
}

double supersonic_z_threshold(double gamma) {
    return std::sqrt(0.5 * (std::sqrt((gamma + 7.0) / (gamma - 1.0)) - 1.0));
}

void BackgroundSolution::build_interpolants() {
    std::vector<double> s, r, ur, uz;
    s.reserve(table.size());
    for (const auto& st : table) {
        s.push_back(st.s);
        r.push_back(st.rho);
        ur.push_back(st.u_r);
        uz.push_back(st.u_z);
    }
    rho_itp_ = Pchip(s, r);
    u_r_itp_ = Pchip(s, ur);
    u_z_itp_ = Pchip(s, uz);
}

double BackgroundSolution::clamp_s(double s) const {
    return std::min(std::max(s, rho_itp_.x_front()), rho_itp_.x_back());
}

ConicalState BackgroundSolution::state_at(double s) const {
    double sc = clamp_s(s);
    return {sc, rho_itp_(sc), u_r_itp_(sc), u_z_itp_(sc)};
}

double BackgroundSolution::tangency_error() const {
    const ConicalState& cone = table.front();
    return std::abs(cone.u_r - b0 * cone.u_z);
}

double BackgroundSolution::max_bernoulli_drift() const {
    double drift = 0.0;
    for (const auto& st : table) {
        double q2 = st.u_r * st.u_r + st.u_z * st.u_z;
        drift = std::max(drift,
                         std::abs(0.5 * q2 + enthalpy(gas, st.rho) - fs.bernoulli));
    }
    return drift;
}

BackgroundSolution shoot_attached_shock(double b0, const GasModel& gas,
                                        const Freestream& fs,
                                        const SolveOptions& opt) {
    gas.validate();
    if (!(b0 > 0.0)) throw std::domain_error("cone slope must be positive");
    if (!(fs.speed > fs.sound_speed))
        throw std::domain_error("upstream flow must be supersonic");

    const double s_lo = mach_cone_slope(fs) * (1.0 + 1e-9);
    const double s_hi = slope_cap();
    if (!(b0 < s_hi)) throw ShockDetachedError("cone slope beyond admissible range");

    auto residual = [&](double s0) {
        return tangency_residual(s0, b0, gas, fs, opt.integ);
    };

    // Scan for the first sign change; the weak branch is the smallest root.
    // The residual at s0 = b0 is u_r+ - b0 u_z+ = -b0 q0 / alpha < 0, so the
    // bracket may start at the cone slope itself when that is admissible.
    double lo = std::max(s_lo, b0);
    double r_lo;
    try {
        r_lo = residual(lo);
    } catch (const SolverError&) {
        throw ShockDetachedError("tangency residual undefined at bracket start");
    }
    if (!(r_lo < 0.0)) {
        // Analytically negative; a nonnegative value can only be roundoff
        // from a shock layer thinner than double resolution.
        double round_scale = 64.0 * std::numeric_limits<double>::epsilon() *
                             fs.speed * (1.0 + b0);
        if (lo == b0 && std::abs(r_lo) <= round_scale)
            r_lo = -round_scale;
        else
            throw ShockDetachedError("tangency residual does not start negative");
    }

    double hi = lo, r_hi = r_lo;
    bool bracketed = false;
    const double ratio = std::pow(s_hi / lo, 1.0 / opt.scan_points);
    for (int i = 1; i <= opt.scan_points; ++i) {
        double cand = lo * std::pow(ratio, i);
        double rc;
        try {
            rc = residual(cand);
        } catch (const SolverError&) {
            break;  // integration degenerated: past any attached branch
        }
        if (rc >= 0.0) {
            hi = cand;
            r_hi = rc;
            bracketed = true;
            break;
        }
        lo = cand;
        r_lo = rc;
    }
    if (!bracketed)
        throw ShockDetachedError("no attached shock: tangency residual keeps one sign "
                                 "(cone slope above the critical angle)");

    // Bisection with secant acceleration, then polish until the bracket is
    // machine-tight; the residual slope is O(q0), so s0 resolves to ~eps.
    for (int it = 0; it < 200; ++it) {
        double sec = hi - r_hi * (hi - lo) / (r_hi - r_lo);
        double mid = (sec > lo && sec < hi) ? sec : 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double rm = residual(mid);
        if (rm < 0.0) {
            lo = mid;
            r_lo = rm;
        } else {
            hi = mid;
            r_hi = rm;
        }
        if (hi - lo <= std::min(opt.s0_tol, 4.0 * std::numeric_limits<double>::epsilon() * hi))
            break;
    }
    double s0 = (std::abs(r_lo) < std::abs(r_hi)) ? lo : hi;

    BackgroundSolution bg;
    bg.gas = gas;
    bg.fs = fs;
    bg.b0 = b0;
    bg.fit.s0 = s0;
    bg.fit.alpha = solve_alpha(s0, gas, fs);
    bg.fit.post = post_shock_state(s0, gas, fs);
    if (!(bg.fit.post.u_z * bg.fit.post.u_z -
              sound_speed_sq(gas, bg.fit.post.rho) >
          0.0))
        throw StrongBranchError("post-shock flow subsonic in z: strong branch rejected");
    auto lams = characteristic_slopes(bg.fit.post, gas);
    bg.fit.lambda1 = lams.first;
    bg.fit.lambda2 = lams.second;
    bg.fit.entropy_ok =
        (bg.fit.lambda1 < s0) && (s0 < bg.fit.lambda2) && (mach_cone_slope(fs) < s0);
    if (!bg.fit.entropy_ok)
        throw EntropyError("Lax entropy conditions fail at the fitted shock");

    // Inward table, then the outward extension past the shock.
    auto inward = integrate_inward(bg.fit.post, b0, gas, opt.integ);
    bg.tau0 = std::pow(fs.speed, -4.0 / (gas.gamma - 1.0)) * (s0 - b0);
    bg.tau_table = (opt.extension > 0.0) ? opt.extension : bg.tau0;
    // Keep the tabulated extension grid-representable.
    const double eps = std::numeric_limits<double>::epsilon();
    bg.tau_table = std::max(bg.tau_table, 1024.0 * eps * s0);

    IntegrateOptions ext_opt = opt.integ;
    int max_ext_nodes = std::max(16, opt.integ.nodes / 8);
    int sep_nodes = static_cast<int>(bg.tau_table / (32.0 * eps * s0));
    ext_opt.nodes = std::clamp(sep_nodes, 4, max_ext_nodes);
    ext_opt.grid_stretch = 1.0 + 1e-9;
    auto outward = integrate_inward(bg.fit.post, s0 + bg.tau_table, gas, ext_opt);

    bg.table.clear();  // ascending: b0 .. s0 .. s0 + tau_table, deduplicated
    for (auto it = inward.rbegin(); it != inward.rend(); ++it)
        if (bg.table.empty() || it->s > bg.table.back().s) bg.table.push_back(*it);
    for (std::size_t i = 1; i < outward.size(); ++i)
        if (outward[i].s > bg.table.back().s) bg.table.push_back(outward[i]);

    // Branch check: the weak supersonic branch has u_z^2 > c^2 everywhere.
    for (const auto& st : bg.table) {
        if (!(st.u_z * st.u_z - sound_speed_sq(gas, st.rho) > 0.0))
            throw StrongBranchError("post-shock flow subsonic in z: strong branch rejected");
    }

    bg.build_interpolants();
    return bg;
}

PotentialSample potential_eval(const BackgroundSolution& bg, double z, double r) {
    if (!(z > 0.0)) throw std::domain_error("potential defined for z > 0");
    double s = r / z;
    const double pad = 1e-12 * std::max(1.0, bg.s_max());
    if (s < bg.s_min() - pad || s > bg.s_max() + pad)
        throw std::domain_error("(z, r) outside the tabulated conical annulus");
    ConicalState st = bg.state_at(s);
    PotentialSample out;
    out.phi = z * (st.u_z + s * st.u_r);
    out.dphi_dz = st.u_z;
    out.dphi_dr = st.u_r;
    return out;
}

namespace {

// Integrate inward from the post-shock state until s u_z - u_r crosses zero,
// bisecting the crossing node. Returns cone_angle = 0 when the flow never
// turns tangent (or the integration degenerates first).
AppleSample cone_tangency(double s0, const GasModel& gas, const Freestream& fs,
                          int nodes) {
    AppleSample sample;
    sample.s0 = s0;
    ConicalState cur;
    try {
        cur = post_shock_state(s0, gas, fs);
    } catch (const SolverError&) {
        return sample;
    }
    const double floor = std::max(1e-6, 1e-4 * s0);
    const double shrink = std::pow(floor / s0, 1.0 / nodes);
    IntegrateOptions seg_opt;
    seg_opt.nodes = 4;
    seg_opt.grid_stretch = 1.0 + 1e-9;
    double g_cur = cur.s * cur.u_z - cur.u_r;
    for (int j = 0; j < nodes && cur.s > floor; ++j) {
        double s_next = cur.s * shrink;
        ConicalState next;
        try {
            next = integrate_inward(cur, s_next, gas, seg_opt).back();
        } catch (const SolverError&) {
            return sample;  // degenerate below this node; no tangency found
        }
        double g_next = next.s * next.u_z - next.u_r;
        if (g_next <= 0.0 && g_cur > 0.0) {
            double a = next.s, b = cur.s;
            for (int k = 0; k < 60; ++k) {
                double mid = 0.5 * (a + b);
                ConicalState st = integrate_inward(cur, mid, gas, seg_opt).back();
                if (st.s * st.u_z - st.u_r > 0.0)
                    b = mid;
                else
                    a = mid;
                if (b - a < 1e-13 * b) break;
            }
            ConicalState st = integrate_inward(cur, 0.5 * (a + b), gas, seg_opt).back();
            sample.cone_angle = st.s;
            sample.u_r_cone = st.u_r;
            sample.u_z_cone = st.u_z;
            return sample;
        }
        cur = next;
        g_cur = g_next;
    }
    return sample;
}

}  // namespace

std::vector<AppleSample> apple_curve(const GasModel& gas, const Freestream& fs,
                                     int n) {
    if (n < 2) throw std::domain_error("apple curve needs at least two samples");
    const double s_lo = mach_cone_slope(fs) * (1.0 + 1e-6);
    const double s_hi = slope_cap();
    std::vector<AppleSample> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        double s0 = s_lo * std::pow(s_hi / s_lo, double(i) / (n - 1));
        out.push_back(cone_tangency(s0, gas, fs, 1200));
    }
    return out;
}

double critical_angle(const GasModel& gas, const Freestream& fs) {
    auto samples = apple_curve(gas, fs, 64);
    std::size_t best = 0;
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (samples[i].cone_angle > samples[best].cone_angle) best = i;
    if (best == 0 || best + 1 == samples.size())
        throw SolverError("apple curve maximum not interior; widen the scan");

    auto cone_of = [&](double s0) {
        return cone_tangency(s0, gas, fs, 1200).cone_angle;
    };

    // Golden-section refinement of the scan maximum; never report less than
    // an already-evaluated sample.
    const double w = 0.5 * (3.0 - std::sqrt(5.0));
    double a = samples[best - 1].s0, b = samples[best + 1].s0;
    double x1 = b - w * (b - a), x2 = a + w * (b - a);
    double f1 = cone_of(x1), f2 = cone_of(x2);
    double seen = std::max({samples[best].cone_angle, f1, f2});
    for (int it = 0; it < 80; ++it) {
        if (b - a < 1e-10 * b) break;
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + w * (b - a);
            f2 = cone_of(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - w * (b - a);
            f1 = cone_of(x1);
        }
        seen = std::max({seen, f1, f2});
    }
    return seen;
}

}  // namespace conic
