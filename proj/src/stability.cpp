#include "conic/stability.hpp"

#include <algorithm>
#include <cmath>

namespace conic {

namespace {

// Hypersonic denominator factor 1 - (gamma-1)/2 b0^2 (1+b0^2); positive below
// the supersonic-in-z threshold.
double layer_factor(double b0, double gamma) {
    return 1.0 - 0.5 * (gamma - 1.0) * b0 * b0 * (1.0 + b0 * b0);
}

PointCoefficients coefficients_from_state(const ConicalState& st,
                                          const GasModel& gas) {
    const double g = gas.gamma;
    const double c2 = sound_speed_sq(gas, st.rho);
    const double W = st.u_z * st.u_z - c2;
    if (!(W > 0.0))
        throw SonicDegeneracyError("axial flow not supersonic: coefficients undefined");
    DerivativeTriple d = ode_rhs(st, gas);
    const double s = st.s;
    const double dc2 = gas.pressure_coeff * g * (g - 1.0) *
                       std::pow(st.rho, g - 2.0) * d.drho;
    const double dW = 2.0 * st.u_z * d.du_z - dc2;

    PointCoefficients p;
    p.P1 = st.u_z * st.u_r / W;
    p.P2 = (st.u_r * st.u_r - c2) / W;
    p.P3 = c2 / W;
    p.P4 = (-0.5 * (g + 1.0) * s * s * st.u_z * d.du_z +
            0.5 * (g - 1.0) * s * st.u_z * d.du_r + s * st.u_r * d.du_z +
            0.5 * (g - 1.0) * st.u_z * st.u_r) /
           W;
    p.P5 = (-0.5 * (g - 1.0) * s * s * st.u_r * d.du_z +
            0.5 * (g + 1.0) * s * st.u_r * d.du_r + s * st.u_z * d.du_z +
            0.5 * (g - 1.0) * st.u_r * st.u_r - 0.5 * c2) /
           W;
    p.dP1 = (d.du_z * st.u_r + st.u_z * d.du_r) / W - st.u_z * st.u_r * dW / (W * W);
    p.dP2 = (2.0 * st.u_r * d.du_r - dc2) / W - (st.u_r * st.u_r - c2) * dW / (W * W);
    p.dP3 = dc2 / W - c2 * dW / (W * W);
    return p;
}

// Multiplier profile a(s) = 1, b(s) = s^2 (1 + (s - b0)/b0).
struct Profile {
    double a, da, b, db;
};

Profile multiplier_profile(double s, double b0) {
    Profile p;
    p.a = 1.0;
    p.da = 0.0;
    double lin = 1.0 + (s - b0) / b0;
    p.b = s * s * lin;
    p.db = 2.0 * s * lin + s * s / b0;
    return p;
}

struct KSet {
    double K1, K2, K3, K4;
};

KSet k_functions(double s, const PointCoefficients& c, const Profile& m, double mu) {
    KSet k;
    k.K1 = (0.5 * s * s - s * c.P1) * m.da + 0.5 * m.db +
           (-0.5 * mu * s - c.P1 - s * c.dP1 + 2.0 * c.P4) * m.a;
    k.K2 = -s * c.P2 * m.da + s * m.db +
           (-c.P2 + 2.0 * c.P5 - s * c.dP2) * m.a +
           (-(mu + 1.0) + 2.0 * c.P4 / s) * m.b;
    k.K3 = -0.5 * s * s * c.P2 * m.da + (s * c.P1 - 0.5 * c.P2) * m.db +
           (0.5 * mu * s * c.P2 - 0.5 * s * s * c.dP2) * m.a +
           (-(mu + 1.0) * c.P1 + s * c.dP1 - 0.5 * c.dP2 + 2.0 * c.P5 / s) * m.b;
    k.K4 = 0.5 * s * s * c.P3 * m.da - 0.5 * c.P3 * m.db +
           (-0.5 * mu * s * c.P3 + 0.5 * s * s * c.dP3) * m.a +
           (c.P3 / s - 0.5 * c.dP3) * m.b;
    return k;
}

// Smallest eigenvalue of the (d_z, d_r) block of the boundary form N1:
// [[s a / 2, b / 2], [b / 2, b P1 - s a P2 / 2]].
double n1_lambda_min(double s, const PointCoefficients& c, const Profile& m) {
    double a11 = 0.5 * s * m.a;
    double a22 = m.b * c.P1 - 0.5 * s * m.a * c.P2;
    double tr = a11 + a22;
    double diff = a11 - a22;
    return 0.5 * (tr - std::sqrt(diff * diff + m.b * m.b));
}

}  // namespace

PointCoefficients linear_coefficients_at(const BackgroundSolution& bg, double s) {
    return coefficients_from_state(bg.state_at(s), bg.gas);
}

LinearCoefficients linear_coefficients(const BackgroundSolution& bg) {
    LinearCoefficients out;
    out.s.reserve(bg.table.size());
    for (const auto& st : bg.table) {
        PointCoefficients p = coefficients_from_state(st, bg.gas);
        out.s.push_back(st.s);
        out.P1.push_back(p.P1);
        out.P2.push_back(p.P2);
        out.P3.push_back(p.P3);
        out.P4.push_back(p.P4);
        out.P5.push_back(p.P5);
        out.dP1.push_back(p.dP1);
        out.dP2.push_back(p.dP2);
        out.dP3.push_back(p.dP3);
    }
    return out;
}

ShockCoefficients shock_coefficients(const BackgroundSolution& bg) {
    const ConicalState& st = bg.fit.post;
    const GasModel& gas = bg.gas;
    const double q0 = bg.fs.speed;
    const double rho0 = bg.fs.density;
    const double c2 = sound_speed_sq(gas, st.rho);
    DerivativeTriple d = ode_rhs(st, gas);

    const double flux = st.u_r * st.u_r + st.u_z * (st.u_z - q0);
    ShockCoefficients out;
    out.B1 = -st.rho / c2 * flux * st.u_r + 2.0 * st.rho * st.u_r;
    out.B2 = -st.rho / c2 * flux * st.u_z + 2.0 * st.rho * (st.u_z - q0) +
             (st.rho - rho0) * q0;
    out.B3 = st.rho * (2.0 * st.u_r * d.du_r + 2.0 * (st.u_z - q0) * d.du_z +
                       q0 * d.du_z) +
             d.drho * flux - rho0 * q0 * d.du_z;

    double scale = st.rho * (std::abs(st.u_r) + std::abs(st.u_z) + q0);
    if (std::abs(out.B1) < 1e-12 * scale)
        throw DivisionSafetyError("shock coefficient B1 too small to divide by");
    out.mu1 = out.B2 / out.B1;
    out.mu2 = out.B3 / out.B1;
    return out;
}

LeadingCoefficients leading_linear_coefficients(double b0, double gamma) {
    const double g = gamma;
    const double b2 = b0 * b0;
    const double o = 1.0 + b2;
    const double E = layer_factor(b0, g);
    LeadingCoefficients out;
    out.P1 = b0 / E;
    out.P2 = b2 * (0.5 * (3.0 - g) - 0.5 * (g - 1.0) * b2) / E;
    out.P3 = 0.5 * (g - 1.0) * b2 * o / E;
    out.P4 = 0.0;
    out.P5 = -0.25 * (g - 1.0) * b2 * o / E;
    out.dP1 = (-1.0 + 0.5 * (g - 3.0) * b2 - 0.5 * (g - 1.0) * b2 * b2 * b2) /
              (o * E * E);
    out.dP2 = (-2.0 * b0 + 2.0 * (g - 2.0) * b0 * b2 + 2.0 * (g - 1.0) * b0 * b2 * b2) /
              (o * E * E);
    out.dP3 = -(g - 1.0) * b0 * b2 / (E * E);
    return out;
}

LeadingShockCoefficients leading_shock_coefficients(double b0, const GasModel& gas,
                                                    double q0) {
    const double g = gas.gamma;
    const double o = 1.0 + b0 * b0;
    const double bq = b0 * q0;
    const double K = std::pow((g - 1.0) / (2.0 * gas.pressure_coeff * g * o),
                              1.0 / (g - 1.0));
    LeadingShockCoefficients out;
    out.B1 = 2.0 / o * K * std::pow(bq, (g + 1.0) / (g - 1.0));
    out.B2 = K * std::pow(bq, 2.0 / (g - 1.0)) * q0 * (1.0 - b0 * b0) / o;
    out.B3 = -K / (b0 * o * o) * std::pow(bq, 2.0 * g / (g - 1.0));
    out.mu1 = (1.0 - b0 * b0) / (2.0 * b0);
    out.mu2 = -q0 / (2.0 * o);
    return out;
}

MultiplierReport multiplier_eval(const BackgroundSolution& bg, double mu) {
    if (!(mu < -1.0))
        throw std::domain_error("weight exponent must satisfy mu < -1");
    MultiplierReport rep;
    rep.mu = mu;
    const double b0 = bg.b0;
    const double s0 = bg.fit.s0;
    const double g = bg.gas.gamma;

    // Evaluation nodes: the table restricted to [b0, s0] plus 4x-refined
    // spot checks near both endpoints.
    std::vector<double> nodes;
    for (const auto& st : bg.table) {
        if (st.s > s0 * (1.0 + 1e-14)) break;
        nodes.push_back(st.s);
    }
    auto refine = [&](std::size_t i0, std::size_t i1) {
        std::vector<double> extra;
        for (std::size_t i = i0; i + 1 <= i1 && i + 1 < nodes.size(); ++i)
            for (int k = 1; k < 4; ++k)
                extra.push_back(nodes[i] + 0.25 * k * (nodes[i + 1] - nodes[i]));
        return extra;
    };
    std::size_t n0 = nodes.size();
    auto lo_extra = refine(0, std::min<std::size_t>(16, n0 - 1));
    auto hi_extra = refine(n0 > 17 ? n0 - 17 : 0, n0 - 1);
    nodes.insert(nodes.end(), lo_extra.begin(), lo_extra.end());
    nodes.insert(nodes.end(), hi_extra.begin(), hi_extra.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    rep.k_signs_ok = true;
    rep.lambda_window_ok = true;
    rep.lambda_min_positive = true;
    for (double s : nodes) {
        PointCoefficients c = linear_coefficients_at(bg, s);
        Profile m = multiplier_profile(s, b0);
        KSet k = k_functions(s, c, m, mu);
        double disc = k.K2 * k.K2 - 4.0 * k.K1 * k.K3;
        double lmin = n1_lambda_min(s, c, m);
        rep.s.push_back(s);
        rep.a.push_back(m.a);
        rep.b.push_back(m.b);
        rep.K1.push_back(k.K1);
        rep.K2.push_back(k.K2);
        rep.K3.push_back(k.K3);
        rep.K4.push_back(k.K4);
        rep.discriminant.push_back(disc);
        rep.lambda_min.push_back(lmin);
        if (!(k.K1 > 0.0) || !(k.K4 > 0.0) || !(disc < 0.0)) rep.k_signs_ok = false;
        if (!(lmin > 0.0)) rep.lambda_min_positive = false;

        ConicalState st = bg.state_at(s);
        auto l = characteristic_slopes(st, bg.gas);
        double ratio = m.b / (s * m.a);
        if (!(l.first < ratio && ratio < l.second)) rep.lambda_window_ok = false;
    }

    // Cone cancellation. Tangency is exact for the continuous problem, so it
    // is imposed on the boundary state here; the check then isolates the
    // b(b0) = b0^2 a(b0) structure of the forms.
    {
        ConicalState st = bg.table.front();
        st.u_r = b0 * st.u_z;
        double c2 = sound_speed_sq(bg.gas, st.rho);
        double W = st.u_z * st.u_z - c2;
        double P1 = st.u_z * st.u_r / W;
        double P2 = (st.u_r * st.u_r - c2) / W;
        double P3 = c2 / W;
        Profile m = multiplier_profile(b0, b0);
        double a = m.a, b = m.b;
        double t1 = 0.5 * a * b0 * b0;
        double t2 = b0 * b0 * b;
        double t3 = b0 * b0 * b0 * b * P1;
        double t4 = -0.5 * b0 * b0 * b0 * b0 * a * P2;
        double t5 = -b0 * a * P1;
        double t6 = 0.5 * b;
        double t7 = -b0 * b0 * a * P2;
        double t8 = -0.5 * b0 * b0 * b * P2;
        double num = t1 + t2 + t3 + t4 + t5 + t6 + t7 + t8;
        double scale = std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4) +
                       std::abs(t5) + std::abs(t6) + std::abs(t7) + std::abs(t8);
        rep.cone_residual_zz = std::abs(num) / scale;
        double tt = 0.5 * P3 * (b0 * b0 * a - b);
        rep.cone_residual_tt = std::abs(tt) / (0.5 * P3 * (b0 * b0 * a + std::abs(b)));
    }

    // Shock-side quadratic forms at epsilon = 0.
    {
        PointCoefficients c = linear_coefficients_at(bg, s0);
        Profile m = multiplier_profile(s0, b0);
        ShockCoefficients sc = shock_coefficients(bg);
        rep.beta0 = s0 * c.P1 * m.a - 0.5 * s0 * s0 * m.a - 0.5 * m.b;
        rep.beta1 = s0 * c.P2 * m.a - s0 * m.b;
        rep.beta2 = 0.5 * c.P2 * m.b - s0 * c.P1 * m.b + 0.5 * s0 * s0 * c.P2 * m.a;
        rep.beta3 = 0.5 * c.P3 * (m.b - s0 * s0 * m.a);
        rep.Q1 = rep.beta0 - sc.mu1 * rep.beta1 + rep.beta2 * sc.mu1 * sc.mu1;
        rep.Q2 = -rep.beta2;
        rep.Q0 = rep.Q1 * (1.0 - 1.0 / (mu * mu));
        const double o = 1.0 + b0 * b0;
        const double E = layer_factor(b0, g);
        rep.C3_closed = (g - 1.0) * b0 * b0 * o * o * o / (8.0 * E);
        rep.C6_closed = (g - 1.0) * b0 * b0 * b0 * b0 * o / (2.0 * E);
        rep.identity_gap = std::abs(rep.Q2 * o * o / (4.0 * b0 * b0 * rep.Q1) - 1.0);
    }

    rep.verdict = rep.k_signs_ok && rep.lambda_window_ok && rep.lambda_min_positive &&
                  rep.Q0 > 0.0 && rep.cone_residual_zz <= 1e-12 &&
                  rep.cone_residual_tt <= 1e-12;
    return rep;
}

}  // namespace conic
