#include <doctest.h>

#include <cmath>
#include <vector>

#include "conic/rate_fit.hpp"
#include "conic/stability.hpp"

using namespace conic;

namespace {

const BackgroundSolution& hypersonic() {
    static BackgroundSolution bg = [] {
        GasModel gas{1.0, 1.4};
        Freestream fs = make_freestream(gas, 4000.0, 1.0);
        return shoot_attached_shock(0.1, gas, fs);
    }();
    return bg;
}

}  // namespace

TEST_CASE("interior coefficients approach their hypersonic forms") {
    const BackgroundSolution& bg = hypersonic();
    LeadingCoefficients lead = leading_linear_coefficients(bg.b0, bg.gas.gamma);
    PointCoefficients c = linear_coefficients_at(bg, bg.b0 * 1.0000001);
    CHECK(c.P1 == doctest::Approx(lead.P1).epsilon(1e-5));
    CHECK(c.P2 == doctest::Approx(lead.P2).epsilon(1e-3));
    CHECK(c.P3 == doctest::Approx(lead.P3).epsilon(1e-3));
    CHECK(c.P5 == doctest::Approx(lead.P5).epsilon(1e-3));
    CHECK(std::abs(c.P4) < 1e-3);
    CHECK(c.dP1 == doctest::Approx(lead.dP1).epsilon(1e-3));
    CHECK(c.dP2 == doctest::Approx(lead.dP2).epsilon(1e-3));
    CHECK(c.dP3 == doctest::Approx(lead.dP3).epsilon(1e-3));
    CHECK(c.P3 > 0.0);
    CHECK(c.P1 > 0.0);
}

TEST_CASE("analytic coefficient derivatives match finite differences") {
    // Desk-scale layer: wide enough in s for central differences of the
    // tabulated coefficients to resolve the derivatives.
    GasModel gas{1.0, 1.4};
    Freestream fs = make_freestream(gas, 50.0, 1.0);
    BackgroundSolution bg = shoot_attached_shock(0.1, gas, fs);
    double s0 = bg.fit.s0, b0 = bg.b0;
    double h = 0.02 * (s0 - b0);
    for (double frac : {0.25, 0.5, 0.75}) {
        double s = b0 + frac * (s0 - b0);
        PointCoefficients c = linear_coefficients_at(bg, s);
        PointCoefficients cp = linear_coefficients_at(bg, s + h);
        PointCoefficients cm = linear_coefficients_at(bg, s - h);
        CHECK((cp.P1 - cm.P1) / (2.0 * h) == doctest::Approx(c.dP1).epsilon(5e-3));
        CHECK((cp.P2 - cm.P2) / (2.0 * h) == doctest::Approx(c.dP2).epsilon(5e-3));
        CHECK((cp.P3 - cm.P3) / (2.0 * h) == doctest::Approx(c.dP3).epsilon(5e-3));
    }
}

TEST_CASE("nodewise tables agree with the pointwise evaluator") {
    const BackgroundSolution& bg = hypersonic();
    LinearCoefficients tab = linear_coefficients(bg);
    REQUIRE(tab.s.size() == bg.table.size());
    std::size_t mid = tab.s.size() / 2;
    PointCoefficients c = linear_coefficients_at(bg, tab.s[mid]);
    CHECK(tab.P1[mid] == doctest::Approx(c.P1).epsilon(1e-12));
    CHECK(tab.P5[mid] == doctest::Approx(c.P5).epsilon(1e-12));
}

TEST_CASE("shock coefficients and their hypersonic forms") {
    const BackgroundSolution& bg = hypersonic();
    ShockCoefficients sc = shock_coefficients(bg);
    LeadingShockCoefficients lead =
        leading_shock_coefficients(bg.b0, bg.gas, bg.fs.speed);

    CHECK(sc.B1 > 0.0);
    CHECK(sc.mu1 > 0.0);
    CHECK(sc.mu2 < 0.0);
    CHECK(sc.B1 == doctest::Approx(lead.B1).epsilon(2e-4));
    CHECK(sc.B2 == doctest::Approx(lead.B2).epsilon(2e-4));
    CHECK(sc.B3 == doctest::Approx(lead.B3).epsilon(2e-4));
    // mu1 ~ (1 - b0^2)/(2 b0) = 4.95 at b0 = 0.1
    CHECK(sc.mu1 == doctest::Approx(4.95).epsilon(1e-4));
    CHECK(sc.mu2 ==
          doctest::Approx(-bg.fs.speed / (2.0 * (1.0 + bg.b0 * bg.b0))).epsilon(1e-4));
}

TEST_CASE("B1 grows at the (gamma+1)/(gamma-1) power of b0 q0") {
    GasModel gas{1.0, 1.4};
    double b0 = 0.1;
    std::vector<double> bq = {25.0, 50.0, 100.0, 200.0, 400.0};
    std::vector<double> vals;
    for (double v : bq) {
        Freestream fs = make_freestream(gas, v / b0, 1.0);
        BackgroundSolution bg = shoot_attached_shock(b0, gas, fs);
        vals.push_back(shock_coefficients(bg).B1);
    }
    LogLogFit fit = fit_loglog(bq, vals);
    CHECK(fit.slope ==
          doctest::Approx((gas.gamma + 1.0) / (gas.gamma - 1.0)).epsilon(0.02));
}

TEST_CASE("multiplier construction") {
    const BackgroundSolution& bg = hypersonic();
    MultiplierReport rep = multiplier_eval(bg, -1.5);

    SUBCASE("verdict and sign conditions") {
        CHECK(rep.verdict);
        CHECK(rep.k_signs_ok);
        CHECK(rep.lambda_window_ok);
        CHECK(rep.lambda_min_positive);
        CHECK(rep.Q0 > 0.0);
        for (double d : rep.discriminant) CHECK(d < 0.0);
        for (double k : rep.K1) CHECK(k > 0.0);
        for (double k : rep.K4) CHECK(k > 0.0);
        for (double l : rep.lambda_min) CHECK(l > 0.0);
    }
    SUBCASE("cone cancellation is coefficient-wise zero") {
        CHECK(rep.cone_residual_zz <= 1e-12);
        CHECK(rep.cone_residual_tt <= 1e-12);
    }
    SUBCASE("shock constants against the closed forms") {
        CHECK(rep.Q1 == doctest::Approx(rep.C3_closed).epsilon(1e-3));
        CHECK(rep.Q2 == doctest::Approx(rep.C6_closed).epsilon(1e-3));
        CHECK(rep.identity_gap < 1e-6);
        // C6 (1+b0^2)^2 = 4 b0^2 C3 exactly at leading order
        double o = 1.0 + bg.b0 * bg.b0;
        CHECK(rep.C6_closed * o * o ==
              doctest::Approx(4.0 * bg.b0 * bg.b0 * rep.C3_closed).epsilon(1e-14));
        CHECK(rep.Q0 == doctest::Approx(rep.Q1 * (1.0 - 1.0 / 2.25)).epsilon(1e-14));
    }
    SUBCASE("invalid weight exponent") {
        CHECK_THROWS_AS(multiplier_eval(bg, -0.5), std::domain_error);
    }
}

TEST_CASE("discriminant leading order at small cone slope") {
    GasModel gas{1.0, 1.4};
    double b0 = 0.02;
    Freestream fs = make_freestream(gas, 25.0 / b0, 1.0);
    BackgroundSolution bg = shoot_attached_shock(b0, gas, fs);
    MultiplierReport rep = multiplier_eval(bg, -1.5);
    double mu = -1.5;
    double lead = -0.5 * (gas.gamma - 1.0) * (mu - 1.0) * (mu - 3.0) * b0 * b0 * b0 * b0;
    CHECK(rep.discriminant.front() == doctest::Approx(lead).epsilon(0.10));
}

namespace {

// plain quadrature used by the trace-inequality tests
double quad(const std::function<double(double)>& f, double a, double b, int n) {
    double h = (b - a) / n, sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double lo = a + i * h;
        sum += h / 6.0 * (f(lo) + 4.0 * f(lo + 0.5 * h) + f(lo + h));
    }
    return sum;
}

}  // namespace

TEST_CASE("weighted trace inequality") {
    const double mu = -1.5, T = 100.0;

    SUBCASE("analytic cases") {
        auto samples = hardy_default_samples(mu, T, 0, 1);
        HardyResult res = hardy_check(samples, mu, T);
        // constant: LHS = (1 - T^mu)/|mu|, RHS boundary = 2/|mu|
        double c_expect = (1.0 - std::pow(T, mu)) / 2.0;
        CHECK(res.ratios[0] == doctest::Approx(c_expect).epsilon(1e-10));
        // borderline power z^(-mu/2): both integrals reduce to log T
        double p_expect = std::log(T) / (std::log(T) + 2.0 / std::abs(mu));
        CHECK(res.ratios[1] == doctest::Approx(p_expect).epsilon(1e-10));
        CHECK(res.worst_ratio <= 1.0 + 1e-10);
    }
    SUBCASE("randomized trigonometric samples") {
        auto samples = hardy_default_samples(mu, T, 200, 20240501);
        HardyResult res = hardy_check(samples, mu, T);
        CHECK(res.ratios.size() == 202);
        CHECK(res.worst_ratio <= 1.0 + 1e-10);
        CHECK(res.worst_ratio > 0.05);
    }
    SUBCASE("the boundary coefficient 2/|mu| is necessary") {
        // With 1/|mu| the inequality fails for a slow mode riding on a
        // constant; the implementation must keep the factor two.
        double w0 = 2.0 * M_PI / (T - 1.0);
        auto f = [w0](double z) { return 1.0 + std::sin(w0 * (z - 1.0)); };
        auto df = [w0](double z) { return w0 * std::cos(w0 * (z - 1.0)); };
        double lhs =
            quad([&](double z) { return std::pow(z, mu - 1.0) * f(z) * f(z); }, 1.0,
                 T, 20000);
        double dint =
            quad([&](double z) { return std::pow(z, mu + 1.0) * df(z) * df(z); },
                 1.0, T, 20000);
        double weak_rhs = 4.0 / (mu * mu) * dint + 1.0 / std::abs(mu) * f(1.0) * f(1.0);
        CHECK(lhs > weak_rhs);  // counterexample to the un-doubled constant
        HardySample sample{f, df, "slow mode"};
        HardyResult res = hardy_check({sample}, mu, T);
        CHECK(res.worst_ratio <= 1.0);
    }
    SUBCASE("input validation") {
        CHECK_THROWS_AS(hardy_check({}, -0.5, T), std::domain_error);
        CHECK_THROWS_AS(hardy_check({}, mu, 0.5), std::domain_error);
    }
}
