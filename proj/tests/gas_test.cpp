#include <doctest.h>

#include <cmath>
#include <random>

#include "conic/gas.hpp"

using namespace conic;

TEST_CASE("sound speed matches the closed form") {
    GasModel air{1.0, 1.4};
    CHECK(sound_speed(air, 1.0) == doctest::Approx(std::sqrt(1.4)).epsilon(1e-15));
    GasModel stiff{1.0, 2.0};
    CHECK(sound_speed(stiff, 4.0) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));
    CHECK_THROWS_AS(sound_speed(air, -1.0), std::domain_error);
    CHECK_THROWS_AS(sound_speed(air, 0.0), std::domain_error);
}

TEST_CASE("sound speed squared equals dP/drho by finite differences") {
    GasModel gas{0.7143, 1.4};
    double rho = 1.2;
    double h = 1e-5;
    double fd = (pressure(gas, rho + h) - pressure(gas, rho - h)) / (2.0 * h);
    CHECK(sound_speed_sq(gas, rho) == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("enthalpy closed forms") {
    GasModel air{1.0, 1.4};
    CHECK(enthalpy(air, 1.0) == doctest::Approx(3.5).epsilon(1e-15));
    GasModel stiff{1.0, 2.0};
    CHECK(enthalpy(stiff, 3.0) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK_THROWS_AS(enthalpy(air, 0.0), std::domain_error);
}

TEST_CASE("enthalpy difference equals the quadrature of c^2/rho") {
    GasModel gas{1.0, 1.4};
    double r1 = 0.7, r2 = 2.3;
    // composite Simpson on h' = c^2 / rho
    int n = 2000;
    double hstep = (r2 - r1) / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double a = r1 + i * hstep, b = a + hstep, m = 0.5 * (a + b);
        sum += hstep / 6.0 *
               (sound_speed_sq(gas, a) / a + 4.0 * sound_speed_sq(gas, m) / m +
                sound_speed_sq(gas, b) / b);
    }
    CHECK(enthalpy(gas, r2) - enthalpy(gas, r1) == doctest::Approx(sum).epsilon(1e-8));
}

TEST_CASE("Bernoulli inversion") {
    GasModel gas{1.0, 1.4};
    Freestream fs = make_freestream(gas, 10.0, 1.0);

    SUBCASE("roundtrip at the upstream state") {
        double rho = density_from_speed_sq(gas, fs, fs.speed * fs.speed);
        CHECK(rho == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("vacuum limit") {
        double rho = density_from_speed_sq(gas, fs, 2.0 * fs.bernoulli - 1e-10);
        CHECK(rho < 1e-6);
        CHECK(rho > 0.0);
    }
    SUBCASE("cavitation and negative speed are rejected") {
        CHECK_THROWS_AS(density_from_speed_sq(gas, fs, 2.0 * fs.bernoulli),
                        CavitationError);
        CHECK_THROWS_AS(density_from_speed_sq(gas, fs, -1.0), std::domain_error);
    }
    SUBCASE("bisection result matches an independent Newton solve") {
        // h(rho) = C0 - 30 solved by Newton with h' = c^2 / rho.
        double target = fs.bernoulli - 30.0;
        double newton = fs.density;
        for (int it = 0; it < 100; ++it) {
            double f = enthalpy(gas, newton) - target;
            double df = sound_speed_sq(gas, newton) / newton;
            double step = f / df;
            newton -= step;
            if (std::abs(step) < 1e-15 * newton) break;
        }
        double bisect = density_from_speed_sq(gas, fs, 60.0);
        CHECK(bisect == doctest::Approx(newton).epsilon(1e-10));
    }
}

TEST_CASE("monotone inversion property on random speeds") {
    GasModel gas{1.0, 1.4};
    Freestream fs = make_freestream(gas, 25.0, 1.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> speed_sq(0.0, 2.0 * fs.bernoulli * 0.999);
    for (int i = 0; i < 200; ++i) {
        double v2 = speed_sq(rng);
        double rho = density_from_speed_sq(gas, fs, v2);
        CHECK(std::abs(enthalpy(gas, rho) + 0.5 * v2 - fs.bernoulli) <=
              1e-10 * fs.bernoulli);
    }
}

TEST_CASE("h'(rho) rho = c^2(rho) by finite differences") {
    GasModel gas{1.3, 1.7};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.01, 100.0);
    for (int i = 0; i < 100; ++i) {
        double rho = dist(rng);
        double h = 1e-5 * rho;
        double fd = (enthalpy(gas, rho + h) - enthalpy(gas, rho - h)) / (2.0 * h);
        CHECK(fd * rho == doctest::Approx(sound_speed_sq(gas, rho)).epsilon(1e-6));
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS((GasModel{-1.0, 1.4}).validate(), std::domain_error);
    CHECK_THROWS_AS((GasModel{1.0, 1.0}).validate(), std::domain_error);
    CHECK_THROWS_AS((GasModel{1.0, 3.0}).validate(), std::domain_error);
    GasModel subsonic{1.0, 1.4};
    CHECK_THROWS_AS(make_freestream(subsonic, 1.0, 1.0), std::domain_error);
}
