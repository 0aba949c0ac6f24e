#include "conic/stability.hpp"

#include <cmath>
#include <random>

namespace conic {

namespace {

// Composite 5-point Gauss-Legendre quadrature on [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 int panels) {
    static const double xg[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double wg[5] = {0.2369268850561891, 0.4786286704993665,
                                 0.5688888888888889, 0.4786286704993665,
                                 0.2369268850561891};
    double h = (b - a) / panels;
    double sum = 0.0;
    for (int i = 0; i < panels; ++i) {
        double lo = a + i * h;
        double mid = lo + 0.5 * h;
        for (int k = 0; k < 5; ++k) sum += wg[k] * f(mid + 0.5 * h * xg[k]);
    }
    return sum * 0.5 * h;
}

}  // namespace

HardyResult hardy_check(const std::vector<HardySample>& samples, double mu,
                        double T, int panels) {
    if (!(mu < -1.0))
        throw std::domain_error("weight exponent must satisfy mu < -1");
    if (!(T > 1.0)) throw std::domain_error("interval end must exceed 1");

    HardyResult out;
    for (const auto& sample : samples) {
        auto lhs_f = [&](double z) {
            double v = sample.value(z);
            return std::pow(z, mu - 1.0) * v * v;
        };
        auto rhs_f = [&](double z) {
            double d = sample.deriv(z);
            return std::pow(z, mu + 1.0) * d * d;
        };
        double lhs = integrate(lhs_f, 1.0, T, panels);
        double v1 = sample.value(1.0);
        double rhs = 4.0 / (mu * mu) * integrate(rhs_f, 1.0, T, panels) +
                     2.0 / std::abs(mu) * v1 * v1;
        if (!std::isfinite(lhs) || !std::isfinite(rhs))
            throw std::domain_error("non-finite quadrature in trace inequality");
        double ratio = (rhs > 0.0) ? lhs / rhs : (lhs > 0.0 ? HUGE_VAL : 0.0);
        out.ratios.push_back(ratio);
        if (ratio > out.worst_ratio) {
            out.worst_ratio = ratio;
            out.worst_label = sample.label;
        }
    }
    return out;
}

std::vector<HardySample> hardy_default_samples(double mu, double T, int n_random,
                                               unsigned long long seed) {
    std::vector<HardySample> out;
    out.push_back({[](double) { return 1.0; }, [](double) { return 0.0; },
                   "constant"});
    double p = -0.5 * mu;
    out.push_back({[p](double z) { return std::pow(z, p); },
                   [p](double z) { return p * std::pow(z, p - 1.0); },
                   "borderline power"});

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> coeff(0.0, 1.0);
    std::uniform_int_distribution<int> modes(1, 8);
    const double w0 = 2.0 * M_PI / (T - 1.0);
    for (int i = 0; i < n_random; ++i) {
        int K = modes(rng);
        std::vector<double> a(K + 1), b(K + 1);
        for (int k = 0; k <= K; ++k) {
            a[k] = coeff(rng);
            b[k] = coeff(rng);
        }
        b[0] = 0.0;
        auto val = [a, b, K, w0](double z) {
            double s = 0.0;
            for (int k = 0; k <= K; ++k)
                s += a[k] * std::cos(k * w0 * (z - 1.0)) +
                     b[k] * std::sin(k * w0 * (z - 1.0));
            return s;
        };
        auto der = [a, b, K, w0](double z) {
            double s = 0.0;
            for (int k = 1; k <= K; ++k)
                s += k * w0 * (-a[k] * std::sin(k * w0 * (z - 1.0)) +
                               b[k] * std::cos(k * w0 * (z - 1.0)));
            return s;
        };
        out.push_back({val, der, "trig sample " + std::to_string(i)});
    }
    return out;
}

}  // namespace conic
