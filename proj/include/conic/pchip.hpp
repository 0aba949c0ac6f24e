#pragma once

#include <cstddef>
#include <vector>

namespace conic {

// Shape-preserving piecewise-cubic Hermite interpolant (Fritsch-Carlson
// slopes). Knots must be strictly increasing.
class Pchip {
public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    double derivative(double x) const;

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }
    bool empty() const { return x_.empty(); }

private:
    std::size_t segment(double x) const;

    std::vector<double> x_, y_, d_;  // knots, values, endpoint slopes
};

}  // namespace conic
