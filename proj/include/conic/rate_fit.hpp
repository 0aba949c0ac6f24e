#pragma once

#include <cstddef>
#include <span>

namespace conic {

// Least-squares line through (log x_i, log y_i).
struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;  // log of the fitted constant
    double r_squared = 0.0;
    std::size_t n = 0;
};

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace conic
