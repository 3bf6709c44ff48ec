#pragma once

#include <span>

namespace shadowblow {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double rms = 0.0;  ///< root-mean-square residual
    std::size_t samples = 0;
};

/// Ordinary least squares y = slope*x + intercept.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace shadowblow
