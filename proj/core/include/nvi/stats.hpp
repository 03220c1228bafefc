#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nvi {

// Ordinary least squares y = a + b*x with the slope's standard error.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t n = 0;
    bool degenerate = false;  // <2 usable points or zero x-variance
};

SlopeFit fit_line(std::span<const double> x, std::span<const double> y);

// Slope of log(y) vs log(x); pairs with non-positive coordinates are skipped.
SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y);

// Pool-adjacent-violators projection onto non-increasing sequences.
std::vector<double> isotonic_non_increasing(std::span<const double> y);

double mean(std::span<const double> v);
double sample_stddev(std::span<const double> v);

}  // namespace nvi
