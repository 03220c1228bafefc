#include "nvi/stats.hpp"

#include <cmath>

namespace nvi {

SlopeFit fit_line(std::span<const double> x, std::span<const double> y) {
    SlopeFit out;
    out.n = std::min(x.size(), y.size());
    if (out.n < 2) {
        out.degenerate = true;
        return out;
    }
    const double n = static_cast<double>(out.n);
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < out.n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < out.n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) {
        out.degenerate = true;
        return out;
    }
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < out.n; ++i) {
        const double r = y[i] - (out.intercept + out.slope * x[i]);
        sse += r * r;
    }
    if (out.n > 2) {
        out.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
    }
    return out;
}

SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx, ly;
    const std::size_t n = std::min(x.size(), y.size());
    lx.reserve(n);
    ly.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    return fit_line(lx, ly);
}

std::vector<double> isotonic_non_increasing(std::span<const double> y) {
    // PAV on the negated sequence (non-decreasing), then negate back.
    std::vector<double> level;
    std::vector<double> weight;
    level.reserve(y.size());
    weight.reserve(y.size());
    for (double v : y) {
        level.push_back(-v);
        weight.push_back(1.0);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            const double w = weight[weight.size() - 2] + weight.back();
            const double merged =
                (level[level.size() - 2] * weight[weight.size() - 2] + level.back() * weight.back()) / w;
            level.pop_back();
            weight.pop_back();
            level.back() = merged;
            weight.back() = w;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (std::size_t b = 0; b < level.size(); ++b) {
        for (int i = 0; i < static_cast<int>(weight[b]); ++i) out.push_back(-level[b]);
    }
    return out;
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_stddev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace nvi
