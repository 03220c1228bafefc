#pragma once

#include <cstdint>
#include <limits>

namespace nvi {

enum class Family { besov_deep, barron_shallow };

/// Resolved architecture sizes for one episode budget T.
struct ArchitecturePlan {
    Family family = Family::barron_shallow;
    int depth = 2;          // L
    int width = 1;          // m
    int sparsity = 1;       // S
    double norm_bound = 1;  // B (path norm for shallow, entry bound for deep)
    long long capacity = 1; // N, the internal capacity parameter (deep family)
};

struct BesovPlanOptions {
    double c = 1.0;                                      // scale multiplier on every ~ constant
    double p = std::numeric_limits<double>::infinity();  // Besov integrability index
    double h_cap = 1.0;
    double b_cap = 0.0;  // 0 -> 10 * h_cap * sqrt(d)
};

// Depth/width/sparsity/bound schedule for the deep family:
//   N = ceil(c * T^{d/(2a+d)} * (ln T)^3),  L = ceil(c * d/(2a+d) * ln T),
//   m = ceil(c * d/(2a+d) * T^{d/(2a+d)} * ln T),  S = N,
//   B = ceil(N^{1/nu + 1/d}) with nu = (a-eta)/(2*eta), eta = d*(1/p - 1/4)_+.
// For p = inf the B exponent degenerates (eta = 0) and B falls back to the cap.
// Throws std::invalid_argument when alpha <= eta.
ArchitecturePlan plan_architecture_besov(long long T, int d, double alpha,
                                         const BesovPlanOptions& opt = {});

// Shallow family: m = ceil(c * sqrt(T)); the path-norm bound comes from config.
ArchitecturePlan plan_architecture_barron(long long T, double c = 1.0, double norm_bound = 1.0);

}  // namespace nvi
