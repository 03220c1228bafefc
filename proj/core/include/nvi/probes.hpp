#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nvi/fit.hpp"
#include "nvi/planner.hpp"
#include "nvi/rng.hpp"

namespace nvi {

struct ApproximationPoint {
    long long capacity = 0;  // N
    double l4_error = 0.0;   // grid L^4 distance between fit and target
    double train_risk = 0.0;
};

struct ApproximationProbeConfig {
    int sample_grid = 257;  // grid points per axis
    double c = 1.0;         // scale multiplier on the capacity schedule
    double h_cap = 1.0;
    double norm_bound = 0.0;  // 0 -> planner default cap (deep) / 4*h_cap*sqrt(d) (shallow)
    FitConfig fit{.learning_rate = 1.0,
                  .max_epochs = 4000,
                  .stop_tolerance = 1e-5,
                  .projection_cadence = 1,
                  .seed = 0,
                  .restarts = 3,
                  .reinit = true};
};

/// Fits the capacity-N architecture of the approximation-rate schedule
/// (depth ~ log N, sparsity ~ N, width ~ N log N for the deep family; width N
/// for the shallow family) to `target` on a dense grid and reports the grid
/// L^4 error per N. N_list must be strictly increasing.
std::vector<ApproximationPoint> approximation_probe(
    const std::function<double(std::span<const double>)>& target, int dim, Family family,
    std::span<const long long> N_list, const ApproximationProbeConfig& cfg = {});

struct RademacherProbeResult {
    double mc_estimate = 0.0;
    double analytic_bound = 0.0;
    double mc_std_error = 0.0;
    int rounds = 0;
};

/// Monte Carlo check of the path-norm Rademacher bound: draws n features
/// x in [0,1]^d, augments them to (x, 1), and averages 2B * ||(1/n) sum_i
/// xi_i x~_i||_inf over mc_rounds sign vectors. The analytic reference is
/// 2B sqrt(2 ln(2d) / n).
RademacherProbeResult rademacher_probe(int n, int d, double B, int mc_rounds, Rng& rng);

}  // namespace nvi
