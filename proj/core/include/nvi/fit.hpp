#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nvi/nets.hpp"

namespace nvi {

/// Regression sample batch: n feature rows of dimension d plus targets.
struct Dataset {
    int n = 0;
    int d = 0;
    std::vector<double> x;  // row-major n*d
    std::vector<double> y;  // size n

    std::span<const double> row(int i) const {
        return {x.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d),
                static_cast<std::size_t>(d)};
    }
    void push(std::span<const double> xi, double yi) {
        x.insert(x.end(), xi.begin(), xi.end());
        y.push_back(yi);
        ++n;
        if (d == 0) d = static_cast<int>(xi.size());
    }
};

struct FitConfig {
    double learning_rate = 1.0;
    int max_epochs = 400;
    double stop_tolerance = 0.0;  // eps_opt; 0 means the 1e-6 floor
    int projection_cadence = 1;   // project every k accepted steps (and at the end)
    std::uint64_t seed = 0;
    int restarts = 1;
    bool reinit = true;  // false: warm-start from the passed-in parameters
};

struct FitResult {
    double final_risk = 0.0;
    int epochs = 0;
};

// Mean squared error of the truncated network output.
double empirical_risk(const TwoLayerNet& net, const Dataset& data);
double empirical_risk(const DeepReluNet& net, const Dataset& data);

// Gradient of the squared loss at one sample, laid out as [outer | inner | biases].
// The truncation is part of the model: its subgradient is 1 on [0, h_cap].
std::vector<double> loss_gradient(const TwoLayerNet& net, std::span<const double> x, double y);
// Layout: [W^(1) | b^(1) | ... | W^(L) | b^(L)], dense (off-mask entries included
// so finite-difference checks can probe every coordinate).
std::vector<double> loss_gradient(const DeepReluNet& net, std::span<const double> x, double y);

std::vector<double> flatten_params(const TwoLayerNet& net);
void unflatten_params(TwoLayerNet& net, std::span<const double> p);
std::vector<double> flatten_params(const DeepReluNet& net);
void unflatten_params(DeepReluNet& net, std::span<const double> p);

// Hidden-layer pre-activations at x; used by kink-aware gradient checks.
std::vector<double> preactivations(const TwoLayerNet& net, std::span<const double> x);
std::vector<double> preactivations(const DeepReluNet& net, std::span<const double> x);

// Projected full-batch gradient descent on the empirical risk. The step is
// halved whenever the risk would increase and gently grown otherwise; descent
// stops when the per-epoch improvement drops below stop_tolerance^2 or the
// epoch budget runs out. Constraints hold exactly on return.
FitResult fit_least_squares(TwoLayerNet& net, const Dataset& data, const FitConfig& cfg);
FitResult fit_least_squares(DeepReluNet& net, const Dataset& data, const FitConfig& cfg);

}  // namespace nvi
