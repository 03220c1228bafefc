#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "nvi/nets.hpp"
#include "nvi/rng.hpp"

namespace nvi {

using State = std::vector<double>;

enum class Construction { bump_superposition, barron_random_features, tabular_random };

/// Describes the smoothness class a synthetic MDP's targets are built in.
struct TargetSpec {
    double alpha = 1.0;
    double p = std::numeric_limits<double>::infinity();  // Besov index, 2 or inf supported
    double q = std::numeric_limits<double>::infinity();
    double norm_radius = 1.0;  // bound on the constructed target's norm surrogate
    Construction construction = Construction::bump_superposition;
    // Multiscale depth J for bump_superposition; per-axis grid resolution for
    // tabular_random (state count = level_count^{d_s}).
    int level_count = 3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Transition {
    int h = 1;  // 1-based step index
    State state;
    int action = 0;
    double reward = 0.0;
    State next_state;
};

/// Multiscale bump superposition on [0,1]^dim. Level j places one smooth
/// tensor bump per cell of a 2^j grid, with coefficient magnitude exactly
/// base * 2^{-j*alpha} and a seeded random sign; supports are disjoint within
/// a level, so the sum stays inside [lo, hi] by construction.
class BumpTarget {
  public:
    BumpTarget(int dim, double alpha, int levels, double lo, double hi, std::uint64_t seed);

    double operator()(std::span<const double> x) const;

    int dim() const { return dim_; }
    int levels() const { return static_cast<int>(levels_.size()) - 1; }
    double base_magnitude() const { return base_; }
    // Per-cell signed coefficients at level j.
    std::span<const double> coefficients(int j) const { return levels_[static_cast<std::size_t>(j)].coeff; }

  private:
    struct Level {
        int cells_per_axis = 1;
        std::vector<double> coeff;
    };

    int dim_ = 1;
    double base_ = 0.0;
    double mid_ = 0.0;
    std::vector<Level> levels_;
};

/// Tables of an embedded finite MDP (cell-center states). Kept on the MdpSpec
/// so the oracle can copy them verbatim instead of re-estimating.
struct TabularPayload {
    std::vector<State> states;
    int action_count = 2;
    int horizon = 1;
    std::vector<double> reward;      // [H][S][A]
    std::vector<double> transition;  // [H][S][A][S]

    int state_count() const { return static_cast<int>(states.size()); }
    double reward_at(int h, int s, int a) const;
    std::span<const double> row(int h, int s, int a) const;
    int nearest_state(std::span<const double> x) const;
};

/// An episodic MDP over the state box [0,1]^{d_s} with a finite action set.
/// Immutable after construction; all sampling goes through caller-provided
/// Rng handles.
struct MdpSpec {
    int horizon = 1;       // H
    int action_count = 2;  // A
    int state_dim = 1;     // d_s

    std::function<double(int h, std::span<const double> s, int a)> reward;
    std::function<State(int h, std::span<const double> s, int a, Rng&)> transition;
    std::function<State(Rng&)> initial_state;

    std::optional<TargetSpec> target_meta;

    // Construction-specific handles for tests and the oracle.
    std::shared_ptr<const TabularPayload> tabular;
    std::shared_ptr<const std::vector<TwoLayerNet>> generator_nets;  // barron_random_features
    std::shared_ptr<const std::vector<BumpTarget>> bump_targets;     // bump_superposition

    void validate() const;
    int feature_dim() const { return state_dim + action_count; }
};

/// Feature map for (state, action): concatenation of the state with a one-hot
/// action encoding, so X = [0,1]^{d_s + A}.
std::vector<double> featurize(std::span<const double> state, int action, int action_count);

/// Builds a synthetic MDP whose reward maps carry the smoothness described by
/// `spec`. Deterministic given (spec.seed, seed).
MdpSpec make_synthetic_mdp(const TargetSpec& spec, int horizon, int action_count, int state_dim,
                           std::uint64_t seed);

/// One environment step: (reward, next state).
std::pair<double, State> step(const MdpSpec& mdp, int h, std::span<const double> state, int action,
                              Rng& rng);

/// Grid estimate of the k-th modulus of smoothness w_{k,p}(f, t): sup over
/// axis-aligned and diagonal shift directions with ||shift||_2 <= t of the
/// grid L^p norm of the k-th finite difference, with the out-of-domain
/// convention Delta = 0. p may be finite or +inf.
double modulus_of_smoothness(const std::function<double(std::span<const double>)>& f, int dim,
                             int k, double p, double t, int grid_resolution);

}  // namespace nvi
