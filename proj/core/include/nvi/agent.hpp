#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nvi/fit.hpp"
#include "nvi/mdp.hpp"
#include "nvi/nets.hpp"
#include "nvi/planner.hpp"
#include "nvi/replay.hpp"
#include "nvi/rng.hpp"

namespace nvi {

/// Exact Q-function over cell centers; used to inject oracle values into the
/// agent machinery (test hook) and as the greedy reference in diagnostics.
struct TabularQ {
    std::vector<State> states;
    int action_count = 2;
    std::vector<double> values;  // [S][A]
    double h_cap = 1.0;

    double eval_state_action(std::span<const double> state, int action) const;
    // Features are concat(state, one-hot); the action is recovered from the
    // one-hot block so TabularQ slots in wherever a net would.
    double eval_feature(std::span<const double> feature) const;
};

using QEntry = std::variant<TwoLayerNet, DeepReluNet, TabularQ>;

double q_eval(const QEntry& q, std::span<const double> feature);

/// Per-step fitted Q-functions for one episode, h = 1..H, with the induced
/// values V_h(s) = max_a Q_h(featurize(s,a)) and V_{H+1} = 0.
struct QStack {
    int horizon = 0;
    int action_count = 0;
    std::vector<QEntry> entries;  // empty = untrained (cold start)

    bool trained() const { return !entries.empty(); }
    const QEntry& at(int h) const { return entries[static_cast<std::size_t>(h - 1)]; }

    double q_value(int h, std::span<const double> state, int action) const;
    // h may be H+1 (returns 0).
    double value(int h, std::span<const double> state) const;
    int greedy_action(int h, std::span<const double> state) const;
};

enum class EpsilonMode { fixed, scheduled };
enum class ExplorationGranularity { step, episode };

struct AgentConfig {
    int episodes = 100;  // T
    EpsilonMode epsilon_mode = EpsilonMode::scheduled;
    double epsilon_fixed = 0.1;
    double rho = 0.5;  // mini-batch ratio
    int myopia = 1;    // K in [1, H]
    Family family = Family::barron_shallow;
    FitConfig fit;
    std::uint64_t seed = 0;

    double alpha = 1.0;  // smoothness used by the schedule/planner (besov family)
    double arch_c = 1.0;
    double eps_c = 1.0;
    double norm_bound = 0.0;  // barron path budget (0 -> 4*H*sqrt(d)); deep entry-bound cap
    int refit_every = 1;
    bool warm_start = false;
    bool baseline_uniform = false;  // skip fitting, act uniformly (reference agent)
    ExplorationGranularity exploration = ExplorationGranularity::step;
};

/// The family-appropriate exploration rate
///   besov:  c (HK)^{2/(K+2)} A^{K/(K+2)} T^{-2a/((2a+d)(K+2))}
///   barron: c H^{2/(K+2)} T^{-1/(2(K+2))}
/// clamped to (1e-4, 1-1e-4). alpha = +inf selects the smooth limit exponent
/// 1/(K+2). Monotone non-increasing in T.
double epsilon_schedule(long long T, double alpha, int d, int K, int H, int A, Family family,
                        double c = 1.0);

/// Uniform action with probability epsilon, otherwise the greedy argmax
/// (lowest index on ties).
int epsilon_greedy_action(const QEntry& q_h, std::span<const double> state, double epsilon,
                          int action_count, Rng& rng);

/// Backward least-squares value iteration over the replay memory: one shared
/// mini-batch index set, regression targets y = r + V_{h+1}(s'), fits ordered
/// h = H..1. `t` is the number of stored episodes. Truncation level of step h
/// is H-h+1 so targets always stay in [0, H-h+1].
QStack backward_fit(const ReplayMemory& memory, int t, const AgentConfig& config,
                    const ArchitecturePlan& plan, const QStack* warm_from = nullptr);

/// Builds the per-step architecture of `plan` for step h (mask seeds derive
/// from config.seed so the sparsity pattern is fixed across refits).
QEntry make_net_for_step(const AgentConfig& config, const ArchitecturePlan& plan, int feature_dim,
                         int horizon, int h);

}  // namespace nvi
