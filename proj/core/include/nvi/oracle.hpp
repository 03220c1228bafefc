#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "nvi/mdp.hpp"
#include "nvi/rng.hpp"

namespace nvi {

/// Discretized MDP used as ground truth: cell-center states, exact tables.
struct TabularMdp {
    std::vector<State> states;
    int action_count = 2;
    int horizon = 1;
    std::vector<double> reward;      // [H][S][A], entries in [0,1]
    std::vector<double> transition;  // [H][S][A][S], rows sum to 1

    int state_count() const { return static_cast<int>(states.size()); }
    double reward_at(int h, int s, int a) const;
    std::span<const double> row(int h, int s, int a) const;
    int nearest_state(std::span<const double> x) const;

    // Checks row-stochasticity (1e-9), nonnegativity and reward range.
    void validate() const;
};

/// Optimal value tables from backward induction; v has H+1 rows with
/// v[H] == 0 (the terminal convention).
struct ValueTables {
    int horizon = 1;
    int state_count = 0;
    int action_count = 0;
    std::vector<double> q;  // [H][S][A]
    std::vector<double> v;  // [(H+1)][S]

    double q_at(int h, int s, int a) const;
    double v_at(int h, int s) const;  // valid for h in [1, H+1]
};

/// Value tables of a fixed (possibly stochastic) policy.
struct PolicyTables {
    int horizon = 1;
    int state_count = 0;
    int action_count = 0;
    std::vector<double> q;  // [H][S][A]
    std::vector<double> v;  // [(H+1)][S]

    double q_at(int h, int s, int a) const;
    double v_at(int h, int s) const;
};

/// Policies are per-(h, state) action distributions, flat [H][S][A].
using PolicyMatrix = std::vector<double>;

/// Uniform grid discretization with Monte Carlo transition estimation; when
/// the MDP carries exact tables (tabular_random) they are copied verbatim.
/// Throws capacity_error past `cell_cap` cells.
TabularMdp discretize(const MdpSpec& mdp, int resolution, int mc_samples, Rng& rng,
                      long long cell_cap = 100000);

/// One Bellman backup: Q_h(s,a) = r_h(s,a) + sum_s' P_h(s'|s,a) v_next(s').
std::vector<double> bellman_backup(const TabularMdp& tab, std::span<const double> v_next, int h);

ValueTables solve_optimal(const TabularMdp& tab);

/// Evaluates a fixed policy by backward recursion. Throws std::domain_error
/// if any policy row is not a probability vector.
PolicyTables policy_value(const TabularMdp& tab, const PolicyMatrix& policy);

/// Greedy one-hot policy w.r.t. a [H][S][A] action-value table (lowest action
/// index on ties).
PolicyMatrix greedy_policy(const TabularMdp& tab, std::span<const double> q);

/// r_h(s,a) + sum_s' P_h(s'|s,a) V(s') for an arbitrary state-value estimate
/// given over cell centers — the Bellman image of a learned value function.
std::vector<double> apply_bellman_to_learned(const TabularMdp& tab, std::span<const double> v_learned,
                                             int h);
std::vector<double> apply_bellman_to_learned(
    const TabularMdp& tab, const std::function<double(std::span<const double>)>& v_learned, int h);

/// CSV dump (columns: h, state_index, action, Q, V).
void dump_value_tables_csv(std::ostream& os, const TabularMdp& tab, const ValueTables& values);

}  // namespace nvi
