#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "nvi/agent.hpp"
#include "nvi/oracle.hpp"
#include "nvi/stats.hpp"

namespace nvi {

/// Learned Q/V evaluated over oracle cells, the bridge between a fitted stack
/// and exact table arithmetic. v has H+1 rows with the terminal row zero.
struct LearnedTables {
    int horizon = 0;
    int state_count = 0;
    int action_count = 0;
    std::vector<double> q;  // [H][S][A]
    std::vector<double> v;  // [(H+1)][S]

    double q_at(int h, int s, int a) const;
    double v_at(int h, int s) const;  // h in [1, H+1]
    int greedy_at(int h, int s) const;
};

LearnedTables learned_tables(const TabularMdp& tab, const QStack& stack);

/// TD error Gamma_h(s,a) = (T_h V_{h+1})(s,a) - Q_h(s,a) over all cells.
std::vector<double> td_error_table(const TabularMdp& tab, const LearnedTables& learned, int h);
std::vector<double> td_error_table(const TabularMdp& tab, const QStack& stack, int h);

/// L2 norm of a cell table under the empirical averaged measure given by
/// visit counts: sqrt( sum_c (count_c / total) * value_c^2 ).
double empirical_l2_td_norm(std::span<const double> values, std::span<const long long> visit_counts);

/// Per-(t,h) TD error snapshot under the mini-batch's empirical measure.
struct TdErrorField {
    int h = 1;
    std::vector<double> table;            // [S][A]
    std::vector<long long> visit_counts;  // [S][A], summing to t_tilde
    double l2_norm = 0.0;
};

TdErrorField make_td_field(const TabularMdp& tab, const LearnedTables& learned, int h,
                           std::span<const Transition> minibatch);

/// One episode's regret decomposition, all expectations exact from tables.
struct DecompositionRecord {
    int horizon = 0;
    std::vector<double> expected_td;  // E_{pi*}[Gamma_h | s_1], per h
    std::vector<double> realized_td;  // Gamma_h(s_h, a_h) along the greedy trajectory
    std::vector<double> zeta1;        // action-sampling martingale term
    std::vector<double> zeta2;        // transition-sampling martingale term
    double term_i = 0.0;
    double term_ii = 0.0;
    double term_iii = 0.0;  // <= 0 by the greedy property
    double eps_charge = 0.0;
    double identity_residual = 0.0;  // |(V_1 - V^pi_1) - (sum zeta - sum Gamma)|
};

/// Greedy rollout of the stack on the tabular dynamics (cell-center states).
std::vector<Transition> greedy_rollout(const TabularMdp& tab, const LearnedTables& learned,
                                       int s1_index, Rng& rng);

/// Decomposes one greedy-rollout episode. Throws std::domain_error when the
/// trajectory does not match a greedy rollout of the stack.
DecompositionRecord decompose_episode(const TabularMdp& tab, const ValueTables& stars,
                                      const QStack& stack, std::span<const Transition> trajectory);
DecompositionRecord decompose_episode(const TabularMdp& tab, const ValueTables& stars,
                                      const LearnedTables& learned,
                                      std::span<const Transition> trajectory);

/// Simulates n greedy episodes and returns the largest absolute residual of
/// the per-episode decomposition identity (an exact algebraic identity).
double verify_decomposition_identity(const TabularMdp& tab, const QStack& stack, int n_episodes,
                                     Rng& rng);

/// Visit counts over (h, cell, action).
struct VisitHistogram {
    int horizon = 0;
    int state_count = 0;
    int action_count = 0;
    long long episodes = 0;
    std::vector<long long> counts;  // [H][S][A]

    VisitHistogram() = default;
    VisitHistogram(int H, int S, int A)
        : horizon(H),
          state_count(S),
          action_count(A),
          counts(static_cast<std::size_t>(H) * S * A, 0) {}
    void record(int h, int cell, int action);
};

struct OccupancyReport {
    double min_frequency = 0.0;
    double reference_bound = 0.0;  // (eps/A)^K
    long long burn_in = 0;
    bool flagged = false;  // min below 0.1 * bound after burn-in
};

OccupancyReport occupancy_diagnostic(const VisitHistogram& hist, double epsilon, int A, int H,
                                     int K);

struct GapEstimate {
    double emp_risk = 0.0;       // empirical least-squares objective on the mini-batch
    double exp_risk = 0.0;       // Monte Carlo expected risk under the averaged measure
    double bias_term = 0.0;      // ||Qhat - T_h V_{h+1}||^2_{L2(mu-bar)} exact
    double variance_term = 0.0;  // Monte Carlo E Var[V_{h+1}(s')]
    double exp_se = 0.0;
    double var_se = 0.0;
};

GapEstimate generalization_gap_estimate(const TabularMdp& tab, const LearnedTables& learned, int h,
                                        std::span<const Transition> minibatch, int mc_next_samples,
                                        Rng& rng);

struct AzumaReport {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double slope_stderr = 0.0;
    bool degenerate = false;  // envelope identically zero (no noise to scale)
};

/// Log-log slope of the running envelope of |sum_{tau<=t} zeta_tau|.
/// Needs >= 50 episodes of per-episode martingale sums.
AzumaReport azuma_diagnostic(std::span<const double> per_episode_zeta_sums);

/// Trailing-window log-log slope of a cumulative regret series, with a
/// +-2 stderr band.
struct ExponentFit {
    double slope = 0.0;
    double stderr_ = 0.0;
    double band_lo = 0.0;
    double band_hi = 0.0;
    std::size_t points = 0;
    bool degenerate = false;
};

ExponentFit exponent_fit(std::span<const double> cumulative_regret, int window);

/// Per-episode ledger row. NaN diagnostic values mean "not computed this
/// episode" and serialize as empty CSV cells.
struct EpisodeRow {
    int t = 0;
    State initial_state;
    double v_star = 0.0;
    double v_realized = 0.0;  // realized return of the executed rollout
    double regret = 0.0;      // V*(s1) - V^{executed policy}(s1), oracle exact
    double cum_regret = 0.0;
    double epsilon = 0.0;
    int t_tilde = 0;
    double term_i = std::numeric_limits<double>::quiet_NaN();
    double term_ii = std::numeric_limits<double>::quiet_NaN();
    double td_l2_max_h = std::numeric_limits<double>::quiet_NaN();
    double min_occ = std::numeric_limits<double>::quiet_NaN();
    double gap_h1 = std::numeric_limits<double>::quiet_NaN();
};

class RegretLedger {
  public:
    void append(EpisodeRow row);
    const std::vector<EpisodeRow>& rows() const { return rows_; }
    std::vector<double> cumulative_series() const;
    double final_cumulative() const { return rows_.empty() ? 0.0 : rows_.back().cum_regret; }

    void write_csv(std::ostream& os) const;

  private:
    std::vector<EpisodeRow> rows_;
};

}  // namespace nvi
