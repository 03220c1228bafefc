#include "nvi/regret.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "nvi/errors.hpp"

namespace nvi {

namespace {

std::size_t qidx(int S, int A, int h, int s, int a) {
    return (static_cast<std::size_t>(h - 1) * static_cast<std::size_t>(S) +
            static_cast<std::size_t>(s)) *
               static_cast<std::size_t>(A) +
           static_cast<std::size_t>(a);
}

int categorical(std::span<const double> row, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int i = 0; i < static_cast<int>(row.size()); ++i) {
        acc += row[static_cast<std::size_t>(i)];
        if (u < acc) return i;
    }
    return static_cast<int>(row.size()) - 1;
}

}  // namespace

double LearnedTables::q_at(int h, int s, int a) const { return q[qidx(state_count, action_count, h, s, a)]; }

double LearnedTables::v_at(int h, int s) const {
    return v[static_cast<std::size_t>(h - 1) * state_count + static_cast<std::size_t>(s)];
}

int LearnedTables::greedy_at(int h, int s) const {
    int best = 0;
    for (int a = 1; a < action_count; ++a) {
        if (q_at(h, s, a) > q_at(h, s, best)) best = a;
    }
    return best;
}

LearnedTables learned_tables(const TabularMdp& tab, const QStack& stack) {
    const int S = tab.state_count();
    const int A = tab.action_count;
    const int H = tab.horizon;
    LearnedTables out;
    out.horizon = H;
    out.state_count = S;
    out.action_count = A;
    out.q.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    out.v.assign(static_cast<std::size_t>(H + 1) * S, 0.0);
    for (int h = 1; h <= H; ++h) {
        for (int s = 0; s < S; ++s) {
            double best = 0.0;
            for (int a = 0; a < A; ++a) {
                const double qv =
                    stack.trained() ? stack.q_value(h, tab.states[static_cast<std::size_t>(s)], a) : 0.0;
                out.q[qidx(S, A, h, s, a)] = qv;
                best = std::max(best, qv);
            }
            out.v[static_cast<std::size_t>(h - 1) * S + static_cast<std::size_t>(s)] = best;
        }
    }
    return out;
}

std::vector<double> td_error_table(const TabularMdp& tab, const LearnedTables& learned, int h) {
    const int S = tab.state_count();
    const int A = tab.action_count;
    std::span<const double> v_next{learned.v.data() + static_cast<std::size_t>(h) * S,
                                   static_cast<std::size_t>(S)};
    std::vector<double> gamma = bellman_backup(tab, v_next, h);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a)
            gamma[static_cast<std::size_t>(s) * A + static_cast<std::size_t>(a)] -= learned.q_at(h, s, a);
    }
    return gamma;
}

std::vector<double> td_error_table(const TabularMdp& tab, const QStack& stack, int h) {
    return td_error_table(tab, learned_tables(tab, stack), h);
}

double empirical_l2_td_norm(std::span<const double> values, std::span<const long long> visit_counts) {
    if (values.size() != visit_counts.size())
        throw std::domain_error("empirical_l2_td_norm: shape mismatch");
    long long total = 0;
    for (long long c : visit_counts) {
        if (c < 0) throw std::domain_error("empirical_l2_td_norm: negative count");
        total += c;
    }
    if (total <= 0) throw std::domain_error("empirical_l2_td_norm: empty measure");
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (visit_counts[i] > 0)
            s += static_cast<double>(visit_counts[i]) / static_cast<double>(total) * values[i] * values[i];
    }
    return std::sqrt(s);
}

TdErrorField make_td_field(const TabularMdp& tab, const LearnedTables& learned, int h,
                           std::span<const Transition> minibatch) {
    const int S = tab.state_count();
    const int A = tab.action_count;
    TdErrorField field;
    field.h = h;
    field.table = td_error_table(tab, learned, h);
    field.visit_counts.assign(static_cast<std::size_t>(S) * A, 0);
    for (const auto& tr : minibatch) {
        const int cell = tab.nearest_state(tr.state);
        ++field.visit_counts[static_cast<std::size_t>(cell) * A + static_cast<std::size_t>(tr.action)];
    }
    field.l2_norm = empirical_l2_td_norm(field.table, field.visit_counts);
    return field;
}

std::vector<Transition> greedy_rollout(const TabularMdp& tab, const LearnedTables& learned,
                                       int s1_index, Rng& rng) {
    std::vector<Transition> traj;
    traj.reserve(static_cast<std::size_t>(tab.horizon));
    int s = s1_index;
    for (int h = 1; h <= tab.horizon; ++h) {
        const int a = learned.greedy_at(h, s);
        const int sp = categorical(tab.row(h, s, a), rng);
        Transition tr;
        tr.h = h;
        tr.state = tab.states[static_cast<std::size_t>(s)];
        tr.action = a;
        tr.reward = tab.reward_at(h, s, a);
        tr.next_state = tab.states[static_cast<std::size_t>(sp)];
        traj.push_back(std::move(tr));
        s = sp;
    }
    return traj;
}

DecompositionRecord decompose_episode(const TabularMdp& tab, const ValueTables& stars,
                                      const QStack& stack, std::span<const Transition> trajectory) {
    return decompose_episode(tab, stars, learned_tables(tab, stack), trajectory);
}

DecompositionRecord decompose_episode(const TabularMdp& tab, const ValueTables& stars,
                                      const LearnedTables& learned,
                                      std::span<const Transition> trajectory) {
    const int S = tab.state_count();
    const int A = tab.action_count;
    const int H = tab.horizon;
    if (static_cast<int>(trajectory.size()) != H)
        throw std::domain_error("decompose_episode: trajectory length != H");

    // cells along the trajectory; the rollout must be greedy w.r.t. the stack
    std::vector<int> cells(static_cast<std::size_t>(H) + 1, 0);
    for (int h = 1; h <= H; ++h) {
        const auto& tr = trajectory[static_cast<std::size_t>(h - 1)];
        if (tr.h != h) throw std::domain_error("decompose_episode: trajectory steps out of order");
        cells[static_cast<std::size_t>(h - 1)] = tab.nearest_state(tr.state);
        if (tr.action != learned.greedy_at(h, cells[static_cast<std::size_t>(h - 1)]))
            throw std::domain_error("decompose_episode: trajectory is not greedy w.r.t. the stack");
    }
    cells[static_cast<std::size_t>(H)] = tab.nearest_state(trajectory[static_cast<std::size_t>(H - 1)].next_state);

    // exact value tables of the greedy policy pi^t
    const PolicyMatrix pi_t = greedy_policy(tab, learned.q);
    const PolicyTables pol = policy_value(tab, pi_t);

    DecompositionRecord rec;
    rec.horizon = H;
    rec.expected_td.resize(static_cast<std::size_t>(H));
    rec.realized_td.resize(static_cast<std::size_t>(H));
    rec.zeta1.resize(static_cast<std::size_t>(H));
    rec.zeta2.resize(static_cast<std::size_t>(H));

    // occupancy of pi* from the episode's initial state, stepped forward
    std::vector<double> occ(static_cast<std::size_t>(S), 0.0);
    occ[static_cast<std::size_t>(cells[0])] = 1.0;
    std::vector<double> occ_next(static_cast<std::size_t>(S), 0.0);

    double sum_zeta = 0.0, sum_gamma = 0.0;
    for (int h = 1; h <= H; ++h) {
        const auto gamma = td_error_table(tab, learned, h);

        // pi* pieces under the exact occupancy
        double expected = 0.0;
        double term_iii_h = 0.0;
        std::fill(occ_next.begin(), occ_next.end(), 0.0);
        for (int s = 0; s < S; ++s) {
            const double w = occ[static_cast<std::size_t>(s)];
            if (w == 0.0) continue;
            int a_star = 0;
            for (int a = 1; a < A; ++a) {
                if (stars.q_at(h, s, a) > stars.q_at(h, s, a_star)) a_star = a;
            }
            expected += w * gamma[static_cast<std::size_t>(s) * A + static_cast<std::size_t>(a_star)];
            term_iii_h += w * (learned.q_at(h, s, a_star) - learned.q_at(h, s, learned.greedy_at(h, s)));
            const auto row = tab.row(h, s, a_star);
            for (int sp = 0; sp < S; ++sp)
                occ_next[static_cast<std::size_t>(sp)] += w * row[static_cast<std::size_t>(sp)];
        }
        occ.swap(occ_next);

        const int s_h = cells[static_cast<std::size_t>(h - 1)];
        const int s_next = cells[static_cast<std::size_t>(h)];
        const auto& tr = trajectory[static_cast<std::size_t>(h - 1)];
        const int a_h = tr.action;

        const double realized = gamma[static_cast<std::size_t>(s_h) * A + static_cast<std::size_t>(a_h)];

        // zeta^1: action-sampling noise (identically 0 for a deterministic greedy policy)
        const double z1 = (learned.v_at(h, s_h) - pol.v_at(h, s_h)) -
                          (learned.q_at(h, s_h, a_h) - pol.q_at(h, s_h, a_h));
        // zeta^2: transition-sampling noise
        double pv_learned = 0.0, pv_pol = 0.0;
        {
            const auto row = tab.row(h, s_h, a_h);
            for (int sp = 0; sp < S; ++sp) {
                pv_learned += row[static_cast<std::size_t>(sp)] * learned.v_at(h + 1, sp);
                pv_pol += row[static_cast<std::size_t>(sp)] * pol.v_at(h + 1, sp);
            }
        }
        const double z2 = (pv_learned - pv_pol) - (learned.v_at(h + 1, s_next) - pol.v_at(h + 1, s_next));

        if (std::abs(z1) > 2.0 * H + 1e-9 || std::abs(z2) > 2.0 * H + 1e-9)
            throw std::logic_error("decompose_episode: martingale term exceeds the 2H bound");

        rec.expected_td[static_cast<std::size_t>(h - 1)] = expected;
        rec.realized_td[static_cast<std::size_t>(h - 1)] = realized;
        rec.zeta1[static_cast<std::size_t>(h - 1)] = z1;
        rec.zeta2[static_cast<std::size_t>(h - 1)] = z2;
        rec.term_i += expected - realized;
        rec.term_ii += z1 + z2;
        rec.term_iii += term_iii_h;
        sum_zeta += z1 + z2;
        sum_gamma += realized;
    }

    if (rec.term_iii > 1e-9)
        throw std::logic_error("decompose_episode: greedy term (iii) came out positive");

    const int s1 = cells[0];
    rec.identity_residual =
        std::abs((learned.v_at(1, s1) - pol.v_at(1, s1)) - (sum_zeta - sum_gamma));
    return rec;
}

double verify_decomposition_identity(const TabularMdp& tab, const QStack& stack, int n_episodes,
                                     Rng& rng) {
    const LearnedTables learned = learned_tables(tab, stack);
    const ValueTables stars = solve_optimal(tab);
    double max_residual = 0.0;
    for (int ep = 0; ep < n_episodes; ++ep) {
        const int s1 = rng.uniform_int(tab.state_count());
        const auto traj = greedy_rollout(tab, learned, s1, rng);
        const auto rec = decompose_episode(tab, stars, learned, traj);
        max_residual = std::max(max_residual, rec.identity_residual);
    }
    return max_residual;
}

void VisitHistogram::record(int h, int cell, int action) {
    ++counts[qidx(state_count, action_count, h, cell, action)];
}

OccupancyReport occupancy_diagnostic(const VisitHistogram& hist, double epsilon, int A, int H,
                                     int K) {
    if (K < 1 || K > H) throw std::domain_error("occupancy_diagnostic: K must lie in [1, H]");
    OccupancyReport rep;
    rep.reference_bound = std::pow(epsilon / A, K);
    double burn = 100.0;
    burn = std::max(burn, 10.0 * std::pow(static_cast<double>(A), K));
    rep.burn_in = static_cast<long long>(burn);
    if (hist.episodes <= 0) {
        rep.min_frequency = 0.0;
        return rep;
    }
    long long min_count = hist.counts.empty() ? 0 : hist.counts[0];
    for (long long c : hist.counts) min_count = std::min(min_count, c);
    rep.min_frequency = static_cast<double>(min_count) / static_cast<double>(hist.episodes);
    rep.flagged = hist.episodes >= rep.burn_in && rep.min_frequency < 0.1 * rep.reference_bound;
    return rep;
}

GapEstimate generalization_gap_estimate(const TabularMdp& tab, const LearnedTables& learned, int h,
                                        std::span<const Transition> minibatch, int mc_next_samples,
                                        Rng& rng) {
    if (minibatch.empty()) throw std::domain_error("generalization_gap_estimate: empty mini-batch");
    if (mc_next_samples < 1)
        throw std::domain_error("generalization_gap_estimate: mc_next_samples must be >= 1");
    const int S = tab.state_count();

    GapEstimate out;
    const int n = static_cast<int>(minibatch.size());

    // T_h V_{h+1} over all cells, exact
    std::span<const double> v_next{learned.v.data() + static_cast<std::size_t>(h) * S,
                                   static_cast<std::size_t>(S)};
    const auto bellman_image = bellman_backup(tab, v_next, h);

    double exp_sum = 0.0, exp_sumsq = 0.0;
    double var_sum = 0.0, var_sumsq = 0.0;
    const long long total_draws = static_cast<long long>(n) * mc_next_samples;

    for (const auto& tr : minibatch) {
        const int cell = tab.nearest_state(tr.state);
        const int a = tr.action;
        const double qhat = learned.q_at(h, cell, a);
        const double r = tab.reward_at(h, cell, a);

        // empirical objective on the stored tuple
        const int next_cell = tab.nearest_state(tr.next_state);
        const double emp_target = tr.reward + learned.v_at(h + 1, next_cell);
        out.emp_risk += (qhat - emp_target) * (qhat - emp_target);

        // exact bias term
        const double tv = bellman_image[static_cast<std::size_t>(cell) * tab.action_count +
                                        static_cast<std::size_t>(a)];
        out.bias_term += (qhat - tv) * (qhat - tv);

        // Monte Carlo next-state draws for expected risk and the variance term
        const auto row = tab.row(h, cell, a);
        double ev = 0.0;
        for (int sp = 0; sp < S; ++sp) ev += row[static_cast<std::size_t>(sp)] * learned.v_at(h + 1, sp);
        for (int k = 0; k < mc_next_samples; ++k) {
            const int sp = categorical(row, rng);
            const double vnext = learned.v_at(h + 1, sp);
            const double e = qhat - r - vnext;
            const double ve = ev - vnext;
            exp_sum += e * e;
            exp_sumsq += e * e * e * e;
            var_sum += ve * ve;
            var_sumsq += ve * ve * ve * ve;
        }
    }
    out.emp_risk /= n;
    out.bias_term /= n;
    out.exp_risk = exp_sum / static_cast<double>(total_draws);
    out.variance_term = var_sum / static_cast<double>(total_draws);
    if (total_draws > 1) {
        const double nd = static_cast<double>(total_draws);
        const double exp_var = std::max(0.0, (exp_sumsq - exp_sum * exp_sum / nd) / (nd - 1.0));
        const double var_var = std::max(0.0, (var_sumsq - var_sum * var_sum / nd) / (nd - 1.0));
        out.exp_se = std::sqrt(exp_var / nd);
        out.var_se = std::sqrt(var_var / nd);
    }
    return out;
}

AzumaReport azuma_diagnostic(std::span<const double> per_episode_zeta_sums) {
    if (per_episode_zeta_sums.size() < 50)
        throw std::domain_error("azuma_diagnostic: need at least 50 episodes");
    const std::size_t n = per_episode_zeta_sums.size();
    std::vector<double> env(n, 0.0);
    double running = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        running += per_episode_zeta_sums[i];
        peak = std::max(peak, std::abs(running));
        env[i] = peak;
    }
    AzumaReport rep;
    if (env.back() == 0.0) {
        rep.degenerate = true;
        return rep;
    }
    // geometric subsample of the envelope avoids over-weighting the tail
    std::vector<double> xs, ys;
    double t = 8.0;
    while (t <= static_cast<double>(n)) {
        const std::size_t i = static_cast<std::size_t>(t) - 1;
        if (env[i] > 0.0) {
            xs.push_back(static_cast<double>(i + 1));
            ys.push_back(env[i]);
        }
        t *= 1.2;
    }
    if (xs.size() < 5) {
        rep.degenerate = true;
        return rep;
    }
    const SlopeFit fit = fit_loglog_slope(xs, ys);
    rep.slope = fit.slope;
    rep.slope_stderr = fit.slope_stderr;
    rep.degenerate = fit.degenerate;
    return rep;
}

ExponentFit exponent_fit(std::span<const double> cumulative_regret, int window) {
    ExponentFit out;
    const int n = static_cast<int>(cumulative_regret.size());
    const int start = std::max(0, n - std::max(3, window));
    std::vector<double> xs, ys;
    for (int i = start; i < n; ++i) {
        if (cumulative_regret[static_cast<std::size_t>(i)] > 0.0) {
            xs.push_back(static_cast<double>(i + 1));
            ys.push_back(cumulative_regret[static_cast<std::size_t>(i)]);
        }
    }
    const SlopeFit fit = fit_loglog_slope(xs, ys);
    out.slope = fit.slope;
    out.stderr_ = fit.slope_stderr;
    out.band_lo = fit.slope - 2.0 * fit.slope_stderr;
    out.band_hi = fit.slope + 2.0 * fit.slope_stderr;
    out.points = fit.n;
    out.degenerate = fit.degenerate;
    return out;
}

void RegretLedger::append(EpisodeRow row) {
    row.cum_regret = (rows_.empty() ? 0.0 : rows_.back().cum_regret) + row.regret;
    rows_.push_back(std::move(row));
}

std::vector<double> RegretLedger::cumulative_series() const {
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r.cum_regret);
    return out;
}

namespace {

void put_double(std::string& line, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

void put_optional(std::string& line, double v) {
    if (!std::isnan(v)) put_double(line, v);
}

}  // namespace

void RegretLedger::write_csv(std::ostream& os) const {
    const std::size_t d_s = rows_.empty() ? 1 : rows_.front().initial_state.size();
    os << "t";
    for (std::size_t i = 0; i < d_s; ++i) os << ",s1_" << i;
    os << ",v_star,v_realized,regret,cum_regret,epsilon,t_tilde,term_i,term_ii,td_l2_max_h,min_occ,"
          "gap_h1\n";
    std::string line;
    for (const auto& r : rows_) {
        line.clear();
        line += std::to_string(r.t);
        for (double c : r.initial_state) {
            line += ',';
            put_double(line, c);
        }
        line += ',';
        put_double(line, r.v_star);
        line += ',';
        put_double(line, r.v_realized);
        line += ',';
        put_double(line, r.regret);
        line += ',';
        put_double(line, r.cum_regret);
        line += ',';
        put_double(line, r.epsilon);
        line += ',';
        line += std::to_string(r.t_tilde);
        line += ',';
        put_optional(line, r.term_i);
        line += ',';
        put_optional(line, r.term_ii);
        line += ',';
        put_optional(line, r.td_l2_max_h);
        line += ',';
        put_optional(line, r.min_occ);
        line += ',';
        put_optional(line, r.gap_h1);
        line += '\n';
        os << line;
    }
}

}  // namespace nvi
