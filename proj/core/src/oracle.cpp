#include "nvi/oracle.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
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

}  // namespace

double TabularMdp::reward_at(int h, int s, int a) const {
    return reward[qidx(state_count(), action_count, h, s, a)];
}

std::span<const double> TabularMdp::row(int h, int s, int a) const {
    const std::size_t S = static_cast<std::size_t>(state_count());
    return {transition.data() + qidx(state_count(), action_count, h, s, a) * S, S};
}

int TabularMdp::nearest_state(std::span<const double> x) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int s = 0; s < state_count(); ++s) {
        const auto& c = states[static_cast<std::size_t>(s)];
        double d2 = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double diff = c[i] - x[i];
            d2 += diff * diff;
        }
        if (d2 < best_d) {
            best_d = d2;
            best = s;
        }
    }
    return best;
}

void TabularMdp::validate() const {
    const int S = state_count();
    if (S < 1 || horizon < 1 || action_count < 1)
        throw std::invalid_argument("TabularMdp: empty state/action/horizon");
    if (reward.size() != static_cast<std::size_t>(horizon) * S * action_count ||
        transition.size() != static_cast<std::size_t>(horizon) * S * action_count * S)
        throw std::invalid_argument("TabularMdp: table shape mismatch");
    for (double r : reward) {
        if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("TabularMdp: reward outside [0,1]");
    }
    for (int h = 1; h <= horizon; ++h) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < action_count; ++a) {
                double sum = 0.0;
                for (double p : row(h, s, a)) {
                    if (p < 0.0) throw std::invalid_argument("TabularMdp: negative probability");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-9)
                    throw std::invalid_argument("TabularMdp: transition row does not sum to 1");
            }
        }
    }
}

double ValueTables::q_at(int h, int s, int a) const { return q[qidx(state_count, action_count, h, s, a)]; }
double ValueTables::v_at(int h, int s) const {
    return v[static_cast<std::size_t>(h - 1) * state_count + static_cast<std::size_t>(s)];
}
double PolicyTables::q_at(int h, int s, int a) const { return q[qidx(state_count, action_count, h, s, a)]; }
double PolicyTables::v_at(int h, int s) const {
    return v[static_cast<std::size_t>(h - 1) * state_count + static_cast<std::size_t>(s)];
}

TabularMdp discretize(const MdpSpec& mdp, int resolution, int mc_samples, Rng& rng,
                      long long cell_cap) {
    if (resolution < 1) throw std::invalid_argument("discretize: resolution must be >= 1");
    if (mc_samples < 1) throw std::invalid_argument("discretize: mc_samples must be >= 1");

    TabularMdp tab;
    tab.action_count = mdp.action_count;
    tab.horizon = mdp.horizon;

    if (mdp.tabular) {
        // already tabular: copy the embedded tables bit-exactly
        tab.states = mdp.tabular->states;
        tab.reward = mdp.tabular->reward;
        tab.transition = mdp.tabular->transition;
        return tab;
    }

    long long cells = 1;
    for (int i = 0; i < mdp.state_dim; ++i) {
        cells *= resolution;
        if (cells > cell_cap) throw capacity_error("discretize: cell cap exceeded");
    }
    const int S = static_cast<int>(cells);
    tab.states.resize(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
        State center(static_cast<std::size_t>(mdp.state_dim));
        int rem = s;
        for (int i = 0; i < mdp.state_dim; ++i) {
            center[static_cast<std::size_t>(i)] = (rem % resolution + 0.5) / resolution;
            rem /= resolution;
        }
        tab.states[static_cast<std::size_t>(s)] = std::move(center);
    }
    auto cell_of = [&](std::span<const double> x) {
        int idx = 0;
        for (int i = mdp.state_dim - 1; i >= 0; --i) {
            int c = static_cast<int>(x[static_cast<std::size_t>(i)] * resolution);
            c = std::clamp(c, 0, resolution - 1);
            idx = idx * resolution + c;
        }
        return idx;
    };

    const int A = mdp.action_count;
    tab.reward.resize(static_cast<std::size_t>(mdp.horizon) * S * A);
    tab.transition.assign(static_cast<std::size_t>(mdp.horizon) * S * A * S, 0.0);
    for (int h = 1; h <= mdp.horizon; ++h) {
        for (int s = 0; s < S; ++s) {
            const auto& center = tab.states[static_cast<std::size_t>(s)];
            for (int a = 0; a < A; ++a) {
                tab.reward[qidx(S, A, h, s, a)] = mdp.reward(h, center, a);
                double* prow = tab.transition.data() + qidx(S, A, h, s, a) * S;
                for (int i = 0; i < mc_samples; ++i) {
                    const State next = mdp.transition(h, center, a, rng);
                    prow[cell_of(next)] += 1.0;
                }
                for (int sp = 0; sp < S; ++sp) prow[sp] /= mc_samples;
            }
        }
    }
    return tab;
}

std::vector<double> bellman_backup(const TabularMdp& tab, std::span<const double> v_next, int h) {
    const int S = tab.state_count();
    const int A = tab.action_count;
    if (static_cast<int>(v_next.size()) != S)
        throw std::invalid_argument("bellman_backup: v_next has wrong length");
    std::vector<double> q(static_cast<std::size_t>(S) * A);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double cont = 0.0;
            const auto prow = tab.row(h, s, a);
            for (int sp = 0; sp < S; ++sp) cont += prow[static_cast<std::size_t>(sp)] * v_next[static_cast<std::size_t>(sp)];
            q[static_cast<std::size_t>(s) * A + static_cast<std::size_t>(a)] =
                tab.reward_at(h, s, a) + cont;
        }
    }
    return q;
}

ValueTables solve_optimal(const TabularMdp& tab) {
    const int S = tab.state_count();
    const int A = tab.action_count;
    const int H = tab.horizon;
    ValueTables out;
    out.horizon = H;
    out.state_count = S;
    out.action_count = A;
    out.q.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    out.v.assign(static_cast<std::size_t>(H + 1) * S, 0.0);

    std::vector<double> v_next(static_cast<std::size_t>(S), 0.0);
    for (int h = H; h >= 1; --h) {
        const auto qh = bellman_backup(tab, v_next, h);
        for (int s = 0; s < S; ++s) {
            double best = qh[static_cast<std::size_t>(s) * A];
            for (int a = 1; a < A; ++a)
                best = std::max(best, qh[static_cast<std::size_t>(s) * A + static_cast<std::size_t>(a)]);
            out.v[static_cast<std::size_t>(h - 1) * S + static_cast<std::size_t>(s)] = best;
            v_next[static_cast<std::size_t>(s)] = best;
        }
        std::copy(qh.begin(), qh.end(),
                  out.q.begin() + static_cast<std::ptrdiff_t>(qidx(S, A, h, 0, 0)));
    }
    return out;
}

PolicyTables policy_value(const TabularMdp& tab, const PolicyMatrix& policy) {
    const int S = tab.state_count();
    const int A = tab.action_count;
    const int H = tab.horizon;
    if (policy.size() != static_cast<std::size_t>(H) * S * A)
        throw std::domain_error("policy_value: policy shape mismatch");
    for (int h = 1; h <= H; ++h) {
        for (int s = 0; s < S; ++s) {
            double sum = 0.0;
            for (int a = 0; a < A; ++a) {
                const double p = policy[qidx(S, A, h, s, a)];
                if (p < -1e-12) throw std::domain_error("policy_value: negative action probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::domain_error("policy_value: policy row does not sum to 1");
        }
    }

    PolicyTables out;
    out.horizon = H;
    out.state_count = S;
    out.action_count = A;
    out.q.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    out.v.assign(static_cast<std::size_t>(H + 1) * S, 0.0);

    std::vector<double> v_next(static_cast<std::size_t>(S), 0.0);
    for (int h = H; h >= 1; --h) {
        const auto qh = bellman_backup(tab, v_next, h);
        for (int s = 0; s < S; ++s) {
            double vs = 0.0;
            for (int a = 0; a < A; ++a)
                vs += policy[qidx(S, A, h, s, a)] * qh[static_cast<std::size_t>(s) * A + static_cast<std::size_t>(a)];
            out.v[static_cast<std::size_t>(h - 1) * S + static_cast<std::size_t>(s)] = vs;
            v_next[static_cast<std::size_t>(s)] = vs;
        }
        std::copy(qh.begin(), qh.end(),
                  out.q.begin() + static_cast<std::ptrdiff_t>(qidx(S, A, h, 0, 0)));
    }
    return out;
}

PolicyMatrix greedy_policy(const TabularMdp& tab, std::span<const double> q) {
    const int S = tab.state_count();
    const int A = tab.action_count;
    const int H = tab.horizon;
    if (static_cast<int>(q.size()) != H * S * A)
        throw std::invalid_argument("greedy_policy: q shape mismatch");
    PolicyMatrix pi(static_cast<std::size_t>(H) * S * A, 0.0);
    for (int h = 1; h <= H; ++h) {
        for (int s = 0; s < S; ++s) {
            int best = 0;
            for (int a = 1; a < A; ++a) {
                if (q[qidx(S, A, h, s, a)] > q[qidx(S, A, h, s, best)]) best = a;
            }
            pi[qidx(S, A, h, s, best)] = 1.0;
        }
    }
    return pi;
}

std::vector<double> apply_bellman_to_learned(const TabularMdp& tab,
                                             std::span<const double> v_learned, int h) {
    for (double v : v_learned) {
        if (!std::isfinite(v))
            throw numeric_error("apply_bellman_to_learned: non-finite learned value");
    }
    return bellman_backup(tab, v_learned, h);
}

std::vector<double> apply_bellman_to_learned(
    const TabularMdp& tab, const std::function<double(std::span<const double>)>& v_learned, int h) {
    std::vector<double> v(static_cast<std::size_t>(tab.state_count()));
    for (int s = 0; s < tab.state_count(); ++s)
        v[static_cast<std::size_t>(s)] = v_learned(tab.states[static_cast<std::size_t>(s)]);
    return apply_bellman_to_learned(tab, v, h);
}

void dump_value_tables_csv(std::ostream& os, const TabularMdp& tab, const ValueTables& values) {
    os << "h,state_index,action,Q,V\n";
    for (int h = 1; h <= tab.horizon; ++h) {
        for (int s = 0; s < tab.state_count(); ++s) {
            for (int a = 0; a < tab.action_count; ++a) {
                os << h << ',' << s << ',' << a << ',' << values.q_at(h, s, a) << ','
                   << values.v_at(h, s) << '\n';
            }
        }
    }
}

}  // namespace nvi
