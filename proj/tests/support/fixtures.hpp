#pragma once

// Shared test fixtures: the 2-state chain benchmark, random tiny tabular
// MDPs, an independent exhaustive-enumeration solver, and oracle-backed
// Q-stacks for injection hooks.

#include <cmath>
#include <cstdint>
#include <vector>

#include "nvi/agent.hpp"
#include "nvi/mdp.hpp"
#include "nvi/oracle.hpp"
#include "nvi/rng.hpp"

namespace fixtures {

// Deterministic 2-state chain, H=2, A=2:
//   h=1: action 0 -> state 1, reward 0; action 1 -> state 0, reward 0.4
//   h=2: reward(s, a) = s; self-loop.
// Optimal: Q*_1(0, a0) = 1.0, Q*_1(0, a1) = 0.4, V*_1(0) = 1.0.
inline nvi::TabularMdp chain_mdp() {
    nvi::TabularMdp tab;
    tab.horizon = 2;
    tab.action_count = 2;
    tab.states = {{0.25}, {0.75}};
    const int S = 2, A = 2;
    tab.reward.assign(2 * S * A, 0.0);
    tab.transition.assign(2 * S * A * S, 0.0);
    auto r = [&](int h, int s, int a) -> double& {
        return tab.reward[((h - 1) * S + s) * A + a];
    };
    auto p = [&](int h, int s, int a, int sp) -> double& {
        return tab.transition[(((h - 1) * S + s) * A + a) * S + sp];
    };
    for (int s = 0; s < S; ++s) {
        r(1, s, 0) = 0.0;
        p(1, s, 0, 1) = 1.0;
        r(1, s, 1) = 0.4;
        p(1, s, 1, 0) = 1.0;
        for (int a = 0; a < A; ++a) {
            r(2, s, a) = static_cast<double>(s);
            p(2, s, a, s) = 1.0;
        }
    }
    return tab;
}

// The same chain as a continuous-state MdpSpec (cell centers 0.25 / 0.75).
inline nvi::MdpSpec chain_mdp_spec() {
    auto payload = std::make_shared<nvi::TabularPayload>();
    const nvi::TabularMdp tab = chain_mdp();
    payload->states = tab.states;
    payload->action_count = tab.action_count;
    payload->horizon = tab.horizon;
    payload->reward = tab.reward;
    payload->transition = tab.transition;

    nvi::MdpSpec mdp;
    mdp.horizon = tab.horizon;
    mdp.action_count = tab.action_count;
    mdp.state_dim = 1;
    mdp.tabular = payload;
    mdp.reward = [payload](int h, std::span<const double> s, int a) {
        return payload->reward_at(h, payload->nearest_state(s), a);
    };
    mdp.transition = [payload](int h, std::span<const double> s, int a, nvi::Rng& rng) {
        const auto row = payload->row(h, payload->nearest_state(s), a);
        const double u = rng.uniform();
        double acc = 0.0;
        int pick = payload->state_count() - 1;
        for (int sp = 0; sp < payload->state_count(); ++sp) {
            acc += row[static_cast<std::size_t>(sp)];
            if (u < acc) {
                pick = sp;
                break;
            }
        }
        return payload->states[static_cast<std::size_t>(pick)];
    };
    mdp.initial_state = [payload](nvi::Rng& rng) {
        return payload->states[static_cast<std::size_t>(rng.uniform_int(payload->state_count()))];
    };
    return mdp;
}

// Random tabular MDP with Dirichlet(1,..,1) transition rows.
inline nvi::TabularMdp random_tabular(int S, int A, int H, std::uint64_t seed) {
    nvi::Rng rng(nvi::hash64(seed, "random-tabular"));
    nvi::TabularMdp tab;
    tab.horizon = H;
    tab.action_count = A;
    tab.states.resize(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) tab.states[static_cast<std::size_t>(s)] = {(s + 0.5) / S};
    tab.reward.resize(static_cast<std::size_t>(H) * S * A);
    for (auto& r : tab.reward) r = rng.uniform();
    tab.transition.resize(static_cast<std::size_t>(H) * S * A * S);
    for (std::size_t row = 0; row < static_cast<std::size_t>(H) * S * A; ++row) {
        double total = 0.0;
        double* p = tab.transition.data() + row * S;
        for (int sp = 0; sp < S; ++sp) {
            p[sp] = -std::log(1.0 - rng.uniform());
            total += p[sp];
        }
        for (int sp = 0; sp < S; ++sp) p[sp] /= total;
    }
    return tab;
}

// Independent brute-force solver: enumerates all A^{S*H} deterministic
// policies with its own recursion (no reuse of the oracle under test) and
// maximizes per (h, state).
inline nvi::ValueTables enumerate_optimal(const nvi::TabularMdp& tab) {
    const int S = tab.state_count();
    const int A = tab.action_count;
    const int H = tab.horizon;
    const int slots = S * H;
    long long total = 1;
    for (int i = 0; i < slots; ++i) total *= A;

    nvi::ValueTables best;
    best.horizon = H;
    best.state_count = S;
    best.action_count = A;
    best.q.assign(static_cast<std::size_t>(H) * S * A, -1.0);
    best.v.assign(static_cast<std::size_t>(H + 1) * S, 0.0);
    std::vector<double> vbest(static_cast<std::size_t>((H + 1)) * S, -1.0);
    for (int s = 0; s < S; ++s) vbest[static_cast<std::size_t>(H) * S + s] = 0.0;

    std::vector<int> act(static_cast<std::size_t>(slots), 0);
    std::vector<double> v(static_cast<std::size_t>(S)), vn(static_cast<std::size_t>(S));
    for (long long code = 0; code < total; ++code) {
        long long rem = code;
        for (int i = 0; i < slots; ++i) {
            act[static_cast<std::size_t>(i)] = static_cast<int>(rem % A);
            rem /= A;
        }
        std::fill(vn.begin(), vn.end(), 0.0);
        for (int h = H; h >= 1; --h) {
            for (int s = 0; s < S; ++s) {
                const int a = act[static_cast<std::size_t>((h - 1) * S + s)];
                double val = tab.reward[((static_cast<std::size_t>(h - 1)) * S + s) * A + a];
                const double* row =
                    tab.transition.data() + ((((static_cast<std::size_t>(h - 1)) * S + s) * A + a)) * S;
                for (int sp = 0; sp < S; ++sp) val += row[sp] * vn[static_cast<std::size_t>(sp)];
                v[static_cast<std::size_t>(s)] = val;
                // per-(h,s,a) Q candidate: reward + continuation under this policy's tail
                auto& qref = best.q[((static_cast<std::size_t>(h - 1)) * S + s) * A + a];
                if (val > qref) qref = val;
            }
            for (int s = 0; s < S; ++s) {
                auto& vref = vbest[static_cast<std::size_t>(h - 1) * S + s];
                if (v[static_cast<std::size_t>(s)] > vref) vref = v[static_cast<std::size_t>(s)];
            }
            std::swap(v, vn);
        }
    }
    best.v = vbest;
    return best;
}

// Oracle-backed stack (TabularQ per h with the per-step truncation level).
inline nvi::QStack stack_from_tables(const nvi::TabularMdp& tab, const nvi::ValueTables& values) {
    nvi::QStack stack;
    stack.horizon = tab.horizon;
    stack.action_count = tab.action_count;
    for (int h = 1; h <= tab.horizon; ++h) {
        nvi::TabularQ q;
        q.states = tab.states;
        q.action_count = tab.action_count;
        q.h_cap = static_cast<double>(tab.horizon - h + 1);
        q.values.resize(static_cast<std::size_t>(tab.state_count()) * tab.action_count);
        for (int s = 0; s < tab.state_count(); ++s) {
            for (int a = 0; a < tab.action_count; ++a) {
                q.values[static_cast<std::size_t>(s) * tab.action_count + a] = values.q_at(h, s, a);
            }
        }
        stack.entries.emplace_back(std::move(q));
    }
    return stack;
}

inline nvi::QStack constant_stack(const nvi::TabularMdp& tab, double value) {
    nvi::QStack stack;
    stack.horizon = tab.horizon;
    stack.action_count = tab.action_count;
    for (int h = 1; h <= tab.horizon; ++h) {
        nvi::TabularQ q;
        q.states = tab.states;
        q.action_count = tab.action_count;
        q.h_cap = static_cast<double>(tab.horizon - h + 1);
        q.values.assign(static_cast<std::size_t>(tab.state_count()) * tab.action_count, value);
        stack.entries.emplace_back(std::move(q));
    }
    return stack;
}

}  // namespace fixtures
