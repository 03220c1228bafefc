#include "nvi/agent.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "nvi/errors.hpp"

namespace nvi {

double TabularQ::eval_state_action(std::span<const double> state, int action) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int s = 0; s < static_cast<int>(states.size()); ++s) {
        const auto& c = states[static_cast<std::size_t>(s)];
        double d2 = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double diff = c[i] - state[i];
            d2 += diff * diff;
        }
        if (d2 < best_d) {
            best_d = d2;
            best = s;
        }
    }
    const double v =
        values[static_cast<std::size_t>(best) * action_count + static_cast<std::size_t>(action)];
    return truncate_value(v, h_cap);
}

double TabularQ::eval_feature(std::span<const double> feature) const {
    const std::size_t d_s = feature.size() - static_cast<std::size_t>(action_count);
    int action = 0;
    double best = -1.0;
    for (int a = 0; a < action_count; ++a) {
        if (feature[d_s + static_cast<std::size_t>(a)] > best) {
            best = feature[d_s + static_cast<std::size_t>(a)];
            action = a;
        }
    }
    return eval_state_action(feature.first(d_s), action);
}

double q_eval(const QEntry& q, std::span<const double> feature) {
    return std::visit(
        [&](const auto& net) -> double {
            using T = std::decay_t<decltype(net)>;
            if constexpr (std::is_same_v<T, TabularQ>) {
                return net.eval_feature(feature);
            } else {
                return net.eval(feature);
            }
        },
        q);
}

double QStack::q_value(int h, std::span<const double> state, int action) const {
    const auto f = featurize(state, action, action_count);
    return q_eval(at(h), f);
}

double QStack::value(int h, std::span<const double> state) const {
    if (h == horizon + 1) return 0.0;
    double best = 0.0;
    for (int a = 0; a < action_count; ++a) best = std::max(best, q_value(h, state, a));
    return best;
}

int QStack::greedy_action(int h, std::span<const double> state) const {
    int best = 0;
    double best_v = q_value(h, state, 0);
    for (int a = 1; a < action_count; ++a) {
        const double v = q_value(h, state, a);
        if (v > best_v) {
            best_v = v;
            best = a;
        }
    }
    return best;
}

double epsilon_schedule(long long T, double alpha, int d, int K, int H, int A, Family family,
                        double c) {
    assert(T >= 1 && d >= 1 && K >= 1 && H >= 1 && A >= 1);
    const double k2 = static_cast<double>(K) + 2.0;
    double raw = 0.0;
    if (family == Family::barron_shallow) {
        raw = c * std::pow(static_cast<double>(H), 2.0 / k2) *
              std::pow(static_cast<double>(T), -1.0 / (2.0 * k2));
    } else {
        double t_exponent = 0.0;
        if (std::isinf(alpha)) {
            t_exponent = 1.0 / k2;  // lim a->inf of 2a/((2a+d)(K+2))
        } else {
            t_exponent = 2.0 * alpha / ((2.0 * alpha + d) * k2);
        }
        raw = c * std::pow(static_cast<double>(H) * K, 2.0 / k2) *
              std::pow(static_cast<double>(A), static_cast<double>(K) / k2) *
              std::pow(static_cast<double>(T), -t_exponent);
    }
    return std::clamp(raw, 1e-4, 1.0 - 1e-4);
}

int epsilon_greedy_action(const QEntry& q_h, std::span<const double> state, double epsilon,
                          int action_count, Rng& rng) {
    assert(epsilon >= 0.0 && epsilon <= 1.0);
    if (rng.uniform() < epsilon) return rng.uniform_int(action_count);
    int best = 0;
    double best_v = q_eval(q_h, featurize(state, 0, action_count));
    for (int a = 1; a < action_count; ++a) {
        const double v = q_eval(q_h, featurize(state, a, action_count));
        if (v > best_v) {
            best_v = v;
            best = a;
        }
    }
    return best;
}

QEntry make_net_for_step(const AgentConfig& config, const ArchitecturePlan& plan, int feature_dim,
                         int horizon, int h) {
    const double cap = static_cast<double>(horizon - h + 1);
    if (plan.family == Family::barron_shallow) {
        const double budget =
            config.norm_bound > 0.0 ? config.norm_bound
                                    : 4.0 * horizon * std::sqrt(static_cast<double>(feature_dim));
        return TwoLayerNet(plan.width, feature_dim, cap, budget);
    }
    const int depth = std::max(2, plan.depth);
    const int width = std::max(2, plan.width);
    const int sparsity = std::max(depth + 2, plan.sparsity);
    return DeepReluNet(depth, width, feature_dim, cap, sparsity, plan.norm_bound,
                       hash64(config.seed, "mask", static_cast<std::uint64_t>(h)));
}

QStack backward_fit(const ReplayMemory& memory, int t, const AgentConfig& config,
                    const ArchitecturePlan& plan, const QStack* warm_from) {
    if (t < 1) throw std::domain_error("backward_fit: t must be >= 1");
    if (memory.size() < 1) throw insufficient_data_error("backward_fit: empty replay memory");
    const int H = memory.horizon();
    const int A = memory.action_count();
    const int t_tilde = minibatch_size(t, config.rho);

    // one shared index set across all h within this fitting pass
    Rng batch_rng(hash64(config.seed, "minibatch", static_cast<std::uint64_t>(t)));
    const std::vector<int> indices = memory.sample_indices(t_tilde, batch_rng);

    QStack stack;
    stack.horizon = H;
    stack.action_count = A;
    const int feature_dim = static_cast<int>(memory.at(1, indices[0]).state.size()) + A;

    // entries are built h = H..1 and reversed at the end
    std::vector<QEntry> reversed;
    reversed.reserve(static_cast<std::size_t>(H));
    for (int h = H; h >= 1; --h) {
        try {
            Dataset data;
            for (int idx : indices) {
                const Transition& tr = memory.at(h, idx);
                const auto x = featurize(tr.state, tr.action, A);
                double y = tr.reward;
                if (h < H) {
                    const QEntry& above = reversed[static_cast<std::size_t>(H - h - 1)];
                    double best = 0.0;
                    for (int a = 0; a < A; ++a)
                        best = std::max(best, q_eval(above, featurize(tr.next_state, a, A)));
                    y += best;
                }
                data.push(x, y);
            }

            QEntry net = make_net_for_step(config, plan, feature_dim, H, h);
            FitConfig fit = config.fit;
            fit.seed = hash64(config.seed, "fit",
                              static_cast<std::uint64_t>(t) * 1000ULL + static_cast<std::uint64_t>(h));
            if (fit.stop_tolerance <= 0.0)
                fit.stop_tolerance = H / std::sqrt(static_cast<double>(t_tilde));
            if (config.warm_start && warm_from && warm_from->trained()) {
                net = warm_from->at(h);
                fit.reinit = false;
            }
            std::visit(
                [&](auto& n) {
                    using T = std::decay_t<decltype(n)>;
                    if constexpr (!std::is_same_v<T, TabularQ>) {
                        fit_least_squares(n, data, fit);
                    }
                },
                net);
            reversed.push_back(std::move(net));
        } catch (const std::exception& e) {
            throw std::runtime_error("backward_fit failed at (t=" + std::to_string(t) +
                                     ", h=" + std::to_string(h) + "): " + e.what());
        }
    }
    stack.entries.assign(std::make_move_iterator(reversed.rbegin()),
                         std::make_move_iterator(reversed.rend()));
    return stack;
}

}  // namespace nvi
