#include "nvi/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nvi/errors.hpp"

namespace nvi {

void ReplayMemory::store(const std::vector<Transition>& episode_transitions) {
    if (static_cast<int>(episode_transitions.size()) != horizon_)
        throw std::domain_error("ReplayMemory::store: expected exactly one transition per step");
    std::vector<bool> seen(static_cast<std::size_t>(horizon_), false);
    for (const auto& tr : episode_transitions) {
        if (tr.h < 1 || tr.h > horizon_ || seen[static_cast<std::size_t>(tr.h - 1)])
            throw std::domain_error("ReplayMemory::store: step indices must cover [1, H] once each");
        if (tr.action < 0 || tr.action >= action_count_)
            throw std::domain_error("ReplayMemory::store: action out of range");
        seen[static_cast<std::size_t>(tr.h - 1)] = true;
    }
    for (const auto& tr : episode_transitions)
        store_[static_cast<std::size_t>(tr.h - 1)].push_back(tr);
    if (capacity_ > 0 && store_[0].size() > capacity_) {
        for (auto& dh : store_) dh.pop_front();
    }
}

std::vector<int> ReplayMemory::sample_indices(int t_tilde, Rng& rng) const {
    const int n = size();
    if (t_tilde > n)
        throw insufficient_data_error("ReplayMemory: requested " + std::to_string(t_tilde) +
                                      " samples from a store of " + std::to_string(n));
    if (t_tilde < 1) throw std::domain_error("ReplayMemory: t_tilde must be >= 1");
    return rng.sample_without_replacement(n, t_tilde);
}

std::vector<Transition> ReplayMemory::sample_minibatch(int h, int t_tilde, Rng& rng) const {
    if (h < 1 || h > horizon_) throw std::domain_error("ReplayMemory: h out of range");
    return gather(h, sample_indices(t_tilde, rng));
}

std::vector<Transition> ReplayMemory::gather(int h, const std::vector<int>& indices) const {
    std::vector<Transition> batch;
    batch.reserve(indices.size());
    for (int idx : indices) batch.push_back(at(h, idx));
    return batch;
}

int minibatch_size(int t, double rho) {
    if (t < 1) throw std::domain_error("minibatch_size: t must be >= 1");
    if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("minibatch_size: rho must be in (0,1)");
    const int raw = static_cast<int>(std::ceil(rho * t));
    return std::clamp(raw, 1, t);
}

}  // namespace nvi
