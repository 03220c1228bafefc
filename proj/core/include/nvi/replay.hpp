#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "nvi/mdp.hpp"
#include "nvi/rng.hpp"

namespace nvi {

/// Per-step transition store: D_h grows by exactly one transition per stored
/// episode, so episode tau's step-h tuple is D_h[tau] and one shared index set
/// addresses aligned samples across every h.
class ReplayMemory {
  public:
    explicit ReplayMemory(int horizon, int action_count, std::size_t capacity = 0)
        : horizon_(horizon),
          action_count_(action_count),
          capacity_(capacity),
          store_(static_cast<std::size_t>(horizon)) {}

    int horizon() const { return horizon_; }
    int action_count() const { return action_count_; }
    // Episodes currently held (|D_h| for every h).
    int size() const { return horizon_ > 0 ? static_cast<int>(store_[0].size()) : 0; }

    /// Stores one episode: exactly one transition per h in [1, H], FIFO
    /// eviction past capacity. Throws std::domain_error on a bad episode.
    void store(const std::vector<Transition>& episode_transitions);

    /// t_tilde distinct episode indices, uniform without replacement.
    std::vector<int> sample_indices(int t_tilde, Rng& rng) const;

    const Transition& at(int h, int episode_index) const {
        return store_[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(episode_index)];
    }

    /// Uniform without-replacement mini-batch from D_h.
    std::vector<Transition> sample_minibatch(int h, int t_tilde, Rng& rng) const;

    std::vector<Transition> gather(int h, const std::vector<int>& indices) const;

  private:
    int horizon_;
    int action_count_;
    std::size_t capacity_;  // 0 = unbounded
    std::vector<std::deque<Transition>> store_;
};

/// Mini-batch size t_tilde = ceil(rho * t), clamped to [1, t].
int minibatch_size(int t, double rho);

}  // namespace nvi
