#pragma once

#include <cstddef>
#include <vector>

#include "ocvar/random.hpp"

namespace ocvar {

/// Stationary policy: one probability row over actions per state.
class PolicyTable {
  public:
    /// Rows must be nonnegative and sum to 1 within 1e-9.
    PolicyTable(std::size_t n_states, std::size_t n_actions, std::vector<double> probs);

    static PolicyTable deterministic(std::size_t n_states, std::size_t n_actions,
                                     const std::vector<std::size_t>& actions);
    static PolicyTable uniform(std::size_t n_states, std::size_t n_actions);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }
    double prob(std::size_t s, std::size_t a) const { return probs_[s * n_actions_ + a]; }
    std::vector<double> row(std::size_t s) const;
    std::size_t sample(std::size_t s, Rng& rng) const;
    /// Action with the largest probability (lowest index on ties).
    std::size_t mode(std::size_t s) const;

  private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<double> probs_;
};

}  // namespace ocvar
