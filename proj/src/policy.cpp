#include "ocvar/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ocvar {

PolicyTable::PolicyTable(std::size_t n_states, std::size_t n_actions, std::vector<double> probs)
    : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
    if (n_states == 0 || n_actions == 0)
        throw std::invalid_argument("policy needs at least one state and one action");
    if (probs_.size() != n_states * n_actions)
        throw std::invalid_argument("policy table has the wrong number of entries");
    for (std::size_t s = 0; s < n_states; ++s) {
        double total = 0.0;
        for (std::size_t a = 0; a < n_actions; ++a) {
            const double p = probs_[s * n_actions + a];
            if (!std::isfinite(p) || p < 0.0)
                throw std::invalid_argument("policy row " + std::to_string(s) +
                                            " has a negative entry");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("policy row " + std::to_string(s) + " sums to " +
                                        std::to_string(total) + ", not 1");
    }
}

PolicyTable PolicyTable::deterministic(std::size_t n_states, std::size_t n_actions,
                                       const std::vector<std::size_t>& actions) {
    if (actions.size() != n_states)
        throw std::invalid_argument("deterministic policy needs one action per state");
    std::vector<double> p(n_states * n_actions, 0.0);
    for (std::size_t s = 0; s < n_states; ++s) {
        if (actions[s] >= n_actions) throw std::out_of_range("policy action out of range");
        p[s * n_actions + actions[s]] = 1.0;
    }
    return {n_states, n_actions, std::move(p)};
}

PolicyTable PolicyTable::uniform(std::size_t n_states, std::size_t n_actions) {
    return {n_states, n_actions,
            std::vector<double>(n_states * n_actions, 1.0 / static_cast<double>(n_actions))};
}

std::vector<double> PolicyTable::row(std::size_t s) const {
    return {probs_.begin() + static_cast<std::ptrdiff_t>(s * n_actions_),
            probs_.begin() + static_cast<std::ptrdiff_t>((s + 1) * n_actions_)};
}

std::size_t PolicyTable::sample(std::size_t s, Rng& rng) const { return sample_index(row(s), rng); }

std::size_t PolicyTable::mode(std::size_t s) const {
    std::size_t best = 0;
    for (std::size_t a = 1; a < n_actions_; ++a)
        if (prob(s, a) > prob(s, best)) best = a;
    return best;
}

}  // namespace ocvar
