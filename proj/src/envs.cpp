#include "ocvar/envs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace ocvar {
namespace {

double sample_reward(const RewardSpec& spec, Rng& rng) {
    return std::visit(
        [&](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, PointReward>) {
                return r.value;
            } else if constexpr (std::is_same_v<T, GaussianReward>) {
                if (r.stddev == 0.0) return r.mean;
                return std::normal_distribution<double>(r.mean, r.stddev)(rng);
            } else {
                std::vector<double> probs;
                probs.reserve(r.atoms.size());
                for (const auto& atom : r.atoms) probs.push_back(atom.prob);
                return r.atoms[sample_index(probs, rng)].value;
            }
        },
        spec);
}

std::vector<RewardAtom> reward_atoms(const RewardSpec& spec) {
    return std::visit(
        [](const auto& r) -> std::vector<RewardAtom> {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, PointReward>) {
                return {{r.value, 1.0}};
            } else if constexpr (std::is_same_v<T, GaussianReward>) {
                return discretize_gaussian(r.mean, r.stddev);
            } else {
                return r.atoms;
            }
        },
        spec);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

bool FiniteReward::operator==(const FiniteReward& o) const {
    return std::equal(atoms.begin(), atoms.end(), o.atoms.begin(), o.atoms.end(),
                      [](const RewardAtom& x, const RewardAtom& y) {
                          return x.value == y.value && x.prob == y.prob;
                      });
}

double reward_mean(const RewardSpec& spec) {
    double m = 0.0;
    for (const auto& [v, p] : reward_atoms(spec)) m += v * p;
    return m;
}

void TabularMDP::validate() const {
    const std::size_t pairs = n_states * n_actions;
    if (n_states == 0 || n_actions == 0) throw std::invalid_argument("MDP has no states or actions");
    if (transition.size() != pairs || reward.size() != pairs || terminal.size() != n_states)
        throw std::invalid_argument("MDP tables have inconsistent sizes");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
    if (initial_state >= n_states) throw std::invalid_argument("initial state out of range");
    for (std::size_t k = 0; k < pairs; ++k) {
        const auto& row = transition[k];
        if (row.size() != n_states)
            throw std::invalid_argument("transition row " + std::to_string(k) + " has wrong length");
        double total = 0.0;
        for (double p : row) {
            if (!std::isfinite(p) || p < 0.0)
                throw std::invalid_argument("negative transition probability in row " +
                                            std::to_string(k));
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("transition row " + std::to_string(k) + " sums to " +
                                        std::to_string(total));
        std::visit(
            [&](const auto& r) {
                using T = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<T, PointReward>) {
                    if (!std::isfinite(r.value)) throw std::invalid_argument("non-finite reward");
                } else if constexpr (std::is_same_v<T, GaussianReward>) {
                    if (!std::isfinite(r.mean) || !(r.stddev >= 0.0) || !std::isfinite(r.stddev))
                        throw std::invalid_argument("invalid gaussian reward");
                } else {
                    if (r.atoms.empty()) throw std::invalid_argument("empty finite reward");
                    double t = 0.0;
                    for (const auto& [v, p] : r.atoms) {
                        if (!std::isfinite(v) || !(p >= 0.0))
                            throw std::invalid_argument("invalid finite reward atom");
                        t += p;
                    }
                    if (std::abs(t - 1.0) > 1e-9)
                        throw std::invalid_argument("finite reward is not normalized");
                }
            },
            reward[k]);
    }
}

double MachineReplacementParams::replace_cost_mean(std::size_t t) const {
    return r_max - (static_cast<double>(t) / static_cast<double>(n)) * (r_max - r_min);
}

double MachineReplacementParams::replace_cost_stddev(std::size_t t) const {
    return 0.1 + 0.01 * static_cast<double>(t);
}

TabularMDP machine_replacement(const MachineReplacementParams& params) {
    if (params.n < 2) throw std::invalid_argument("machine replacement needs n >= 2");
    const std::size_t n = params.n;
    const std::size_t end = n;  // absorbing terminal state
    TabularMDP mdp;
    mdp.n_states = n + 1;
    mdp.n_actions = 2;
    mdp.gamma = params.gamma;
    mdp.initial_state = 0;
    mdp.terminal.assign(n + 1, false);
    mdp.terminal[end] = true;
    mdp.transition.assign(mdp.n_states * 2, std::vector<double>(mdp.n_states, 0.0));
    mdp.reward.assign(mdp.n_states * 2, PointReward{0.0});
    for (std::size_t t = 0; t < n; ++t) {
        mdp.transition[mdp.index(t, kReplace)][end] = 1.0;
        mdp.reward[mdp.index(t, kReplace)] =
            GaussianReward{-params.replace_cost_mean(t), params.replace_cost_stddev(t)};
        if (t + 1 < n) {
            mdp.transition[mdp.index(t, kKeep)][t + 1] = 1.0;
            mdp.reward[mdp.index(t, kKeep)] = GaussianReward{0.0, params.sigma_keep};
        } else {
            mdp.transition[mdp.index(t, kKeep)][end] = 1.0;
            mdp.reward[mdp.index(t, kKeep)] = GaussianReward{-params.mu_last, params.sigma_last};
        }
    }
    for (std::size_t a = 0; a < 2; ++a) mdp.transition[mdp.index(end, a)][end] = 1.0;
    mdp.validate();
    return mdp;
}

SupportGrid machine_replacement_grid() { return SupportGrid(-50.0, 50.0, 51); }

Transition sample_transition(const TabularMDP& mdp, std::size_t s, std::size_t a, Rng& rng,
                             const std::optional<SupportGrid>& clip) {
    if (s >= mdp.n_states || a >= mdp.n_actions)
        throw std::out_of_range("state or action out of range");
    if (mdp.terminal[s]) throw std::invalid_argument("cannot act from a terminal state");
    const auto& spec = mdp.reward[mdp.index(s, a)];
    double r = sample_reward(spec, rng);
    if (clip && std::holds_alternative<GaussianReward>(spec)) r = clip->clamp(r);
    const std::size_t s_next = sample_index(mdp.transition[mdp.index(s, a)], rng);
    return {s, a, r, s_next, static_cast<bool>(mdp.terminal[s_next])};
}

TabularMDP random_mdp(std::size_t n_states, std::size_t n_actions,
                      std::size_t reward_support_size, std::uint64_t seed, double gamma) {
    if (n_states == 0 || n_actions == 0 || reward_support_size == 0)
        throw std::invalid_argument("random_mdp needs positive sizes");
    Rng rng = make_stream(seed, 0x4d4450);
    TabularMDP mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.terminal.assign(n_states, false);
    mdp.initial_state = 0;
    for (std::size_t k = 0; k < n_states * n_actions; ++k) {
        mdp.transition.push_back(dirichlet_flat(n_states, rng));
        const auto probs = dirichlet_flat(reward_support_size, rng);
        FiniteReward reward;
        for (double p : probs) reward.atoms.push_back({uniform01(rng), p});
        mdp.reward.emplace_back(std::move(reward));
    }
    mdp.validate();
    return mdp;
}

EmpiricalMDP empirical_mdp(const TabularMDP& mdp, std::size_t samples_per_pair, Rng& rng) {
    if (samples_per_pair == 0) throw std::invalid_argument("samples_per_pair must be >= 1");
    mdp.validate();
    EmpiricalMDP out;
    out.n_states = mdp.n_states;
    out.n_actions = mdp.n_actions;
    out.gamma = mdp.gamma;
    out.terminal = mdp.terminal;
    const std::size_t pairs = mdp.n_states * mdp.n_actions;
    out.transition.assign(pairs, std::vector<double>(mdp.n_states, 0.0));
    out.reward.assign(pairs, {});
    out.counts.assign(pairs, static_cast<long>(samples_per_pair));
    const double weight = 1.0 / static_cast<double>(samples_per_pair);
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            const std::size_t k = mdp.index(s, a);
            if (mdp.terminal[s]) {
                out.transition[k][s] = 1.0;
                out.reward[k] = {{0.0, 1.0}};
                continue;
            }
            std::map<double, std::size_t> rewards;
            std::vector<std::size_t> next(mdp.n_states, 0);
            for (std::size_t i = 0; i < samples_per_pair; ++i) {
                const auto tr = sample_transition(mdp, s, a, rng);
                ++next[tr.s_next];
                ++rewards[tr.r];
            }
            for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
                out.transition[k][s2] = static_cast<double>(next[s2]) * weight;
            for (const auto& [value, hits] : rewards)
                out.reward[k].push_back({value, static_cast<double>(hits) * weight});
        }
    }
    return out;
}

std::vector<RewardAtom> discretize_gaussian(double mean, double stddev) {
    if (stddev == 0.0) return {{mean, 1.0}};
    constexpr int kPoints = 41;
    const double width = 8.0 * stddev / (kPoints - 1);
    std::vector<RewardAtom> atoms;
    atoms.reserve(kPoints);
    double total = 0.0;
    for (int k = 0; k < kPoints; ++k) {
        const double x = mean - 4.0 * stddev + k * width;
        const double p = normal_cdf((x + 0.5 * width - mean) / stddev) -
                         normal_cdf((x - 0.5 * width - mean) / stddev);
        atoms.push_back({x, p});
        total += p;
    }
    for (auto& atom : atoms) atom.prob /= total;
    return atoms;
}

EmpiricalMDP known_model(const TabularMDP& mdp) {
    mdp.validate();
    EmpiricalMDP out;
    out.n_states = mdp.n_states;
    out.n_actions = mdp.n_actions;
    out.gamma = mdp.gamma;
    out.terminal = mdp.terminal;
    out.transition = mdp.transition;
    out.counts.assign(mdp.n_states * mdp.n_actions, 0);
    for (const auto& spec : mdp.reward) out.reward.push_back(reward_atoms(spec));
    return out;
}

}  // namespace ocvar
