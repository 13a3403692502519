#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ocvar/operators.hpp"
#include "ocvar/random.hpp"
#include "ocvar/returndist.hpp"

namespace ocvar {

struct PointReward {
    double value = 0.0;
    bool operator==(const PointReward&) const = default;
};

struct GaussianReward {
    double mean = 0.0;
    double stddev = 0.0;
    bool operator==(const GaussianReward&) const = default;
};

struct FiniteReward {
    std::vector<RewardAtom> atoms;
    bool operator==(const FiniteReward& o) const;
};

using RewardSpec = std::variant<PointReward, GaussianReward, FiniteReward>;

double reward_mean(const RewardSpec& spec);

/// Finite MDP with a generative reward model per (state, action).
struct TabularMDP {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<std::vector<double>> transition;  // row s * n_actions + a
    std::vector<RewardSpec> reward;
    double gamma = 0.0;
    std::vector<bool> terminal;
    std::size_t initial_state = 0;

    std::size_t index(std::size_t s, std::size_t a) const { return s * n_actions + a; }
    /// Throws std::invalid_argument when any invariant is violated.
    void validate() const;
    bool operator==(const TabularMDP&) const = default;
};

struct Transition {
    std::size_t s = 0;
    std::size_t a = 0;
    double r = 0.0;
    std::size_t s_next = 0;
    bool done = false;
};

/// Actions of the machine-replacement chain.
inline constexpr std::size_t kReplace = 0;
inline constexpr std::size_t kKeep = 1;

struct MachineReplacementParams {
    std::size_t n = 25;
    double r_max = 23.0;
    double r_min = 10.0;
    double mu_last = 8.0;
    double gamma = 0.99;
    /// Standard deviation of the last state's keep cost.
    double sigma_last = 10.0;
    /// Standard deviation of the per-step keep cost.
    double sigma_keep = 1e-2;

    double replace_cost_mean(std::size_t t) const;
    double replace_cost_stddev(std::size_t t) const;
};

/**
 * Chain of n machine states plus one absorbing terminal state (index n).
 * Replace (action 0) terminates with reward -N(mu_t, sigma_t); keep (action 1)
 * advances with reward -N(0, sigma_keep), except at the last state where it
 * terminates with reward -N(mu_last, sigma_last).
 */
TabularMDP machine_replacement(const MachineReplacementParams& params = {});

/// Grid used for the machine-replacement experiments: [-50, 50] with 51 atoms.
SupportGrid machine_replacement_grid();

/// Samples one step. Gaussian rewards are clipped to `clip` when given.
Transition sample_transition(const TabularMDP& mdp, std::size_t s, std::size_t a, Rng& rng,
                             const std::optional<SupportGrid>& clip = std::nullopt);

/// Dirichlet(1) transition rows and finite rewards with support in [0, 1].
TabularMDP random_mdp(std::size_t n_states, std::size_t n_actions,
                      std::size_t reward_support_size, std::uint64_t seed, double gamma = 0.9);

/// Maximum-likelihood model from samples_per_pair draws of every non-terminal pair.
EmpiricalMDP empirical_mdp(const TabularMDP& mdp, std::size_t samples_per_pair, Rng& rng);

/// Exact finite model: Gaussian rewards become 41 atoms over mean +/- 4 sd.
EmpiricalMDP known_model(const TabularMDP& mdp);

/// Finite-support approximation of a Gaussian reward used by known_model.
std::vector<RewardAtom> discretize_gaussian(double mean, double stddev);

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// YAML-backed MDP documents. Malformed input raises ParseError naming the line.
TabularMDP load_mdp(const std::filesystem::path& path);
TabularMDP parse_mdp(const std::string& text);
std::string dump_mdp(const TabularMDP& mdp);
void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path);

}  // namespace ocvar
