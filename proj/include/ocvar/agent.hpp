#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "ocvar/counts.hpp"
#include "ocvar/envs.hpp"
#include "ocvar/operators.hpp"
#include "ocvar/policy.hpp"
#include "ocvar/random.hpp"
#include "ocvar/returndist.hpp"

namespace ocvar {

enum class AgentMode { kControl, kEvaluation };
enum class CountMode { kExact, kPseudoExact, kPseudoTaylor };
enum class Exploration { kOptimistic, kEpsilonGreedy };

/// Linear decay from start to end over n_steps environment steps, then constant.
struct LinearSchedule {
    double start = 0.9;
    double end = 0.1;
    long n_steps = 5000;
};

/// eps0 * decay^(episode / step).
struct ExponentialSchedule {
    double eps0 = 0.9;
    double decay = 0.99;
    double step = 5.0;
};

using EpsilonSchedule = std::variant<LinearSchedule, ExponentialSchedule>;

/// Epsilon at `index` (environment steps for linear, episodes for exponential).
double epsilon_at(const EpsilonSchedule& schedule, double index);
/// Picks the index each schedule kind is defined over.
double epsilon_for(const EpsilonSchedule& schedule, long total_steps, long episode);

struct AgentConfig {
    double risk_alpha = 0.25;
    double c = 1.0;
    double beta = 0.1;
    SupportGrid grid = machine_replacement_grid();
    double gamma = 0.99;
    AgentMode mode = AgentMode::kControl;
    CountMode count_source = CountMode::kExact;
    Exploration exploration = Exploration::kOptimistic;
    EpsilonSchedule epsilon = LinearSchedule{};
    /// Density-model learning rate and pseudo-count scale for the pseudo modes.
    double density_learning_rate = 0.1;
    double kappa = 1.0;
    /// Behaviour/target policy in evaluation mode.
    std::optional<PolicyTable> evaluation_policy;
    /// Episode step cap; 0 means 10 * n_states.
    std::size_t step_cap = 0;

    void validate() const;
};

/// Exact visit counts, optionally paired with a density model for pseudo-counts.
class CountSource {
  public:
    CountSource(CountMode mode, std::size_t n_states, std::size_t n_actions,
                double density_learning_rate = 0.1, double kappa = 1.0);

    /// Count used for the optimism shift. Unvisited pairs in exact mode read as 1.
    double effective_count(std::size_t s, std::size_t a) const;
    /// Records one observation of (s, a).
    void observe(std::size_t s, std::size_t a);

    CountMode mode() const { return mode_; }
    const CountTable& visits() const { return visits_; }
    const std::optional<LogLinearDensityModel>& density() const { return density_; }

  private:
    CountMode mode_;
    CountTable visits_;
    std::optional<LogLinearDensityModel> density_;
};

struct AgentState {
    ReturnTable table;
    CountSource counts;
    long total_steps = 0;
    long episodes = 0;

    static AgentState create(const AgentConfig& cfg, std::size_t n_states, std::size_t n_actions);
};

struct OptimisticChoice {
    std::size_t action = 0;
    std::vector<CategoricalDistribution> distributions;
    std::vector<double> cvars;
};

/// Optimistic successor distributions for every action of `s` and their CVaR argmax.
OptimisticChoice optimistic_action(const ReturnTable& table, const CountSource& counts,
                                   std::size_t s, const AgentConfig& cfg);

/// Argmax of CVaR_alpha over the (non-optimistic) entries of state s.
std::size_t greedy_action(const ReturnTable& table, std::size_t s, double alpha);

/**
 * Applies one tabular update for `tr` and returns the action to execute next
 * (none for terminal transitions). The chosen successor action is recorded
 * with the count source.
 */
std::optional<std::size_t> update_from_transition(AgentState& state, const Transition& tr,
                                                  const AgentConfig& cfg, Rng& rng);

/// Action for the first step of an episode; it is recorded with the count source.
std::size_t start_action(AgentState& state, std::size_t s, const AgentConfig& cfg, Rng& rng);

struct EpisodeResult {
    double undiscounted_return = 0.0;
    double discounted_return = 0.0;
    std::size_t steps = 0;
    bool truncated = false;
    double epsilon = 0.0;
};

/// Rolls out one episode from the initial state, learning after every step.
/// Environment draws use `env_rng`; exploration and policy draws use `agent_rng`.
EpisodeResult run_episode(const TabularMDP& mdp, AgentState& state, const AgentConfig& cfg,
                          Rng& env_rng, Rng& agent_rng);
EpisodeResult run_episode(const TabularMDP& mdp, AgentState& state, const AgentConfig& cfg,
                          Rng& rng);

}  // namespace ocvar
