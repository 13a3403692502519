#include "ocvar/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ocvar {
namespace {

std::size_t epsilon_greedy(std::size_t greedy, std::size_t n_actions, double epsilon, Rng& rng) {
    if (epsilon > 0.0 && uniform01(rng) < epsilon)
        return std::uniform_int_distribution<std::size_t>(0, n_actions - 1)(rng);
    return greedy;
}

const PolicyTable& evaluation_policy(const AgentConfig& cfg) {
    if (!cfg.evaluation_policy) throw std::invalid_argument("evaluation mode needs a policy");
    return *cfg.evaluation_policy;
}

// Behaviour action at a non-terminal state; also returns the successor
// distribution the backup should transport when the state is a successor.
struct Selection {
    std::size_t executed;
    CategoricalDistribution target;
};

Selection select(const AgentState& state, std::size_t s, const AgentConfig& cfg, long episode,
                 Rng& rng) {
    const auto& table = state.table;
    if (cfg.mode == AgentMode::kEvaluation) {
        const std::size_t a = evaluation_policy(cfg).sample(s, rng);
        return {a, optimism_op(table.at(s, a), cfg.c, state.counts.effective_count(s, a))};
    }
    if (cfg.exploration == Exploration::kOptimistic) {
        auto choice = optimistic_action(table, state.counts, s, cfg);
        return {choice.action, std::move(choice.distributions[choice.action])};
    }
    const std::size_t greedy = greedy_action(table, s, cfg.risk_alpha);
    const double eps = epsilon_for(cfg.epsilon, state.total_steps, episode);
    const std::size_t executed = epsilon_greedy(greedy, table.n_actions(), eps, rng);
    // Exploratory actions are executed but not bootstrapped from.
    return {executed, optimism_op(table.at(s, greedy), cfg.c,
                                  state.counts.effective_count(s, greedy))};
}

}  // namespace

double epsilon_at(const EpsilonSchedule& schedule, double index) {
    const double value = std::visit(
        [&](const auto& sch) -> double {
            using T = std::decay_t<decltype(sch)>;
            if constexpr (std::is_same_v<T, LinearSchedule>) {
                if (sch.n_steps <= 0 || index >= static_cast<double>(sch.n_steps)) return sch.end;
                const double frac = std::max(index, 0.0) / static_cast<double>(sch.n_steps);
                return sch.start + frac * (sch.end - sch.start);
            } else {
                return sch.eps0 * std::pow(sch.decay, std::max(index, 0.0) / sch.step);
            }
        },
        schedule);
    return std::clamp(value, 0.0, 1.0);
}

double epsilon_for(const EpsilonSchedule& schedule, long total_steps, long episode) {
    const bool linear = std::holds_alternative<LinearSchedule>(schedule);
    return epsilon_at(schedule, static_cast<double>(linear ? total_steps : episode));
}

void AgentConfig::validate() const {
    if (!(risk_alpha > 0.0 && risk_alpha <= 1.0))
        throw std::invalid_argument("risk_alpha must lie in (0, 1]");
    if (!(c >= 0.0)) throw std::invalid_argument("c must be nonnegative");
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
    if (!(density_learning_rate >= 0.0)) throw std::invalid_argument("density learning rate < 0");
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
    if (mode == AgentMode::kEvaluation && !evaluation_policy)
        throw std::invalid_argument("evaluation mode needs an evaluation policy");
    std::visit(
        [](const auto& sch) {
            using T = std::decay_t<decltype(sch)>;
            if constexpr (std::is_same_v<T, LinearSchedule>) {
                if (sch.start < 0 || sch.start > 1 || sch.end < 0 || sch.end > 1 || sch.n_steps < 0)
                    throw std::invalid_argument("invalid linear epsilon schedule");
            } else {
                if (sch.eps0 < 0 || sch.eps0 > 1 || sch.decay <= 0 || sch.decay > 1 ||
                    !(sch.step > 0))
                    throw std::invalid_argument("invalid exponential epsilon schedule");
            }
        },
        epsilon);
}

CountSource::CountSource(CountMode mode, std::size_t n_states, std::size_t n_actions,
                         double density_learning_rate, double kappa)
    : mode_(mode), visits_(n_states, n_actions) {
    if (mode != CountMode::kExact)
        density_.emplace(n_states, n_actions, density_learning_rate, kappa);
}

double CountSource::effective_count(std::size_t s, std::size_t a) const {
    if (mode_ == CountMode::kExact) return static_cast<double>(std::max(visits_.get(s, a), 1L));
    const auto& model = *density_;
    const double pg = mode_ == CountMode::kPseudoExact ? prediction_gain_exact(model, s, a)
                                                       : prediction_gain_taylor(model, s, a);
    return pseudo_count(pg, model.kappa(), std::max(model.train_steps(), 1L));
}

void CountSource::observe(std::size_t s, std::size_t a) {
    visits_.increment(s, a);
    if (density_) density_->train_step(s, a);
}

AgentState AgentState::create(const AgentConfig& cfg, std::size_t n_states, std::size_t n_actions) {
    cfg.validate();
    return AgentState{ReturnTable(cfg.grid, n_states, n_actions),
                      CountSource(cfg.count_source, n_states, n_actions, cfg.density_learning_rate,
                                  cfg.kappa)};
}

OptimisticChoice optimistic_action(const ReturnTable& table, const CountSource& counts,
                                   std::size_t s, const AgentConfig& cfg) {
    OptimisticChoice out;
    out.distributions.reserve(table.n_actions());
    out.cvars.reserve(table.n_actions());
    for (std::size_t a = 0; a < table.n_actions(); ++a) {
        out.distributions.push_back(optimism_op(table.at(s, a), cfg.c, counts.effective_count(s, a)));
        out.cvars.push_back(cvar(out.distributions.back(), cfg.risk_alpha));
        if (out.cvars.back() > out.cvars[out.action]) out.action = a;
    }
    return out;
}

std::size_t greedy_action(const ReturnTable& table, std::size_t s, double alpha) {
    std::size_t best = 0;
    double best_value = cvar(table.at(s, 0), alpha);
    for (std::size_t a = 1; a < table.n_actions(); ++a) {
        const double v = cvar(table.at(s, a), alpha);
        if (v > best_value) {
            best_value = v;
            best = a;
        }
    }
    return best;
}

std::optional<std::size_t> update_from_transition(AgentState& state, const Transition& tr,
                                                  const AgentConfig& cfg, Rng& rng) {
    const auto& grid = state.table.grid();
    if (!(grid == cfg.grid)) throw std::invalid_argument("agent table grid differs from config");
    std::vector<double> m;
    std::optional<std::size_t> next;
    if (tr.done) {
        m = bellman_target(terminal_distribution(grid), tr.r, 0.0, grid);
    } else {
        auto sel = select(state, tr.s_next, cfg, state.episodes, rng);
        m = bellman_target(sel.target, tr.r, cfg.gamma, grid);
        next = sel.executed;
    }
    const auto& current = state.table.at(tr.s, tr.a);
    std::vector<double> mixed(grid.size());
    for (std::size_t j = 0; j < mixed.size(); ++j)
        mixed[j] = (1.0 - cfg.beta) * current.prob(j) + cfg.beta * m[j];
    state.table.set(tr.s, tr.a, CategoricalDistribution(grid, std::move(mixed)));
    if (next) state.counts.observe(tr.s_next, *next);
    ++state.total_steps;
    return next;
}

std::size_t start_action(AgentState& state, std::size_t s, const AgentConfig& cfg, Rng& rng) {
    const std::size_t a = select(state, s, cfg, state.episodes, rng).executed;
    state.counts.observe(s, a);
    return a;
}

EpisodeResult run_episode(const TabularMDP& mdp, AgentState& state, const AgentConfig& cfg,
                          Rng& rng) {
    return run_episode(mdp, state, cfg, rng, rng);
}

EpisodeResult run_episode(const TabularMDP& mdp, AgentState& state, const AgentConfig& cfg,
                          Rng& env_rng, Rng& agent_rng) {
    if (state.table.n_states() != mdp.n_states || state.table.n_actions() != mdp.n_actions)
        throw std::invalid_argument("agent table does not match the MDP");
    EpisodeResult result;
    result.epsilon = cfg.exploration == Exploration::kEpsilonGreedy
                         ? epsilon_for(cfg.epsilon, state.total_steps, state.episodes)
                         : 0.0;
    const std::size_t cap = cfg.step_cap > 0 ? cfg.step_cap : 10 * mdp.n_states;
    std::size_t s = mdp.initial_state;
    if (mdp.terminal[s]) {
        ++state.episodes;
        return result;
    }
    std::size_t a = start_action(state, s, cfg, agent_rng);
    double discount = 1.0;
    while (true) {
        const auto tr = sample_transition(mdp, s, a, env_rng, cfg.grid);
        result.undiscounted_return += tr.r;
        result.discounted_return += discount * tr.r;
        discount *= cfg.gamma;
        ++result.steps;
        const auto next = update_from_transition(state, tr, cfg, agent_rng);
        if (!next) break;
        if (result.steps >= cap) {
            result.truncated = true;
            break;
        }
        s = tr.s_next;
        a = *next;
    }
    ++state.episodes;
    return result;
}

}  // namespace ocvar
