#include "ocvar/oracle.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ocvar {
namespace {

constexpr std::size_t kBootstrapResamples = 200;

std::size_t default_horizon(double gamma) {
    if (gamma <= 0.0) return 1;
    return static_cast<std::size_t>(std::ceil(std::log(1e-10) / std::log(gamma))) + 1;
}

double sample_return(const TabularMDP& mdp, const PolicyTable& policy, Rng& rng,
                     std::size_t horizon) {
    std::size_t s = mdp.initial_state;
    double ret = 0.0;
    double discount = 1.0;
    for (std::size_t t = 0; t < horizon && !mdp.terminal[s]; ++t) {
        const auto tr = sample_transition(mdp, s, policy.sample(s, rng), rng);
        ret += discount * tr.r;
        discount *= mdp.gamma;
        s = tr.s_next;
    }
    return ret;
}

}  // namespace

double cvar_gaussian(double mu, double sigma, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("cvar_gaussian needs alpha in (0, 1)");
    if (!(sigma >= 0.0)) throw std::domain_error("cvar_gaussian needs sigma >= 0");
    if (sigma == 0.0) return mu;
    const boost::math::normal_distribution<double> unit(0.0, 1.0);
    const double z = boost::math::quantile(unit, alpha);
    return mu - sigma * boost::math::pdf(unit, z) / alpha;
}

ThresholdPolicyValue threshold_policy_value(const MachineReplacementParams& params, std::size_t k,
                                            double alpha) {
    if (k > params.n) throw std::out_of_range("threshold beyond the chain");
    const double g = params.gamma;
    ThresholdPolicyValue v;
    v.threshold = k;
    double var = 0.0;
    double discount = 1.0;
    // keep steps before the replacement (or before the final keep)
    const std::size_t keeps = k < params.n ? k : params.n - 1;
    for (std::size_t t = 0; t < keeps; ++t) {
        var += discount * discount * params.sigma_keep * params.sigma_keep;
        discount *= g;
    }
    if (k < params.n) {
        v.mean = -discount * params.replace_cost_mean(k);
        const double sd = params.replace_cost_stddev(k);
        var += discount * discount * sd * sd;
    } else {
        v.mean = -discount * params.mu_last;
        var += discount * discount * params.sigma_last * params.sigma_last;
    }
    v.stddev = std::sqrt(var);
    v.cvar = alpha >= 1.0 ? v.mean : cvar_gaussian(v.mean, v.stddev, alpha);
    return v;
}

MachineReplacementOptimum machine_replacement_optimal(const MachineReplacementParams& params,
                                                      double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("alpha must lie in (0, 1]");
    MachineReplacementOptimum out;
    for (std::size_t k = 0; k <= params.n; ++k) {
        out.policies.push_back(threshold_policy_value(params, k, alpha));
        if (k == 0 || out.policies.back().cvar > out.best.cvar) out.best = out.policies.back();
    }
    return out;
}

PolicyTable threshold_policy(const MachineReplacementParams& params, std::size_t k) {
    std::vector<std::size_t> actions(params.n + 1, kKeep);
    for (std::size_t s = 0; s < params.n; ++s)
        if (s >= k) actions[s] = kReplace;
    actions[params.n] = kReplace;
    return PolicyTable::deterministic(params.n + 1, 2, actions);
}

std::size_t first_replace_state(const PolicyTable& policy, const MachineReplacementParams& params) {
    for (std::size_t s = 0; s < params.n; ++s)
        if (policy.mode(s) == kReplace) return s;
    return params.n;
}

double empirical_cvar(std::vector<double> samples, double alpha) {
    if (samples.empty()) throw std::invalid_argument("empirical_cvar needs samples");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("alpha must lie in (0, 1]");
    const auto k = std::min<std::size_t>(
        samples.size(),
        static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(samples.size()) - 1e-9)));
    const auto tail = std::max<std::size_t>(k, 1);
    std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(tail - 1),
                     samples.end());
    double total = 0.0;
    for (std::size_t i = 0; i < tail; ++i) total += samples[i];
    return total / static_cast<double>(tail);
}

MonteCarloEstimate monte_carlo_cvar(const TabularMDP& mdp, const PolicyTable& policy,
                                    double alpha, std::size_t episodes, Rng& rng,
                                    std::size_t horizon) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("alpha must lie in (0, 1]");
    const auto needed = static_cast<std::size_t>(std::ceil(10.0 / alpha));
    if (episodes < needed)
        throw std::invalid_argument("monte_carlo_cvar needs at least " + std::to_string(needed) +
                                    " episodes");
    if (horizon == 0) horizon = default_horizon(mdp.gamma);
    std::vector<double> returns(episodes);
    for (auto& g : returns) g = sample_return(mdp, policy, rng, horizon);

    MonteCarloEstimate out;
    out.estimate = empirical_cvar(returns, alpha);
    out.mean = std::accumulate(returns.begin(), returns.end(), 0.0) /
               static_cast<double>(episodes);
    std::vector<double> resample(episodes);
    std::uniform_int_distribution<std::size_t> pick(0, episodes - 1);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t b = 0; b < kBootstrapResamples; ++b) {
        for (auto& x : resample) x = returns[pick(rng)];
        const double v = empirical_cvar(resample, alpha);
        sum += v;
        sum_sq += v * v;
    }
    const double n = static_cast<double>(kBootstrapResamples);
    const double mean = sum / n;
    out.standard_error = std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)));
    return out;
}

ReturnTable exact_policy_eval(const EmpiricalMDP& model, const PolicyTable& policy,
                              const SupportGrid& grid, double tol, std::size_t max_iter) {
    FixedPointOptions opts;
    opts.c = 0.0;
    opts.tol = tol;
    opts.max_iter = max_iter;
    return fixed_point(model, policy, grid, opts).table;
}

ReturnTable exact_policy_eval(const TabularMDP& mdp, const PolicyTable& policy,
                              const SupportGrid& grid, double tol, std::size_t max_iter) {
    return exact_policy_eval(known_model(mdp), policy, grid, tol, max_iter);
}

SupportGrid return_grid(const EmpiricalMDP& model, std::size_t n_atoms) {
    double lo = 0.0, hi = 0.0;
    for (const auto& atoms : model.reward) {
        for (const auto& [v, p] : atoms) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double scale = 1.0 / (1.0 - model.gamma);
    if (hi == lo) hi = lo + 1.0;
    return SupportGrid(lo * scale, hi * scale, n_atoms);
}

EnumerationResult enumerate_deterministic_policies(const TabularMDP& mdp, double alpha,
                                                   std::size_t n_atoms, std::size_t max_policies) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("alpha must lie in (0, 1]");
    std::vector<std::size_t> free_states;
    for (std::size_t s = 0; s < mdp.n_states; ++s)
        if (!mdp.terminal[s]) free_states.push_back(s);
    double total = 1.0;
    for (std::size_t i = 0; i < free_states.size(); ++i) {
        total *= static_cast<double>(mdp.n_actions);
        if (total > static_cast<double>(max_policies))
            throw std::invalid_argument("too many deterministic policies to enumerate (" +
                                        std::to_string(mdp.n_actions) + "^" +
                                        std::to_string(free_states.size()) + " > " +
                                        std::to_string(max_policies) + ")");
    }
    const auto model = known_model(mdp);
    const auto grid = return_grid(model, n_atoms);
    EnumerationResult out;
    std::vector<std::size_t> actions(mdp.n_states, 0);
    const auto count = static_cast<std::size_t>(total);
    for (std::size_t code = 0; code < count; ++code) {
        std::size_t rest = code;
        for (auto s : free_states) {
            actions[s] = rest % mdp.n_actions;
            rest /= mdp.n_actions;
        }
        const auto policy = PolicyTable::deterministic(mdp.n_states, mdp.n_actions, actions);
        const auto table = exact_policy_eval(model, policy, grid);
        const auto s0 = mdp.initial_state;
        EnumeratedPolicy entry{actions, cvar(table.at(s0, actions[s0]), alpha)};
        if (code == 0 || entry.cvar > out.best.cvar) out.best = entry;
        out.policies.push_back(std::move(entry));
    }
    return out;
}

}  // namespace ocvar
