#pragma once

#include <cstddef>
#include <vector>

#include "ocvar/envs.hpp"
#include "ocvar/operators.hpp"
#include "ocvar/policy.hpp"
#include "ocvar/random.hpp"
#include "ocvar/returndist.hpp"

namespace ocvar {

/// Lower-tail CVaR of N(mu, sigma^2): mu - sigma * phi(Phi^-1(alpha)) / alpha. alpha in (0, 1).
double cvar_gaussian(double mu, double sigma, double alpha);

/// Discounted return of a machine-replacement threshold policy, which is Gaussian.
struct ThresholdPolicyValue {
    /// First state where the policy replaces; n means never.
    std::size_t threshold = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double cvar = 0.0;
};

struct MachineReplacementOptimum {
    ThresholdPolicyValue best;
    /// One entry per threshold 0..n.
    std::vector<ThresholdPolicyValue> policies;
};

/// Return distribution parameters of the threshold-k policy from state 0.
ThresholdPolicyValue threshold_policy_value(const MachineReplacementParams& params, std::size_t k,
                                            double alpha);

/// Enumerates the n + 1 threshold policies; ties go to the smaller threshold.
/// alpha = 1 ranks policies by their mean.
MachineReplacementOptimum machine_replacement_optimal(const MachineReplacementParams& params,
                                                      double alpha);

/// Deterministic policy replacing at every state >= k (k = n never replaces).
PolicyTable threshold_policy(const MachineReplacementParams& params, std::size_t k);

/// First state reached from state 0 where `policy` replaces; n if none.
/// Stochastic rows are read through their mode.
std::size_t first_replace_state(const PolicyTable& policy, const MachineReplacementParams& params);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    /// Plain sample mean of the same returns.
    double mean = 0.0;
};

/// Empirical CVaR of a sample: mean of its ceil(alpha * n) smallest values.
double empirical_cvar(std::vector<double> samples, double alpha);

/**
 * Samples `episodes` discounted returns of `policy` from the initial state and
 * returns their empirical CVaR with a 200-resample bootstrap standard error.
 * Requires episodes >= ceil(10 / alpha). Episodes stop at a terminal state or
 * after `horizon` steps (0 picks the step where gamma^t < 1e-10).
 */
MonteCarloEstimate monte_carlo_cvar(const TabularMDP& mdp, const PolicyTable& policy,
                                    double alpha, std::size_t episodes, Rng& rng,
                                    std::size_t horizon = 0);

/// Fixed point of the projected non-optimistic backup on `grid`.
ReturnTable exact_policy_eval(const EmpiricalMDP& model, const PolicyTable& policy,
                              const SupportGrid& grid, double tol = 1e-10,
                              std::size_t max_iter = 100000);

/// Same, after discretizing Gaussian rewards of `mdp`.
ReturnTable exact_policy_eval(const TabularMDP& mdp, const PolicyTable& policy,
                              const SupportGrid& grid, double tol = 1e-10,
                              std::size_t max_iter = 100000);

/// Grid [r_lo / (1 - gamma), r_hi / (1 - gamma)] covering every return of the model
/// (bounds extended to include 0).
SupportGrid return_grid(const EmpiricalMDP& model, std::size_t n_atoms = 501);

struct EnumeratedPolicy {
    std::vector<std::size_t> actions;
    double cvar = 0.0;
};

struct EnumerationResult {
    EnumeratedPolicy best;
    std::vector<EnumeratedPolicy> policies;
};

/// Evaluates every deterministic policy of `mdp` exactly and ranks them by the
/// CVaR of the initial state under the policy's own action. Throws when
/// |A|^|S| exceeds `max_policies`. Terminal states always take action 0.
EnumerationResult enumerate_deterministic_policies(const TabularMDP& mdp, double alpha,
                                                   std::size_t n_atoms = 501,
                                                   std::size_t max_policies = 4096);

}  // namespace ocvar
