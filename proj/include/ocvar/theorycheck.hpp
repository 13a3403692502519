#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ocvar/operators.hpp"
#include "ocvar/policy.hpp"
#include "ocvar/random.hpp"
#include "ocvar/returndist.hpp"

namespace ocvar {

/// Outcome of one numerical check. worst_margin is the largest signed
/// violation amount seen (<= 0 means every instance held with room to spare).
struct CheckReport {
    std::string name;
    bool passed = true;
    std::size_t trials = 0;
    std::size_t violations = 0;
    double worst_margin = 0.0;
    std::string detail;
    double seconds = 0.0;
    /// Named measurements. Merged reports add keys ending in "_count" and keep
    /// the maximum of the others.
    std::map<std::string, double> metrics;
};

CheckReport check_nonexpansion(std::size_t trials, Rng& rng, std::size_t n_atoms = 51);

struct ContractionOptions {
    double tol = 1e-8;
    std::size_t max_iter = 100000;
    std::size_t burn_in = 5;
    double slack = 0.02;
    /// Also run from a second random table and compare fixed points.
    bool check_uniqueness = true;
    double uniqueness_tol = 1e-6;
    BackupOrder order = BackupOrder::kOptimismOnSuccessors;
};

/// Fixed-point iteration from a random table: successive-distance ratios after
/// burn-in must stay below sqrt(gamma) + slack. Metrics: ratio_violation_count,
/// uniqueness_failure_count, fixed_point_gap and gap_excess, the gap minus the
/// bound (d1 + d2) * sqrt(gamma) / (1 - sqrt(gamma)) implied by the final step
/// distances d1, d2 of the two runs.
CheckReport check_contraction(const EmpiricalMDP& mdp, const PolicyTable& policy, double c,
                              const SupportGrid& grid, const ContractionOptions& options, Rng& rng);

/// Random policy with flat Dirichlet rows.
PolicyTable random_policy(std::size_t n_states, std::size_t n_actions, Rng& rng);

/// Table with an independent random_distribution in every entry.
ReturnTable random_table(const SupportGrid& grid, std::size_t n_states, std::size_t n_actions,
                         Rng& rng);

/// Shift-rule constant sqrt((1 + 4|S|) ln(4|S||A| / delta)).
double theorem_constant(std::size_t n_states, std::size_t n_actions, double delta);

struct TheoremConfig {
    double delta = 0.1;
    std::size_t n_mdps = 100;
    std::size_t n_states = 5;
    std::size_t n_actions = 2;
    std::size_t samples_per_pair = 100;
    std::size_t reward_support = 3;
    double gamma = 0.9;
    std::size_t n_atoms = 501;
    std::vector<double> alpha_grid = default_alpha_grid();
    /// Negative c selects the theorem constant; otherwise c is used as given.
    double c = -1.0;
    BackupOrder order = BackupOrder::kOptimismAfterBackup;
    /// Frequency threshold is 1 - delta - tolerance; a negative value reports without asserting.
    double tolerance = 0.05;

    /// {0.05, 0.10, ..., 1.00}.
    static std::vector<double> default_alpha_grid();
    double resolved_c() const;
    void validate() const;
};

struct OptimismComparison {
    bool dominant = true;
    /// min over (s, a, alpha) of CVaR(optimistic) - CVaR(truth).
    double min_gap = 0.0;
};

/// Compares CVaRs of an optimistic fixed point against the true return table.
OptimismComparison compare_optimism(const ReturnTable& optimistic, const ReturnTable& truth,
                                    const std::vector<double>& alphas);

/// Fraction of random nonnegative-reward MDPs whose optimistic fixed point
/// dominates the true policy CVaR everywhere must reach 1 - delta - tolerance.
CheckReport check_theorem_optimism(const TheoremConfig& cfg, Rng& rng);

CheckReport check_lemma_cvar_integral(std::size_t trials, Rng& rng);
CheckReport check_lemma_dominance(std::size_t trials, Rng& rng);
CheckReport check_lemma_lipschitz(std::size_t trials, Rng& rng);
/// Mixtures F_n = F + (G - F) / n: CVaR gaps obey the Holder bound, fall below
/// 1e-4 once l2 < 1e-5 * alpha / (v_max - v_min), and decrease for n >= 10
/// wherever F_n has the VaR atom of F.
CheckReport check_cvar_continuity(std::size_t trials, Rng& rng);

/// Closed-form CVaR against the sup oracle, CVaR_1 against the mean and
/// monotonicity in alpha.
CheckReport check_cvar_correctness(std::size_t trials, Rng& rng, double nu_step = 1e-4,
                                   double tolerance = 1e-6);

/// Taylor prediction gain against the exact one on random log-linear models:
/// relative error <= 5% at eta, and the relative error at eta / 2 between 0.3
/// and 0.7 times the one at eta.
CheckReport check_taylor_prediction_gain(std::size_t models, Rng& rng, double eta = 1e-3);

/// Empirical sup-distance of n-sample CDFs against sqrt(ln(2/delta) / 2n).
CheckReport check_dkw(std::size_t trials, std::size_t n, double delta, Rng& rng);

/// Names accepted by run_suite, "all" excluded.
std::vector<std::string> suite_names();

/// Runs one named suite (or "all") with independent RNG streams derived from
/// `seed`. Unknown names throw std::invalid_argument listing the valid ones.
std::vector<CheckReport> run_suite(const std::string& name, std::uint64_t seed,
                                   std::size_t jobs = 1);

}  // namespace ocvar
