#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ocvar/policy.hpp"
#include "ocvar/returndist.hpp"

namespace ocvar {

/// Per-(state, action) return distributions on one shared grid.
class ReturnTable {
  public:
    /// Every entry starts uniform over the grid.
    ReturnTable(SupportGrid grid, std::size_t n_states, std::size_t n_actions);

    const SupportGrid& grid() const { return grid_; }
    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }

    const CategoricalDistribution& at(std::size_t s, std::size_t a) const {
        return entries_[s * n_actions_ + a];
    }
    void set(std::size_t s, std::size_t a, CategoricalDistribution d);

  private:
    SupportGrid grid_;
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<CategoricalDistribution> entries_;
};

/// Largest Cramer distance over all (state, action) entries.
double max_cramer_distance(const ReturnTable& a, const ReturnTable& b);

struct RewardAtom {
    double value;
    double prob;
};

/**
 * Finite model with finite-support rewards: either estimated from samples
 * (counts hold the number of samples per pair) or an exact discretization of
 * a known MDP.
 */
struct EmpiricalMDP {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    /// Row (s * n_actions + a) is P(. | s, a).
    std::vector<std::vector<double>> transition;
    std::vector<std::vector<RewardAtom>> reward;
    double gamma = 0.0;
    std::vector<bool> terminal;
    std::vector<long> counts;

    std::size_t index(std::size_t s, std::size_t a) const { return s * n_actions + a; }
    long count(std::size_t s, std::size_t a) const { return counts[index(s, a)]; }
    /// Throws std::invalid_argument on shape, normalization or gamma violations.
    void validate() const;
};

/// Shift c / sqrt(n) applied by the optimism operator.
double optimism_shift(double c, double n);

/**
 * Optimism operator: lowers the CDF by c / sqrt(n) on [v_min, v_max),
 * clipping at zero, and rebuilds atom probabilities from the shifted CDF.
 * The removed lower-tail mass lands on the top atom. A zero shift returns the
 * input unchanged.
 */
CategoricalDistribution optimism_op(const CategoricalDistribution& d, double c, double n);

/// Same operator parameterized directly by the shift c / sqrt(n).
CategoricalDistribution shift_cdf(const CategoricalDistribution& d, double shift);

/**
 * Categorical projection of r + gamma * Z onto `grid`: each atom's mass is
 * split between the two grid neighbours of the clamped target location.
 */
std::vector<double> bellman_target(const CategoricalDistribution& source, double r, double gamma,
                                   const SupportGrid& grid);

/// Return distribution pinned on terminal states: the interpolation of clamp(0).
CategoricalDistribution terminal_distribution(const SupportGrid& grid);

/// Table with uniform entries except terminal states, which are pinned.
ReturnTable initial_table(const EmpiricalMDP& mdp, const SupportGrid& grid);

/// Exact projected distributional Bellman backup under `policy`.
ReturnTable distributional_backup(const EmpiricalMDP& mdp, const ReturnTable& table,
                                  const PolicyTable& policy);

/**
 * Backup with optimism applied to every successor distribution Z(s', a') with
 * shift c / sqrt(n(s', a')) before the transition mixture. Requires positive
 * counts whenever c > 0.
 */
ReturnTable optimistic_backup(const EmpiricalMDP& mdp, const ReturnTable& table,
                              const PolicyTable& policy, double c);

/// O_c applied after the plain backup, with shift c / sqrt(n(s, a)).
ReturnTable optimism_after_backup(const EmpiricalMDP& mdp, const ReturnTable& table,
                                  const PolicyTable& policy, double c);

enum class BackupOrder {
    kOptimismOnSuccessors,  // optimistic_backup
    kOptimismAfterBackup,   // optimism_after_backup
};

struct FixedPointDiagnostics {
    /// Max-over-pairs Cramer distance between consecutive iterates.
    std::vector<double> distances;
    std::size_t iterations = 0;
};

struct FixedPointResult {
    ReturnTable table;
    FixedPointDiagnostics diagnostics;
};

class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string& what, double last_distance)
        : std::runtime_error(what), last_distance_(last_distance) {}
    double last_distance() const { return last_distance_; }

  private:
    double last_distance_;
};

struct FixedPointOptions {
    double c = 0.0;
    double tol = 1e-8;
    std::size_t max_iter = 100000;
    BackupOrder order = BackupOrder::kOptimismOnSuccessors;
};

/// Iterates the (optimistic) backup until consecutive iterates are within tol.
/// Throws ConvergenceError when max_iter is reached.
FixedPointResult fixed_point(const EmpiricalMDP& mdp, const PolicyTable& policy,
                             const SupportGrid& grid, const FixedPointOptions& options,
                             std::optional<ReturnTable> initial = std::nullopt);

/// Deterministic policy maximizing CVaR_alpha per state; ties go to the lowest action.
PolicyTable greedy_cvar_policy(const ReturnTable& table, double alpha);

}  // namespace ocvar
