#include "ocvar/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

namespace ocvar {
namespace {

// Adds weight * Pi_C(r + gamma * Z) into `out` where Z has atom masses `probs`.
void accumulate_target(std::span<const double> probs, double r, double gamma,
                       const SupportGrid& grid, double weight, std::span<double> out) {
    const double v_min = grid.v_min();
    const double dz = grid.delta_z();
    const auto last = static_cast<double>(grid.size() - 1);
    for (std::size_t j = 0; j < probs.size(); ++j) {
        const double p = probs[j] * weight;
        if (p == 0.0) continue;
        const double tz = grid.clamp(r + gamma * grid.atom(j));
        double b = (tz - v_min) / dz;
        const double nearest = std::round(b);
        if (std::abs(b - nearest) < 1e-9) b = nearest;
        b = std::clamp(b, 0.0, last);
        const double lf = std::floor(b);
        const double uf = std::ceil(b);
        const auto l = static_cast<std::size_t>(lf);
        const auto u = static_cast<std::size_t>(uf);
        if (l == u) {
            // integral location: the literal C51 rule would drop this mass
            out[l] += p;
        } else {
            out[l] += p * (uf - b);
            out[u] += p * (b - lf);
        }
    }
}

void require_shapes(const EmpiricalMDP& mdp, const ReturnTable& table) {
    if (table.n_states() != mdp.n_states || table.n_actions() != mdp.n_actions)
        throw std::invalid_argument("return table does not match the MDP dimensions");
}

void require_policy(const EmpiricalMDP& mdp, const PolicyTable& policy) {
    if (policy.n_states() != mdp.n_states || policy.n_actions() != mdp.n_actions)
        throw std::invalid_argument("policy does not match the MDP dimensions");
}

// Shared backup kernel; `successor(s', a')` yields the distribution to transport.
template <typename Successor>
ReturnTable backup_with(const EmpiricalMDP& mdp, const ReturnTable& table,
                        const PolicyTable& policy, Successor&& successor) {
    require_shapes(mdp, table);
    require_policy(mdp, policy);
    const auto& grid = table.grid();
    ReturnTable out(grid, mdp.n_states, mdp.n_actions);
    const auto pinned = terminal_distribution(grid);
    std::vector<double> m(grid.size());
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            if (mdp.terminal[s]) {
                out.set(s, a, pinned);
                continue;
            }
            std::fill(m.begin(), m.end(), 0.0);
            const auto& row = mdp.transition[mdp.index(s, a)];
            const auto& rewards = mdp.reward[mdp.index(s, a)];
            for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
                const double p_next = row[s2];
                if (p_next == 0.0) continue;
                if (mdp.terminal[s2]) {
                    // nothing to bootstrap past termination
                    for (const auto& [r, q] : rewards)
                        accumulate_target(pinned.probs(), r, 0.0, grid, p_next * q, m);
                    continue;
                }
                for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2) {
                    const double pi = policy.prob(s2, a2);
                    if (pi == 0.0) continue;
                    const CategoricalDistribution& z = successor(s2, a2);
                    for (const auto& [r, q] : rewards)
                        accumulate_target(z.probs(), r, mdp.gamma, grid, p_next * pi * q, m);
                }
            }
            for (auto& x : m) x = std::max(x, 0.0);
            out.set(s, a, CategoricalDistribution(grid, m));
        }
    }
    return out;
}

}  // namespace

ReturnTable::ReturnTable(SupportGrid grid, std::size_t n_states, std::size_t n_actions)
    : grid_(grid),
      n_states_(n_states),
      n_actions_(n_actions),
      entries_(n_states * n_actions, CategoricalDistribution::uniform(grid)) {
    if (n_states == 0 || n_actions == 0)
        throw std::invalid_argument("return table needs at least one state and one action");
}

void ReturnTable::set(std::size_t s, std::size_t a, CategoricalDistribution d) {
    if (!(d.grid() == grid_)) throw std::invalid_argument("entry grid differs from the table grid");
    entries_.at(s * n_actions_ + a) = std::move(d);
}

double max_cramer_distance(const ReturnTable& a, const ReturnTable& b) {
    if (a.n_states() != b.n_states() || a.n_actions() != b.n_actions())
        throw std::invalid_argument("return tables have different shapes");
    double worst = 0.0;
    for (std::size_t s = 0; s < a.n_states(); ++s)
        for (std::size_t k = 0; k < a.n_actions(); ++k)
            worst = std::max(worst, cramer_distance(a.at(s, k), b.at(s, k)));
    return worst;
}

void EmpiricalMDP::validate() const {
    const std::size_t pairs = n_states * n_actions;
    if (n_states == 0 || n_actions == 0) throw std::invalid_argument("empty MDP");
    if (transition.size() != pairs || reward.size() != pairs || counts.size() != pairs ||
        terminal.size() != n_states)
        throw std::invalid_argument("MDP tables have inconsistent sizes");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
    for (std::size_t k = 0; k < pairs; ++k) {
        const auto& row = transition[k];
        if (row.size() != n_states) throw std::invalid_argument("transition row has wrong length");
        double total = 0.0;
        for (double p : row) {
            if (!(p >= 0.0)) throw std::invalid_argument("negative transition probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("transition row " + std::to_string(k) + " sums to " +
                                        std::to_string(total));
        double rtotal = 0.0;
        for (const auto& [value, prob] : reward[k]) {
            if (!std::isfinite(value) || !(prob >= 0.0))
                throw std::invalid_argument("invalid reward atom");
            rtotal += prob;
        }
        if (std::abs(rtotal - 1.0) > 1e-9)
            throw std::invalid_argument("reward distribution " + std::to_string(k) +
                                        " is not normalized");
        if (counts[k] < 0) throw std::invalid_argument("negative visit count");
    }
}

double optimism_shift(double c, double n) {
    if (!(n > 0.0)) throw std::domain_error("optimism count must be positive");
    if (!(c >= 0.0)) throw std::domain_error("optimism constant must be nonnegative");
    return c / std::sqrt(n);
}

CategoricalDistribution optimism_op(const CategoricalDistribution& d, double c, double n) {
    return shift_cdf(d, optimism_shift(c, n));
}

CategoricalDistribution shift_cdf(const CategoricalDistribution& d, double shift) {
    if (!(shift >= 0.0)) throw std::domain_error("optimism shift must be nonnegative");
    if (shift == 0.0) return d;
    const auto f = d.cdf();
    const std::size_t n = f.size();
    // Shifted CDF at each atom; it stays 1 from v_max on.
    std::vector<double> shifted(n);
    for (std::size_t i = 0; i + 1 < n; ++i) shifted[i] = std::max(f[i] - shift, 0.0);
    shifted[n - 1] = 1.0;
    // p~_j = F~(z_j + dz/2) - F~(z_j - dz/2); F~ is constant between atoms.
    std::vector<double> p(n);
    p[0] = shifted[0];
    for (std::size_t j = 1; j < n; ++j) p[j] = std::max(shifted[j] - shifted[j - 1], 0.0);
    return {d.grid(), std::move(p)};
}

std::vector<double> bellman_target(const CategoricalDistribution& source, double r, double gamma,
                                   const SupportGrid& grid) {
    if (!(source.grid() == grid))
        throw std::invalid_argument("bellman_target source must live on the target grid");
    std::vector<double> m(grid.size(), 0.0);
    accumulate_target(source.probs(), r, gamma, grid, 1.0, m);
    return m;
}

CategoricalDistribution terminal_distribution(const SupportGrid& grid) {
    return CategoricalDistribution::interpolated(grid, 0.0);
}

ReturnTable initial_table(const EmpiricalMDP& mdp, const SupportGrid& grid) {
    ReturnTable table(grid, mdp.n_states, mdp.n_actions);
    const auto pinned = terminal_distribution(grid);
    for (std::size_t s = 0; s < mdp.n_states; ++s)
        if (mdp.terminal[s])
            for (std::size_t a = 0; a < mdp.n_actions; ++a) table.set(s, a, pinned);
    return table;
}

ReturnTable distributional_backup(const EmpiricalMDP& mdp, const ReturnTable& table,
                                  const PolicyTable& policy) {
    return backup_with(mdp, table, policy,
                       [&](std::size_t s, std::size_t a) -> const CategoricalDistribution& {
                           return table.at(s, a);
                       });
}

ReturnTable optimistic_backup(const EmpiricalMDP& mdp, const ReturnTable& table,
                              const PolicyTable& policy, double c) {
    if (c == 0.0) return distributional_backup(mdp, table, policy);
    require_shapes(mdp, table);
    std::vector<CategoricalDistribution> shifted;
    shifted.reserve(mdp.n_states * mdp.n_actions);
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            if (mdp.terminal[s]) {
                shifted.push_back(table.at(s, a));
                continue;
            }
            const long n = mdp.count(s, a);
            if (n <= 0)
                throw std::domain_error("optimistic backup needs a positive count for (" +
                                        std::to_string(s) + ", " + std::to_string(a) + ")");
            shifted.push_back(optimism_op(table.at(s, a), c, static_cast<double>(n)));
        }
    }
    return backup_with(mdp, table, policy,
                       [&](std::size_t s, std::size_t a) -> const CategoricalDistribution& {
                           return shifted[s * mdp.n_actions + a];
                       });
}

ReturnTable optimism_after_backup(const EmpiricalMDP& mdp, const ReturnTable& table,
                                  const PolicyTable& policy, double c) {
    auto out = distributional_backup(mdp, table, policy);
    if (c == 0.0) return out;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        if (mdp.terminal[s]) continue;
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            const long n = mdp.count(s, a);
            if (n <= 0)
                throw std::domain_error("optimistic backup needs a positive count for (" +
                                        std::to_string(s) + ", " + std::to_string(a) + ")");
            out.set(s, a, optimism_op(out.at(s, a), c, static_cast<double>(n)));
        }
    }
    return out;
}

FixedPointResult fixed_point(const EmpiricalMDP& mdp, const PolicyTable& policy,
                             const SupportGrid& grid, const FixedPointOptions& options,
                             std::optional<ReturnTable> initial) {
    if (!(options.tol > 0.0)) throw std::domain_error("fixed-point tolerance must be positive");
    ReturnTable current = initial ? std::move(*initial) : initial_table(mdp, grid);
    if (!(current.grid() == grid)) throw std::invalid_argument("initial table uses another grid");
    FixedPointDiagnostics diag;
    double last = std::numeric_limits<double>::infinity();
    while (diag.iterations < options.max_iter) {
        ReturnTable next =
            options.order == BackupOrder::kOptimismOnSuccessors
                ? optimistic_backup(mdp, current, policy, options.c)
                : optimism_after_backup(mdp, current, policy, options.c);
        last = max_cramer_distance(next, current);
        diag.distances.push_back(last);
        ++diag.iterations;
        current = std::move(next);
        if (last <= options.tol) return {std::move(current), std::move(diag)};
    }
    throw ConvergenceError("fixed-point iteration did not converge in " +
                               std::to_string(options.max_iter) + " iterations",
                           last);
}

PolicyTable greedy_cvar_policy(const ReturnTable& table, double alpha) {
    std::vector<std::size_t> actions(table.n_states(), 0);
    for (std::size_t s = 0; s < table.n_states(); ++s) {
        double best = cvar(table.at(s, 0), alpha);
        for (std::size_t a = 1; a < table.n_actions(); ++a) {
            const double v = cvar(table.at(s, a), alpha);
            if (v > best) {
                best = v;
                actions[s] = a;
            }
        }
    }
    return PolicyTable::deterministic(table.n_states(), table.n_actions(), actions);
}

}  // namespace ocvar
