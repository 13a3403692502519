#include "ocvar/theorycheck.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>

#include "ocvar/counts.hpp"
#include "ocvar/envs.hpp"
#include "ocvar/oracle.hpp"
#include "ocvar/parallel.hpp"

namespace ocvar {
namespace {

// Checks on nonnegative supports use [0, 10]; the lemmas need v_min = 0.
SupportGrid lemma_grid() { return SupportGrid(0.0, 10.0, 51); }

std::vector<double> twenty_alphas() { return TheoremConfig::default_alpha_grid(); }

void note(CheckReport& r, double margin, bool violated) {
    r.worst_margin = std::max(r.worst_margin, margin);
    if (violated) ++r.violations;
}

template <typename Body>
CheckReport timed(std::string name, Body&& body) {
    const auto start = std::chrono::steady_clock::now();
    CheckReport r;
    r.name = std::move(name);
    r.worst_margin = -std::numeric_limits<double>::infinity();
    body(r);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

double min_reward(const TabularMDP& mdp) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& spec : mdp.reward)
        for (const auto& [v, p] : std::get<FiniteReward>(spec).atoms) lo = std::min(lo, v);
    return lo;
}

}  // namespace

CheckReport check_nonexpansion(std::size_t trials, Rng& rng, std::size_t n_atoms) {
    return timed("nonexpansion", [&](CheckReport& r) {
        const SupportGrid grid(0.0, 10.0, n_atoms);
        for (std::size_t t = 0; t < trials; ++t) {
            const auto z1 = random_distribution(grid, rng);
            const auto z2 = random_distribution(grid, rng);
            const double shift = uniform01(rng);
            const double before = cramer_distance(z1, z2);
            const double after = cramer_distance(shift_cdf(z1, shift), shift_cdf(z2, shift));
            note(r, after - before, after > before + 1e-10);
            ++r.trials;
        }
        r.passed = r.violations == 0;
        r.detail = fmt::format("max l2(OZ,OZ') - l2(Z,Z') = {:.3e}", r.worst_margin);
    });
}

PolicyTable random_policy(std::size_t n_states, std::size_t n_actions, Rng& rng) {
    std::vector<double> probs;
    probs.reserve(n_states * n_actions);
    for (std::size_t s = 0; s < n_states; ++s) {
        const auto row = dirichlet_flat(n_actions, rng);
        probs.insert(probs.end(), row.begin(), row.end());
    }
    return PolicyTable(n_states, n_actions, std::move(probs));
}

ReturnTable random_table(const SupportGrid& grid, std::size_t n_states, std::size_t n_actions,
                         Rng& rng) {
    ReturnTable table(grid, n_states, n_actions);
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_actions; ++a) table.set(s, a, random_distribution(grid, rng));
    return table;
}

CheckReport check_contraction(const EmpiricalMDP& mdp, const PolicyTable& policy, double c,
                              const SupportGrid& grid, const ContractionOptions& options,
                              Rng& rng) {
    return timed("contraction", [&](CheckReport& r) {
        const double bound = std::sqrt(mdp.gamma) + options.slack;
        FixedPointOptions fp;
        fp.c = c;
        fp.tol = options.tol;
        fp.max_iter = options.max_iter;
        fp.order = options.order;
        try {
            auto first = fixed_point(mdp, policy, grid, fp,
                                     random_table(grid, mdp.n_states, mdp.n_actions, rng));
            const auto& d = first.diagnostics.distances;
            for (std::size_t k = std::max<std::size_t>(options.burn_in, 1); k < d.size(); ++k) {
                if (d[k - 1] <= 1e-12) continue;
                const double ratio = d[k] / d[k - 1];
                note(r, ratio - bound, ratio > bound);
                if (ratio > bound) ++r.metrics["ratio_violation_count"];
                ++r.trials;
            }
            r.detail = fmt::format("{} iterations, worst ratio - bound = {:.3e}",
                                   first.diagnostics.iterations,
                                   r.trials ? r.worst_margin : 0.0);
            if (options.check_uniqueness) {
                auto second = fixed_point(mdp, policy, grid, fp,
                                          random_table(grid, mdp.n_states, mdp.n_actions, rng));
                const double gap = max_cramer_distance(first.table, second.table);
                const double rho = std::sqrt(mdp.gamma);
                const double tail = first.diagnostics.distances.back() +
                                    second.diagnostics.distances.back();
                r.metrics["fixed_point_gap"] = gap;
                r.metrics["gap_excess"] = rho < 1.0 ? gap - tail * rho / (1.0 - rho) : 0.0;
                r.metrics["uniqueness_failure_count"] = gap > options.uniqueness_tol ? 1 : 0;
                if (gap > options.uniqueness_tol) ++r.violations;
                r.detail += fmt::format(", fixed-point gap {:.3e}", gap);
            }
        } catch (const ConvergenceError& e) {
            ++r.violations;
            r.metrics["convergence_failure_count"] = 1;
            r.detail = fmt::format("{} (last distance {:.3e})", e.what(), e.last_distance());
        }
        if (r.trials == 0) r.worst_margin = 0.0;
        r.passed = r.violations == 0;
    });
}

double theorem_constant(std::size_t n_states, std::size_t n_actions, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0, 1)");
    const double s = static_cast<double>(n_states);
    const double sa = s * static_cast<double>(n_actions);
    return std::sqrt((1.0 + 4.0 * s) * std::log(4.0 * sa / delta));
}

std::vector<double> TheoremConfig::default_alpha_grid() {
    std::vector<double> out;
    for (int i = 1; i <= 20; ++i) out.push_back(0.05 * i);
    out.back() = 1.0;
    return out;
}

double TheoremConfig::resolved_c() const {
    return c < 0.0 ? theorem_constant(n_states, n_actions, delta) : c;
}

void TheoremConfig::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (n_mdps == 0 || n_states == 0 || n_actions == 0 || samples_per_pair == 0 ||
        reward_support == 0)
        throw std::invalid_argument("theorem check sizes must be positive");
    if (alpha_grid.empty()) throw std::invalid_argument("alpha grid is empty");
    for (double a : alpha_grid)
        if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("alpha grid values must lie in (0, 1]");
}

OptimismComparison compare_optimism(const ReturnTable& optimistic, const ReturnTable& truth,
                                    const std::vector<double>& alphas) {
    OptimismComparison out;
    out.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < truth.n_states(); ++s)
        for (std::size_t a = 0; a < truth.n_actions(); ++a)
            for (double alpha : alphas)
                out.min_gap = std::min(out.min_gap, cvar(optimistic.at(s, a), alpha) -
                                                        cvar(truth.at(s, a), alpha));
    // fixed points are computed to 1e-10 in l2, which moves CVaR by far less than this
    out.dominant = out.min_gap >= -1e-6;
    return out;
}

CheckReport check_theorem_optimism(const TheoremConfig& cfg, Rng& rng) {
    cfg.validate();
    return timed("theorem_optimism", [&](CheckReport& r) {
        const double c = cfg.resolved_c();
        const SupportGrid grid(0.0, 1.0 / (1.0 - cfg.gamma), cfg.n_atoms);
        std::size_t dominant = 0;
        for (std::size_t i = 0; i < cfg.n_mdps; ++i) {
            const auto mdp = random_mdp(cfg.n_states, cfg.n_actions, cfg.reward_support, rng(),
                                        cfg.gamma);
            if (min_reward(mdp) < 0.0)
                throw std::logic_error("theorem check requires nonnegative rewards");
            const auto policy = random_policy(cfg.n_states, cfg.n_actions, rng);
            const auto truth = exact_policy_eval(known_model(mdp), policy, grid);
            const auto model = empirical_mdp(mdp, cfg.samples_per_pair, rng);
            FixedPointOptions fp;
            fp.c = c;
            fp.tol = 1e-10;
            fp.order = cfg.order;
            const auto optimistic = fixed_point(model, policy, grid, fp).table;
            const auto cmp = compare_optimism(optimistic, truth, cfg.alpha_grid);
            r.worst_margin = std::max(r.worst_margin, -cmp.min_gap);
            if (cmp.dominant)
                ++dominant;
            else
                ++r.violations;
            ++r.trials;
        }
        const double freq = static_cast<double>(dominant) / static_cast<double>(cfg.n_mdps);
        const double needed = 1.0 - cfg.delta - cfg.tolerance;
        r.passed = cfg.tolerance < 0.0 || freq >= needed - 1e-12;
        r.detail = fmt::format("c = {:.4f}, shift = {:.4f}, dominant in {}/{} MDPs", c,
                               c / std::sqrt(static_cast<double>(cfg.samples_per_pair)), dominant,
                               cfg.n_mdps);
        if (cfg.tolerance >= 0.0) r.detail += fmt::format(" (needs >= {:.2f})", needed);
    });
}

CheckReport check_lemma_cvar_integral(std::size_t trials, Rng& rng) {
    return timed("lemma_cvar_integral", [&](CheckReport& r) {
        const auto grid = lemma_grid();
        for (std::size_t t = 0; t < trials; ++t) {
            const auto d = random_distribution(grid, rng);
            const double nu = -1.0 + 12.0 * uniform01(rng);
            const double gap = std::abs(expected_shortfall_below(d, nu) - cdf_integral(d, nu));
            note(r, gap - 1e-9, gap > 1e-9);
            ++r.trials;
        }
        r.passed = r.violations == 0;
        r.detail = fmt::format("max |E(nu-X)+ - int F| - 1e-9 = {:.3e}", r.worst_margin);
    });
}

CheckReport check_lemma_dominance(std::size_t trials, Rng& rng) {
    return timed("lemma_dominance", [&](CheckReport& r) {
        const auto grid = lemma_grid();
        const auto alphas = twenty_alphas();
        for (std::size_t t = 0; t < trials; ++t) {
            const auto f = random_distribution(grid, rng);
            const auto g = shift_cdf(f, uniform01(rng));
            bool bad = false;
            for (double alpha : alphas) {
                const double excess = cvar(f, alpha) - cvar(g, alpha);
                r.worst_margin = std::max(r.worst_margin, excess);
                bad = bad || excess > 1e-10;
            }
            if (bad) ++r.violations;
            ++r.trials;
        }
        r.passed = r.violations == 0;
        r.detail = fmt::format("max CVaR(F) - CVaR(G) = {:.3e}", r.worst_margin);
    });
}

CheckReport check_lemma_lipschitz(std::size_t trials, Rng& rng) {
    return timed("lemma_lipschitz", [&](CheckReport& r) {
        const auto grid = lemma_grid();
        const auto alphas = twenty_alphas();
        const double dz = grid.delta_z();
        for (std::size_t t = 0; t < trials; ++t) {
            const auto f = random_distribution(grid, rng);
            const auto g = random_distribution(grid, rng);
            const auto cf = f.cdf();
            const auto cg = g.cdf();
            const double sup = sup_distance(f, g);
            bool bad = false;
            for (double alpha : alphas) {
                const double q = std::max(var_at(f, alpha), var_at(g, alpha));
                double integral = 0.0;
                for (std::size_t i = 0; i + 1 < cf.size() && grid.atom(i + 1) <= q + 1e-12; ++i)
                    integral += std::abs(cf[i] - cg[i]) * dz;
                const double diff = std::abs(cvar(f, alpha) - cvar(g, alpha));
                const double integral_bound = integral / alpha;
                const double sup_bound = q / alpha * sup;
                const double m1 = diff - integral_bound;
                const double m2 = integral_bound - sup_bound;
                r.worst_margin = std::max({r.worst_margin, m1, m2});
                bad = bad || m1 > 1e-9 || m2 > 1e-9;
            }
            if (bad) ++r.violations;
            ++r.trials;
        }
        r.passed = r.violations == 0;
        r.detail = fmt::format("max excess over either bound = {:.3e}", r.worst_margin);
    });
}

CheckReport check_cvar_continuity(std::size_t trials, Rng& rng) {
    return timed("cvar_continuity", [&](CheckReport& r) {
        const auto grid = lemma_grid();
        const double width = grid.v_max() - grid.v_min();
        const auto alphas = twenty_alphas();
        std::size_t monotone_breaks = 0;
        std::size_t holder_breaks = 0;
        std::size_t threshold_breaks = 0;
        std::size_t late_kinks = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            const auto f = random_distribution(grid, rng);
            const auto g = random_distribution(grid, rng);
            const double alpha = alphas[std::uniform_int_distribution<std::size_t>(0, 19)(rng)];
            const double base = cvar(f, alpha);
            const double base_var = var_at(f, alpha);
            const double threshold_l2 = 1e-5 * alpha / width;
            double previous = std::numeric_limits<double>::infinity();
            bool bad = false;
            bool kinked = false;
            for (double n = 1.0; n <= 1e9; n = n < 10.0 ? n + 1.0 : 2.0 * n) {
                std::vector<double> mix(grid.size());
                for (std::size_t j = 0; j < mix.size(); ++j)
                    mix[j] = f.prob(j) + (g.prob(j) - f.prob(j)) / n;
                const CategoricalDistribution fn(grid, std::move(mix));
                const double l2 = cramer_distance(fn, f);
                const double gap = std::abs(cvar(fn, alpha) - base);
                const double holder = std::sqrt(width) / alpha * l2;
                r.worst_margin = std::max(r.worst_margin, gap - holder);
                if (gap > holder + 1e-12) {
                    ++holder_breaks;
                    bad = true;
                }
                if (l2 < threshold_l2 && gap >= 1e-4) {
                    ++threshold_breaks;
                    bad = true;
                }
                // With the VaR atom of F fixed, CVaR(F_n) is linear in 1/n, so the
                // gap must shrink; before that the VaR atom may still move.
                if (n >= 10.0 && var_at(fn, alpha) == base_var) {
                    if (gap > previous + 1e-12) {
                        ++monotone_breaks;
                        bad = true;
                    }
                    previous = gap;
                } else if (n >= 10.0) {
                    kinked = true;
                }
            }
            if (kinked) ++late_kinks;
            if (bad) ++r.violations;
            ++r.trials;
        }
        r.passed = r.violations == 0;
        r.detail = fmt::format(
            "holder breaks {}, threshold breaks {}, monotonicity breaks {}; "
            "{} sequences still moved their VaR atom after n = 10",
            holder_breaks, threshold_breaks, monotone_breaks, late_kinks);
    });
}

CheckReport check_cvar_correctness(std::size_t trials, Rng& rng, double nu_step,
                                   double tolerance) {
    return timed("cvar_correctness", [&](CheckReport& r) {
        const SupportGrid grid(-5.0, 5.0, 51);
        const auto alphas = twenty_alphas();
        for (std::size_t t = 0; t < trials; ++t) {
            const auto d = random_distribution(grid, rng);
            bool bad = false;
            double prev = -std::numeric_limits<double>::infinity();
            for (double alpha : alphas) {
                const double closed = cvar(d, alpha);
                const double gap = std::abs(closed - cvar_sup_oracle(d, alpha, nu_step));
                r.worst_margin = std::max(r.worst_margin, gap - tolerance);
                bad = bad || gap > tolerance || closed < prev - 1e-12;
                prev = closed;
            }
            const double mean_gap = std::abs(cvar(d, 1.0) - d.mean());
            bad = bad || mean_gap > 1e-9;
            if (bad) ++r.violations;
            ++r.trials;
        }
        r.passed = r.violations == 0;
        r.detail = fmt::format("max |closed form - sup oracle| - tol = {:.3e}", r.worst_margin);
    });
}

CheckReport check_taylor_prediction_gain(std::size_t models, Rng& rng, double eta) {
    return timed("taylor_prediction_gain", [&](CheckReport& r) {
        std::normal_distribution<double> normal(0.0, 1.0);
        double worst_rel = 0.0, lo_ratio = 1.0, hi_ratio = 0.0;
        double abs_ratio_lo = 1.0, abs_ratio_hi = 0.0;
        for (std::size_t m = 0; m < models; ++m) {
            const auto n_states = std::uniform_int_distribution<std::size_t>(2, 10)(rng);
            const auto n_actions = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
            std::vector<double> logits(n_states * n_actions);
            for (auto& x : logits) x = normal(rng);
            const auto s = std::uniform_int_distribution<std::size_t>(0, n_states - 1)(rng);
            const auto a = std::uniform_int_distribution<std::size_t>(0, n_actions - 1)(rng);
            auto error_at = [&](double lr, double& exact) {
                LogLinearDensityModel model(n_states, n_actions, lr, 1.0);
                model.set_logits(logits);
                exact = prediction_gain_exact(model, s, a);
                return std::abs(prediction_gain_taylor(model, s, a) - exact);
            };
            double exact = 0.0, exact_half = 0.0;
            const double err = error_at(eta, exact);
            const double err_half = error_at(eta / 2.0, exact_half);
            // Absolute error is second order in eta, so the relative error is first order.
            const double rel = err / exact;
            const double rel_half = err_half / exact_half;
            const double ratio = rel_half / rel;
            abs_ratio_lo = std::min(abs_ratio_lo, err_half / err);
            abs_ratio_hi = std::max(abs_ratio_hi, err_half / err);
            worst_rel = std::max(worst_rel, rel);
            lo_ratio = std::min(lo_ratio, ratio);
            hi_ratio = std::max(hi_ratio, ratio);
            const bool bad = !(rel <= 0.05) || !(ratio >= 0.3 && ratio <= 0.7);
            note(r, rel - 0.05, bad);
            ++r.trials;
        }
        r.passed = r.violations == 0;
        r.detail = fmt::format(
            "max relative error {:.3e}, half-step relative error ratio in [{:.4f}, {:.4f}] "
            "(absolute error ratio in [{:.4f}, {:.4f}])",
            worst_rel, lo_ratio, hi_ratio, abs_ratio_lo, abs_ratio_hi);
    });
}

CheckReport check_dkw(std::size_t trials, std::size_t n, double delta, Rng& rng) {
    return timed("dkw", [&](CheckReport& r) {
        const double bound = std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
        for (std::size_t t = 0; t < trials; ++t) {
            const auto k = std::uniform_int_distribution<std::size_t>(2, 20)(rng);
            const auto probs = dirichlet_flat(k, rng);
            std::vector<double> hits(k, 0.0);
            for (std::size_t i = 0; i < n; ++i) hits[sample_index(probs, rng)] += 1.0;
            double f = 0.0, fn = 0.0, sup = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                f += probs[j];
                fn += hits[j] / static_cast<double>(n);
                sup = std::max(sup, std::abs(f - fn));
            }
            note(r, sup - bound, sup > bound);
            ++r.trials;
        }
        const auto allowed = static_cast<std::size_t>(
            std::floor(delta * static_cast<double>(trials) + 1e-9));
        r.passed = r.violations <= allowed;
        r.detail = fmt::format("bound {:.5f} exceeded in {}/{} trials (allowed {})", bound,
                               r.violations, trials, allowed);
    });
}

namespace {

CheckReport merge(std::string name, const std::vector<CheckReport>& parts) {
    CheckReport out;
    out.name = std::move(name);
    out.worst_margin = -std::numeric_limits<double>::infinity();
    std::size_t failed = 0;
    for (const auto& p : parts) {
        out.trials += p.trials;
        out.violations += p.violations;
        out.worst_margin = std::max(out.worst_margin, p.worst_margin);
        out.seconds += p.seconds;
        for (const auto& [key, value] : p.metrics) {
            const bool additive = key.size() > 6 && key.ends_with("_count");
            auto [it, fresh] = out.metrics.emplace(key, value);
            if (!fresh) it->second = additive ? it->second + value : std::max(it->second, value);
        }
        if (!p.passed) ++failed;
    }
    out.passed = failed == 0;
    out.detail = fmt::format("{}/{} runs passed, worst ratio - bound = {:.3e}",
                             parts.size() - failed, parts.size(), out.worst_margin);
    for (const auto& p : parts)
        if (!p.passed) out.detail += "; " + p.detail;
    return out;
}

CheckReport contraction_suite(std::uint64_t seed, std::size_t jobs) {
    constexpr std::size_t kMdps = 20;
    const double cs[] = {0.0, 0.1};
    std::vector<CheckReport> parts(kMdps * 2);
    parallel_for(parts.size(), jobs, [&](std::size_t i) {
        Rng rng = make_stream(seed, 0x100 + i);
        const auto mdp = random_mdp(5, 2, 3, seed * 1000 + i / 2, 0.99);
        auto model = known_model(mdp);
        model.counts.assign(model.counts.size(), 100);
        const auto policy = random_policy(5, 2, rng);
        parts[i] = check_contraction(model, policy, cs[i % 2], SupportGrid(0.0, 100.0, 51), {}, rng);
    });
    return merge("contraction", parts);
}

using SuiteFn = std::function<std::vector<CheckReport>(std::uint64_t, std::size_t)>;

const std::map<std::string, SuiteFn>& registry() {
    static const std::map<std::string, SuiteFn> suites = {
        {"nonexpansion",
         [](std::uint64_t seed, std::size_t) {
             Rng rng = make_stream(seed, 1);
             return std::vector{check_nonexpansion(1000, rng)};
         }},
        {"contraction",
         [](std::uint64_t seed, std::size_t jobs) {
             return std::vector{contraction_suite(seed, jobs)};
         }},
        {"theorem",
         [](std::uint64_t seed, std::size_t) {
             Rng rng = make_stream(seed, 3);
             return std::vector{check_theorem_optimism(TheoremConfig{}, rng)};
         }},
        {"negative-control",
         [](std::uint64_t seed, std::size_t) {
             Rng rng = make_stream(seed, 4);
             TheoremConfig cfg;
             cfg.c = 0.0;
             cfg.n_mdps = 20;
             cfg.samples_per_pair = 1000000;
             cfg.tolerance = -1.0;
             auto r = check_theorem_optimism(cfg, rng);
             r.name = "negative_control";
             return std::vector{r};
         }},
        {"cvar",
         [](std::uint64_t seed, std::size_t) {
             Rng rng = make_stream(seed, 5);
             return std::vector{check_cvar_correctness(500, rng)};
         }},
        {"lemmas",
         [](std::uint64_t seed, std::size_t jobs) {
             std::vector<CheckReport> out(4);
             parallel_for(4, jobs, [&](std::size_t i) {
                 Rng rng = make_stream(seed, 6 + i);
                 switch (i) {
                     case 0: out[i] = check_lemma_cvar_integral(1000, rng); break;
                     case 1: out[i] = check_lemma_dominance(1000, rng); break;
                     case 2: out[i] = check_lemma_lipschitz(1000, rng); break;
                     default: out[i] = check_cvar_continuity(1000, rng); break;
                 }
             });
             return out;
         }},
        {"taylor",
         [](std::uint64_t seed, std::size_t) {
             Rng rng = make_stream(seed, 10);
             return std::vector{check_taylor_prediction_gain(100, rng)};
         }},
        {"dkw",
         [](std::uint64_t seed, std::size_t) {
             Rng rng = make_stream(seed, 11);
             return std::vector{check_dkw(100, 10000, 0.01, rng)};
         }},
    };
    return suites;
}

}  // namespace

std::vector<std::string> suite_names() {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
}

std::vector<CheckReport> run_suite(const std::string& name, std::uint64_t seed, std::size_t jobs) {
    const auto& suites = registry();
    if (name == "all") {
        std::vector<CheckReport> out;
        for (const auto& [suite, fn] : suites) {
            auto part = fn(seed, jobs);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    const auto it = suites.find(name);
    if (it == suites.end()) {
        std::string known = "all";
        for (const auto& [suite, fn] : suites) known += ", " + suite;
        throw std::invalid_argument("unknown suite '" + name + "'; valid suites: " + known);
    }
    return it->second(seed, jobs);
}

}  // namespace ocvar
