#include <gtest/gtest.h>

#include <cmath>

#include "ocvar/envs.hpp"
#include "ocvar/oracle.hpp"
#include "ocvar/random.hpp"
#include "ocvar/theorycheck.hpp"

using namespace ocvar;

namespace {

// Midpoint quadrature of the lower tail: (1/alpha) * int_0^alpha q(u) du.
double gaussian_tail_quadrature(double mu, double sigma, double alpha) {
    const int n = 20000;
    const double h = alpha / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = (i + 0.5) * h;
        // inverse normal CDF by bisection on erfc
        double lo = -40.0, hi = 40.0;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (0.5 * std::erfc(-mid / std::sqrt(2.0)) < u ? lo : hi) = mid;
        }
        total += mu + sigma * 0.5 * (lo + hi);
    }
    return total * h / alpha;
}

TabularMDP two_state_chain() {
    TabularMDP m;
    m.n_states = 2;
    m.n_actions = 1;
    m.gamma = 0.5;
    m.terminal = {false, true};
    m.transition = {{0.0, 1.0}, {0.0, 1.0}};
    m.reward = {PointReward{1.0}, PointReward{0.0}};
    return m;
}

}  // namespace

TEST(CvarGaussian, Examples) {
    EXPECT_DOUBLE_EQ(cvar_gaussian(3.0, 0.0, 0.2), 3.0);
    EXPECT_NEAR(cvar_gaussian(0.0, 1.0, 0.5), -0.7979, 1e-4);
    EXPECT_NEAR(cvar_gaussian(10.0, 2.0, 0.25), 7.457, 1e-3);
}

TEST(CvarGaussian, MatchesTailQuadrature) {
    EXPECT_NEAR(cvar_gaussian(0.0, 1.0, 0.5), gaussian_tail_quadrature(0.0, 1.0, 0.5), 1e-4);
    EXPECT_NEAR(cvar_gaussian(10.0, 2.0, 0.25), gaussian_tail_quadrature(10.0, 2.0, 0.25), 1e-4);
}

TEST(CvarGaussian, DomainErrors) {
    EXPECT_THROW(cvar_gaussian(0.0, 1.0, 0.0), std::domain_error);
    EXPECT_THROW(cvar_gaussian(0.0, 1.0, 1.0), std::domain_error);
    EXPECT_THROW(cvar_gaussian(0.0, -1.0, 0.5), std::domain_error);
}

TEST(CvarGaussian, IncreasingInAlphaAndTendsToMean) {
    double prev = -1e300;
    for (int i = 1; i < 100; ++i) {
        const double v = cvar_gaussian(1.0, 3.0, i / 100.0);
        EXPECT_GT(v, prev);
        prev = v;
    }
    EXPECT_NEAR(cvar_gaussian(1.0, 3.0, 1.0 - 1e-6), 1.0, 1e-3 * 3.0);
}

TEST(MachineReplacementOracle, RiskAverseReplacesAtLastState) {
    MachineReplacementParams params;
    const auto opt = machine_replacement_optimal(params, 0.25);
    EXPECT_EQ(opt.best.threshold, params.n - 1);
    EXPECT_EQ(opt.policies.size(), params.n + 1);
}

TEST(MachineReplacementOracle, ExpectedValueNeverReplaces) {
    MachineReplacementParams params;
    EXPECT_EQ(machine_replacement_optimal(params, 1.0).best.threshold, params.n);
}

TEST(MachineReplacementOracle, ZeroDiscountIsOneStepArgmax) {
    MachineReplacementParams params;
    params.gamma = 0.0;
    // keep at state 0 costs N(0, 0.01) and then nothing; replace costs 23
    EXPECT_EQ(machine_replacement_optimal(params, 0.25).best.threshold, 1u);
}

TEST(MachineReplacementOracle, ThresholdValueClosedForm) {
    MachineReplacementParams params;
    const auto v = threshold_policy_value(params, 3, 0.25);
    const double g3 = std::pow(0.99, 3);
    EXPECT_NEAR(v.mean, -g3 * params.replace_cost_mean(3), 1e-12);
    const double var = 1e-4 * (1 + 0.99 * 0.99 + std::pow(0.99, 4)) +
                       g3 * g3 * std::pow(params.replace_cost_stddev(3), 2);
    EXPECT_NEAR(v.stddev, std::sqrt(var), 1e-12);
    EXPECT_NEAR(v.cvar, cvar_gaussian(v.mean, v.stddev, 0.25), 1e-12);
}

TEST(MachineReplacementOracle, DuplicatesNeverChangeArgmax) {
    MachineReplacementParams params;
    for (double alpha : {0.05, 0.25, 0.5, 1.0}) {
        const auto opt = machine_replacement_optimal(params, alpha);
        for (const auto& p : opt.policies) EXPECT_LE(p.cvar, opt.best.cvar);
    }
}

TEST(ThresholdPolicy, ActionsAndFirstReplaceState) {
    MachineReplacementParams params;
    const auto pi = threshold_policy(params, 5);
    EXPECT_EQ(pi.mode(4), kKeep);
    EXPECT_EQ(pi.mode(5), kReplace);
    EXPECT_EQ(first_replace_state(pi, params), 5u);
    EXPECT_EQ(first_replace_state(threshold_policy(params, params.n), params), params.n);
}

TEST(EmpiricalCvar, LowestFraction) {
    EXPECT_DOUBLE_EQ(empirical_cvar({5, 1, 4, 2, 3}, 0.4), 1.5);
    EXPECT_DOUBLE_EQ(empirical_cvar({5, 1, 4, 2, 3}, 1.0), 3.0);
    EXPECT_THROW(empirical_cvar({}, 0.5), std::invalid_argument);
}

TEST(MonteCarloCvar, DeterministicReturn) {
    auto rng = make_stream(70, 0);
    const auto est =
        monte_carlo_cvar(two_state_chain(), PolicyTable::uniform(2, 1), 0.25, 1000, rng);
    EXPECT_DOUBLE_EQ(est.estimate, 1.0);
    EXPECT_NEAR(est.standard_error, 0.0, 1e-12);
}

TEST(MonteCarloCvar, FullAlphaIsSampleMean) {
    auto rng = make_stream(71, 0);
    const auto mdp = random_mdp(4, 2, 3, 2, 0.8);
    const auto est = monte_carlo_cvar(mdp, PolicyTable::uniform(4, 2), 1.0, 2000, rng);
    EXPECT_NEAR(est.estimate, est.mean, 1e-9);
}

TEST(MonteCarloCvar, NeedsEnoughEpisodes) {
    auto rng = make_stream(72, 0);
    EXPECT_THROW(monte_carlo_cvar(two_state_chain(), PolicyTable::uniform(2, 1), 0.1, 50, rng),
                 std::invalid_argument);
}

TEST(MonteCarloCvar, MatchesMachineReplacementClosedForm) {
    MachineReplacementParams params;
    const auto opt = machine_replacement_optimal(params, 0.25);
    auto rng = make_stream(73, 0);
    const auto est = monte_carlo_cvar(machine_replacement(params),
                                      threshold_policy(params, opt.best.threshold), 0.25, 100000,
                                      rng);
    EXPECT_NEAR(est.estimate, opt.best.cvar, 3.0 * est.standard_error);
}

TEST(ExactPolicyEval, Examples) {
    TabularMDP absorbing;
    absorbing.n_states = 1;
    absorbing.n_actions = 1;
    absorbing.gamma = 0.9;
    absorbing.terminal = {false};
    absorbing.transition = {{1.0}};
    absorbing.reward = {PointReward{0.0}};
    SupportGrid g(-1.0, 1.0, 21);
    EXPECT_NEAR(exact_policy_eval(absorbing, PolicyTable::uniform(1, 1), g, 1e-13, 100000)
                    .at(0, 0)
                    .prob(10),
                1.0, 1e-9);

    SupportGrid g2(0.0, 2.0, 21);
    const auto t = exact_policy_eval(two_state_chain(), PolicyTable::uniform(2, 1), g2);
    EXPECT_NEAR(t.at(0, 0).prob(10), 1.0, 1e-12);
}

TEST(ExactPolicyEval, InitIndependent) {
    auto rng = make_stream(74, 0);
    const auto mdp = random_mdp(5, 2, 3, 6, 0.9);
    const auto model = known_model(mdp);
    const auto grid = return_grid(model, 101);
    const auto policy = random_policy(5, 2, rng);
    FixedPointOptions opts;
    opts.tol = 1e-10;
    const auto a = fixed_point(model, policy, grid, opts, random_table(grid, 5, 2, rng)).table;
    const auto b = fixed_point(model, policy, grid, opts, random_table(grid, 5, 2, rng)).table;
    EXPECT_LE(max_cramer_distance(a, b), 1e-6);
}

TEST(ExactPolicyEval, AgreesWithMonteCarlo) {
    auto rng = make_stream(75, 0);
    const auto mdp = random_mdp(5, 2, 3, 13, 0.9);
    const auto policy = random_policy(5, 2, rng);
    const auto grid = return_grid(known_model(mdp));
    const auto table = exact_policy_eval(mdp, policy, grid);
    // The initial-state value is the policy mixture over its actions.
    std::vector<double> mix(grid.size(), 0.0);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t j = 0; j < grid.size(); ++j)
            mix[j] += policy.prob(0, a) * table.at(0, a).prob(j);
    const CategoricalDistribution z0(grid, mix);
    for (double alpha : {0.1, 0.25, 0.5, 1.0}) {
        const auto est = monte_carlo_cvar(mdp, policy, alpha, 100000, rng);
        EXPECT_NEAR(cvar(z0, alpha), est.estimate, 3.0 * est.standard_error + 2.0 * grid.delta_z());
    }
}

TEST(Enumeration, FindsMachineReplacementOptimumOnSmallChain) {
    MachineReplacementParams params;
    params.n = 5;
    params.r_max = 8.0;
    params.r_min = 4.0;
    params.mu_last = 3.0;
    params.sigma_last = 4.0;
    params.gamma = 0.9;
    const auto mdp = machine_replacement(params);
    const auto closed = machine_replacement_optimal(params, 0.25);
    const auto res = enumerate_deterministic_policies(mdp, 0.25);
    EXPECT_EQ(res.policies.size(), 32u);
    std::size_t first = params.n;
    for (std::size_t s = 0; s < params.n && first == params.n; ++s)
        if (res.best.actions[s] == kReplace) first = s;
    EXPECT_EQ(first, closed.best.threshold);
    const auto grid = return_grid(known_model(mdp));
    EXPECT_NEAR(res.best.cvar, closed.best.cvar, 2.0 * grid.delta_z());
}

TEST(Enumeration, RefusesHugePolicySpaces) {
    EXPECT_THROW(enumerate_deterministic_policies(random_mdp(13, 2, 2, 0), 0.5),
                 std::invalid_argument);
}
