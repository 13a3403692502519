#include <gtest/gtest.h>

#include <cmath>

#include "ocvar/envs.hpp"
#include "ocvar/oracle.hpp"
#include "ocvar/random.hpp"
#include "ocvar/theorycheck.hpp"

using namespace ocvar;

TEST(TheoremConstant, SimpleShiftRule) {
    EXPECT_NEAR(theorem_constant(5, 2, 0.1), std::sqrt(21.0 * std::log(400.0)), 1e-12);
    EXPECT_NEAR(theorem_constant(5, 2, 0.1), 11.21699, 1e-5);
}

TEST(Nonexpansion, ThousandTrialsHold) {
    auto rng = make_stream(80, 0);
    const auto r = check_nonexpansion(1000, rng);
    EXPECT_TRUE(r.passed) << r.detail;
    EXPECT_EQ(r.violations, 0u);
    EXPECT_EQ(r.trials, 1000u);
}

TEST(Nonexpansion, SaturatedShiftCollapsesDistance) {
    auto rng = make_stream(81, 0);
    SupportGrid g(0.0, 10.0, 51);
    const auto a = shift_cdf(random_distribution(g, rng), 1.0);
    const auto b = shift_cdf(random_distribution(g, rng), 1.0);
    EXPECT_DOUBLE_EQ(cramer_distance(a, b), 0.0);
}

TEST(Contraction, ZeroDiscountConvergesImmediately) {
    auto rng = make_stream(82, 0);
    auto mdp = known_model(random_mdp(5, 2, 3, 1, 0.0));
    mdp.counts.assign(mdp.counts.size(), 10);
    SupportGrid g(0.0, 1.0, 21);
    const auto res = fixed_point(mdp, random_policy(5, 2, rng), g, {});
    EXPECT_LE(res.diagnostics.iterations, 2u);
    const auto r = check_contraction(mdp, random_policy(5, 2, rng), 0.5, g, {}, rng);
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Contraction, QuarterDiscountRatiosBelowHalf) {
    auto rng = make_stream(83, 0);
    SupportGrid g(0.0, 2.0, 51);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto mdp = known_model(random_mdp(5, 2, 3, seed, 0.25));
        mdp.counts.assign(mdp.counts.size(), 10);
        ContractionOptions opts;
        const auto r = check_contraction(mdp, random_policy(5, 2, rng), 0.1, g, opts, rng);
        EXPECT_TRUE(r.passed) << r.detail;
        EXPECT_LE(r.worst_margin + std::sqrt(0.25) + opts.slack, 0.52 + 1e-12);
    }
}

TEST(Contraction, HighDiscountRatiosBelowSqrtGamma) {
    auto rng = make_stream(84, 0);
    SupportGrid g(0.0, 100.0, 51);
    ContractionOptions opts;
    opts.check_uniqueness = false;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto mdp = known_model(random_mdp(5, 2, 3, 50 + seed, 0.99));
        for (auto& n : mdp.counts) n = 100;
        const auto r = check_contraction(mdp, random_policy(5, 2, rng), 0.1, g, opts, rng);
        EXPECT_TRUE(r.passed) << r.detail;
        EXPECT_EQ(r.violations, 0u);
    }
}

TEST(TheoremOptimism, ReducedConfigPasses) {
    TheoremConfig cfg;
    cfg.n_mdps = 10;
    cfg.n_atoms = 201;
    auto rng = make_stream(85, 0);
    const auto r = check_theorem_optimism(cfg, rng);
    EXPECT_TRUE(r.passed) << r.detail;
    EXPECT_EQ(r.trials, 10u);
}

TEST(TheoremOptimism, ExactModelIsAlwaysOptimistic) {
    // Deterministic rewards and transitions: the empirical model is exact.
    TabularMDP mdp;
    mdp.n_states = 3;
    mdp.n_actions = 2;
    mdp.gamma = 0.9;
    mdp.terminal = {false, false, false};
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t a = 0; a < 2; ++a) {
            std::vector<double> row(3, 0.0);
            row[(s + a + 1) % 3] = 1.0;
            mdp.transition.push_back(row);
            mdp.reward.push_back(PointReward{0.1 * static_cast<double>(s + 2 * a)});
        }
    }
    auto rng = make_stream(86, 0);
    const auto model = empirical_mdp(mdp, 100, rng);
    const auto grid = return_grid(model, 201);
    const auto truth = exact_policy_eval(mdp, PolicyTable::uniform(3, 2), grid);
    for (double c : {0.0, 0.3, 2.0, 11.0}) {
        FixedPointOptions opts;
        opts.c = c;
        opts.tol = 1e-10;
        opts.order = BackupOrder::kOptimismAfterBackup;
        const auto opt = fixed_point(model, PolicyTable::uniform(3, 2), grid, opts).table;
        const auto cmp = compare_optimism(opt, truth, TheoremConfig::default_alpha_grid());
        EXPECT_TRUE(cmp.dominant) << "c = " << c << ", gap " << cmp.min_gap;
    }
}

TEST(TheoremOptimism, RejectsInvalidConfig) {
    TheoremConfig cfg;
    cfg.delta = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = TheoremConfig{};
    cfg.alpha_grid = {0.0};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    EXPECT_NEAR(TheoremConfig{}.resolved_c(), theorem_constant(5, 2, 0.1), 1e-12);
}

TEST(Lemmas, ThousandTrialsEachWithoutViolations) {
    auto rng = make_stream(87, 0);
    for (const auto& r : {check_lemma_cvar_integral(1000, rng), check_lemma_dominance(1000, rng),
                          check_lemma_lipschitz(1000, rng), check_cvar_continuity(1000, rng)}) {
        EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
        EXPECT_EQ(r.violations, 0u) << r.name;
        EXPECT_GE(r.trials, 1000u) << r.name;
    }
}

TEST(CvarCorrectness, FiveHundredDistributions) {
    auto rng = make_stream(88, 0);
    const auto r = check_cvar_correctness(500, rng);
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(TaylorGain, HundredModels) {
    auto rng = make_stream(89, 0);
    const auto r = check_taylor_prediction_gain(100, rng);
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Dkw, BoundHoldsInNearlyAllTrials) {
    auto rng = make_stream(90, 0);
    const auto r = check_dkw(100, 10000, 0.01, rng);
    EXPECT_TRUE(r.passed) << r.detail;
    EXPECT_LE(r.violations, 1u);
}

TEST(Suites, DeterministicUnderSeed) {
    const auto a = run_suite("lemmas", 7);
    const auto b = run_suite("lemmas", 7);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].name, b[i].name);
        EXPECT_EQ(a[i].violations, b[i].violations);
        EXPECT_EQ(a[i].worst_margin, b[i].worst_margin);
        EXPECT_EQ(a[i].detail, b[i].detail);
    }
}

TEST(Suites, UnknownNameListsValidSuites) {
    try {
        run_suite("bogus", 0);
        FAIL() << "expected an exception";
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        for (const auto& name : suite_names()) EXPECT_NE(msg.find(name), std::string::npos);
    }
}
