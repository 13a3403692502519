#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "ocvar/envs.hpp"
#include "ocvar/random.hpp"

using namespace ocvar;

namespace {

const char* kSmallMdp = R"(n_states: 3
n_actions: 2
gamma: 0.9
initial: 0
terminal: [2]
transitions:
  - {s: 0, a: 0, probs: [0.0, 1.0, 0.0]}
  - {s: 0, a: 1, probs: [0.5, 0.0, 0.5]}
  - {s: 1, a: 0, probs: [0.0, 0.0, 1.0]}
  - {s: 1, a: 1, probs: [0.25, 0.25, 0.5]}
rewards:
  - {s: 0, a: 0, kind: point, params: {value: 1.0}}
  - {s: 0, a: 1, kind: gaussian, params: {mean: 0.5, stddev: 0.2}}
  - {s: 1, a: 0, kind: finite, params: {values: [0.0, 2.0], probs: [0.3, 0.7]}}
)";

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
    text.replace(text.find(from), from.size(), to);
    return text;
}

std::string parse_error_message(const std::string& text) {
    try {
        parse_mdp(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(MachineReplacement, StructureAndRewards) {
    MachineReplacementParams p;
    const auto mdp = machine_replacement(p);
    ASSERT_EQ(mdp.n_states, p.n + 1);
    ASSERT_EQ(mdp.n_actions, 2u);
    EXPECT_DOUBLE_EQ(mdp.gamma, 0.99);
    EXPECT_TRUE(mdp.terminal[p.n]);
    for (std::size_t s = 0; s < p.n; ++s) {
        EXPECT_FALSE(mdp.terminal[s]);
        EXPECT_DOUBLE_EQ(mdp.transition[mdp.index(s, kReplace)][p.n], 1.0);
        const std::size_t keep_next = s + 1 < p.n ? s + 1 : p.n;
        EXPECT_DOUBLE_EQ(mdp.transition[mdp.index(s, kKeep)][keep_next], 1.0);
    }
    const auto r0 = std::get<GaussianReward>(mdp.reward[mdp.index(0, kReplace)]);
    EXPECT_DOUBLE_EQ(r0.mean, -23.0);
    const auto r10 = std::get<GaussianReward>(mdp.reward[mdp.index(10, kReplace)]);
    EXPECT_NEAR(r10.mean, -17.8, 1e-12);
    EXPECT_NEAR(r10.stddev, 0.2, 1e-12);
    const auto keep = std::get<GaussianReward>(mdp.reward[mdp.index(3, kKeep)]);
    EXPECT_DOUBLE_EQ(keep.mean, 0.0);
    EXPECT_DOUBLE_EQ(keep.stddev, 0.01);
    const auto last = std::get<GaussianReward>(mdp.reward[mdp.index(p.n - 1, kKeep)]);
    EXPECT_DOUBLE_EQ(last.mean, -8.0);
    EXPECT_DOUBLE_EQ(last.stddev, 10.0);

    const auto g = machine_replacement_grid();
    EXPECT_DOUBLE_EQ(g.v_min(), -50.0);
    EXPECT_DOUBLE_EQ(g.v_max(), 50.0);
    EXPECT_EQ(g.size(), 51u);
    EXPECT_THROW(machine_replacement({.n = 1}), std::invalid_argument);
}

TEST(SampleTransition, DeterministicMdpIsExact) {
    const auto mdp = parse_mdp(kSmallMdp);
    auto rng = make_stream(40, 0);
    for (int i = 0; i < 100; ++i) {
        const auto tr = sample_transition(mdp, 0, 0, rng);
        EXPECT_DOUBLE_EQ(tr.r, 1.0);
        EXPECT_EQ(tr.s_next, 1u);
        EXPECT_FALSE(tr.done);
    }
    EXPECT_TRUE(sample_transition(mdp, 1, 0, rng).done);
    EXPECT_THROW(sample_transition(mdp, 2, 0, rng), std::invalid_argument);
}

TEST(SampleTransition, FrequenciesWithinBinomialBands) {
    const auto mdp = parse_mdp(kSmallMdp);
    auto rng = make_stream(41, 0);
    const int n = 100000;
    std::vector<int> hits(3, 0);
    for (int i = 0; i < n; ++i) ++hits[sample_transition(mdp, 1, 1, rng).s_next];
    const std::vector<double> row{0.25, 0.25, 0.5};
    for (std::size_t j = 0; j < 3; ++j) {
        const double sd = std::sqrt(row[j] * (1 - row[j]) / n);
        EXPECT_NEAR(hits[j] / static_cast<double>(n), row[j], 3.0 * sd);
    }
}

TEST(SampleTransition, GaussianMeanAndClipping) {
    const auto mdp = parse_mdp(kSmallMdp);
    auto rng = make_stream(42, 0);
    const int n = 100000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += sample_transition(mdp, 0, 1, rng).r;
    EXPECT_NEAR(total / n, 0.5, 0.05);

    const auto mr = machine_replacement();
    const SupportGrid narrow(-1.0, 1.0, 3);
    for (int i = 0; i < 1000; ++i) {
        const double r = sample_transition(mr, mr.n_states - 2, kKeep, rng, narrow).r;
        EXPECT_GE(r, -1.0);
        EXPECT_LE(r, 1.0);
    }
}

TEST(RandomMdp, ReproducibleAndNormalized) {
    const auto a = random_mdp(5, 2, 3, 11);
    const auto b = random_mdp(5, 2, 3, 11);
    const auto c = random_mdp(5, 2, 3, 12);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    EXPECT_NO_THROW(a.validate());
    for (const auto& row : a.transition) {
        double total = 0.0;
        for (double p : row) total += p;
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
    for (const auto& r : a.reward) {
        for (const auto& [v, p] : std::get<FiniteReward>(r).atoms) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(EmpiricalMdp, DeterministicModelIsExact) {
    const auto mdp = machine_replacement({.sigma_last = 0.0, .sigma_keep = 0.0});
    auto det = mdp;
    for (auto& r : det.reward) r = PointReward{reward_mean(r)};
    auto rng = make_stream(43, 0);
    const auto emp = empirical_mdp(det, 7, rng);
    const auto exact = known_model(det);
    for (std::size_t s = 0; s + 1 < det.n_states; ++s) {
        for (std::size_t a = 0; a < 2; ++a) {
            const auto k = det.index(s, a);
            EXPECT_EQ(emp.count(s, a), 7);
            EXPECT_EQ(emp.transition[k], exact.transition[k]);
            ASSERT_EQ(emp.reward[k].size(), 1u);
            EXPECT_DOUBLE_EQ(emp.reward[k][0].value, exact.reward[k][0].value);
        }
    }
}

TEST(EmpiricalMdp, RewardCdfWithinDkwBound) {
    const auto mdp = random_mdp(2, 1, 5, 3);
    const auto& truth = std::get<FiniteReward>(mdp.reward[0]).atoms;
    const std::size_t n = 100000;
    const double bound = std::sqrt(std::log(2.0 / 0.01) / (2.0 * n));
    int held = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        auto rng = make_stream(44, trial);
        const auto emp = empirical_mdp(mdp, n, rng);
        double sup = 0.0;
        for (const auto& [x, unused] : truth) {
            double f_true = 0.0, f_emp = 0.0;
            for (const auto& [v, p] : truth) f_true += v <= x ? p : 0.0;
            for (const auto& [v, p] : emp.reward[0]) f_emp += v <= x ? p : 0.0;
            sup = std::max(sup, std::abs(f_true - f_emp));
        }
        held += sup <= bound;
    }
    EXPECT_GE(held, 99);
}

TEST(EmpiricalMdp, TransitionErrorShrinksLikeRootN) {
    const auto mdp = random_mdp(6, 2, 2, 8);
    double err_n = 0.0, err_4n = 0.0;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        auto rng = make_stream(45, trial);
        for (auto [samples, acc] : {std::pair{100ul, &err_n}, std::pair{400ul, &err_4n}}) {
            const auto emp = empirical_mdp(mdp, samples, rng);
            for (std::size_t k = 0; k < mdp.transition.size(); ++k)
                for (std::size_t j = 0; j < mdp.n_states; ++j)
                    *acc += std::abs(emp.transition[k][j] - mdp.transition[k][j]);
        }
    }
    const double ratio = err_n / err_4n;
    EXPECT_GE(ratio, 1.5);
    EXPECT_LE(ratio, 3.0);
}

TEST(EmpiricalMdp, RejectsZeroSamples) {
    auto rng = make_stream(46, 0);
    EXPECT_THROW(empirical_mdp(random_mdp(2, 2, 2, 0), 0, rng), std::invalid_argument);
}

TEST(KnownModel, DiscretizedGaussianKeepsMoments) {
    const auto atoms = discretize_gaussian(-3.0, 2.0);
    EXPECT_EQ(atoms.size(), 41u);
    double total = 0.0, mean = 0.0, var = 0.0;
    for (const auto& [v, p] : atoms) {
        total += p;
        mean += p * v;
    }
    for (const auto& [v, p] : atoms) var += p * (v - mean) * (v - mean);
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(mean, -3.0, 1e-9);
    EXPECT_NEAR(std::sqrt(var), 2.0, 0.05);
}

TEST(MdpFile, ParsesExample) {
    const auto mdp = parse_mdp(kSmallMdp);
    EXPECT_EQ(mdp.n_states, 3u);
    EXPECT_TRUE(mdp.terminal[2]);
    EXPECT_EQ(std::get<FiniteReward>(mdp.reward[mdp.index(1, 0)]).atoms.size(), 2u);
    // terminal rows default to self-loops
    EXPECT_DOUBLE_EQ(mdp.transition[mdp.index(2, 1)][2], 1.0);
}

TEST(MdpFile, RoundTripsThroughText) {
    for (const auto& mdp : {random_mdp(4, 3, 3, 21), machine_replacement(), parse_mdp(kSmallMdp)})
        EXPECT_EQ(parse_mdp(dump_mdp(mdp)), mdp);
}

TEST(MdpFile, RoundTripsThroughDisk) {
    const auto path = std::filesystem::temp_directory_path() / "ocvar_roundtrip_mdp.yaml";
    const auto mdp = random_mdp(3, 2, 4, 5);
    save_mdp(mdp, path);
    EXPECT_EQ(load_mdp(path), mdp);
    std::filesystem::remove(path);
}

TEST(MdpFile, RejectsUnknownField) {
    const auto msg = parse_error_message(std::string(kSmallMdp) + "colour: blue\n");
    EXPECT_NE(msg.find("unknown field 'colour'"), std::string::npos);
    EXPECT_NE(msg.find("line 15"), std::string::npos);
}

TEST(MdpFile, RejectsNegativeProbability) {
    const auto msg = parse_error_message(
        replace_once(kSmallMdp, "[0.5, 0.0, 0.5]", "[1.5, -0.5, 0.0]"));
    EXPECT_NE(msg.find("negative"), std::string::npos);
    EXPECT_NE(msg.find("line 8"), std::string::npos);
}

TEST(MdpFile, RejectsUnnormalizedRow) {
    EXPECT_THROW(parse_mdp(replace_once(kSmallMdp, "[0.5, 0.0, 0.5]", "[0.5, 0.0, 0.4]")),
                 ParseError);
    EXPECT_NO_THROW(
        parse_mdp(replace_once(kSmallMdp, "[0.5, 0.0, 0.5]", "[0.5, 0.0, 0.5000001]")));
}

TEST(MdpFile, RejectsMissingRowsAndBadKinds) {
    EXPECT_THROW(parse_mdp(replace_once(kSmallMdp, "  - {s: 1, a: 0, probs: [0.0, 0.0, 1.0]}\n", "")),
                 ParseError);
    EXPECT_THROW(parse_mdp(replace_once(kSmallMdp, "kind: point", "kind: cauchy")), ParseError);
    EXPECT_THROW(parse_mdp("n_states: [\n"), ParseError);
    EXPECT_THROW(load_mdp("/nonexistent/ocvar.yaml"), ParseError);
}
