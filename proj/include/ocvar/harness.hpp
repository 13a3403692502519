#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ocvar/agent.hpp"
#include "ocvar/envs.hpp"

namespace ocvar {

struct EnvironmentSpec {
    /// Built-in name ("machine_replacement") or empty when `file` is set.
    std::string name = "machine_replacement";
    MachineReplacementParams params;
    std::filesystem::path file;
};

TabularMDP build_environment(const EnvironmentSpec& spec);

enum class Evaluator {
    kMonteCarlo,
    /// Exact Gaussian CVaR of the greedy threshold policy; machine replacement only.
    kClosedForm,
};

struct ExperimentConfig {
    EnvironmentSpec environment;
    AgentConfig agent;
    long episodes = 1000;
    long eval_every = 100;
    std::size_t eval_episodes = 2000;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path output = "results";
    Evaluator evaluator = Evaluator::kMonteCarlo;
    /// Record wall-clock milliseconds; off keeps CSVs byte-stable.
    bool timing = false;

    void validate() const;
};

/// Parses an experiment document. Relative environment files resolve against `base_dir`.
ExperimentConfig parse_experiment(const std::string& text,
                                  const std::filesystem::path& base_dir = ".");
ExperimentConfig load_experiment(const std::filesystem::path& path);

struct RunRecord {
    std::uint64_t seed = 0;
    long episode = 0;
    double cvar_alpha = 0.0;
    double expected_return = 0.0;
    double epsilon = 0.0;
    long millis = 0;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    std::vector<RunRecord> records;
    std::optional<std::string> error;
};

/// Trains one seed and evaluates the greedy policy every eval_every episodes.
SeedOutcome run_seed(const ExperimentConfig& cfg, const TabularMDP& mdp, std::uint64_t seed);

struct SummaryRow {
    long episode = 0;
    double mean_cvar = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_seeds = 0;
};

/// Per-episode mean and mean +/- 1.96 * sd / sqrt(n) across seeds.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

/// Closed-form CVaR of the greedy policy of a machine-replacement table.
double greedy_threshold_cvar(const ReturnTable& table, const MachineReplacementParams& params,
                             double alpha);

/// Per-episode greedy-policy CVaR (closed form) while training on machine replacement.
std::vector<double> machine_replacement_curve(const MachineReplacementParams& params,
                                              const AgentConfig& agent, long episodes,
                                              std::uint64_t seed);

/// First episode e (1-based) such that curve[e-1 .. e-1+hold) all lie within
/// `tol` of `optimum`; nullopt if the curve never stabilizes.
std::optional<long> episodes_to_stable(const std::vector<double>& curve, double optimum,
                                       double tol = 0.5, long hold = 500);

/// Dotted-key sweep: key -> list of values, in document order.
using SweepSpec = std::vector<std::pair<std::string, std::vector<std::string>>>;
SweepSpec parse_sweep(const std::string& text);

struct CliOptions {
    std::optional<std::filesystem::path> out;
    std::size_t jobs = 1;
};

int cmd_run(const std::filesystem::path& config, const CliOptions& opts, std::ostream& log);
int cmd_sweep(const std::filesystem::path& config, const std::filesystem::path& sweep,
              const CliOptions& opts, std::ostream& log);
/// `env` is a built-in name or an MDP file; `overrides` are key=value pairs
/// for the machine-replacement parameters.
int cmd_oracle(const std::string& env, double alpha,
               const std::map<std::string, std::string>& overrides, const CliOptions& opts,
               std::ostream& out);
int cmd_theory_check(const std::string& suite, std::uint64_t seed, const CliOptions& opts,
                     std::ostream& out);

}  // namespace ocvar
