#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ocvar/envs.hpp"
#include "ocvar/harness.hpp"
#include "ocvar/theorycheck.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Optimistic distributional CVaR experiments"};
    app.require_subcommand(1);

    ocvar::CliOptions opts;
    std::string out_dir;
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);

    std::string config, sweep_spec, env, suite;
    double alpha = 0.25;
    std::uint64_t seed = 0;
    std::vector<std::string> params;

    auto* run = app.add_subcommand("run", "Train and evaluate every seed of an experiment");
    run->add_option("config", config, "Experiment YAML")->required()->check(CLI::ExistingFile);

    auto* sweep = app.add_subcommand("sweep", "Run the Cartesian product of a parameter sweep");
    sweep->add_option("config", config, "Base experiment YAML")->required()->check(CLI::ExistingFile);
    sweep->add_option("sweep", sweep_spec, "Sweep YAML (dotted key -> list of values)")
        ->required()
        ->check(CLI::ExistingFile);

    auto* oracle = app.add_subcommand("oracle", "Exact CVaR-optimal stationary policy");
    oracle->add_option("env", env, "machine_replacement or an MDP YAML file")->required();
    oracle->add_option("--alpha", alpha, "Risk level in (0, 1]")->check(CLI::Range(0.0, 1.0));
    oracle->add_option("--param", params, "Machine-replacement parameter override key=value");

    auto* theory = app.add_subcommand("theory-check", "Numerical checks of the operator theory");
    std::string suites_help = "Suite: all";
    for (const auto& name : ocvar::suite_names()) suites_help += ", " + name;
    theory->add_option("suite", suite, suites_help)->required();
    theory->add_option("--seed", seed, "Master seed");

    for (auto* sub : {run, sweep, oracle, theory}) {
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
    }

    CLI11_PARSE(app, argc, argv);
    if (!out_dir.empty()) opts.out = out_dir;

    try {
        if (*run) return ocvar::cmd_run(config, opts, std::cerr);
        if (*sweep) return ocvar::cmd_sweep(config, sweep_spec, opts, std::cerr);
        if (*oracle) {
            if (!(alpha > 0.0)) throw ocvar::ParseError("--alpha must lie in (0, 1]");
            std::map<std::string, std::string> overrides;
            for (const auto& p : params) {
                const auto eq = p.find('=');
                if (eq == std::string::npos || eq == 0)
                    throw ocvar::ParseError("--param expects key=value, got '" + p + "'");
                overrides[p.substr(0, eq)] = p.substr(eq + 1);
            }
            return ocvar::cmd_oracle(env, alpha, overrides, opts, std::cout);
        }
        return ocvar::cmd_theory_check(suite, seed, opts, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
