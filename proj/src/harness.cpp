#include "ocvar/harness.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "ocvar/oracle.hpp"
#include "ocvar/parallel.hpp"
#include "ocvar/theorycheck.hpp"
#include "yaml_util.hpp"

namespace ocvar {
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

bool is_machine_replacement(const std::string& name) {
    return name == "machine_replacement" || name == "machine-replacement";
}

void set_mr_param(MachineReplacementParams& p, const std::string& key, double value) {
    if (key == "n") {
        if (value < 2 || value != std::floor(value)) throw ParseError("n must be an integer >= 2");
        p.n = static_cast<std::size_t>(value);
    } else if (key == "r_max") {
        p.r_max = value;
    } else if (key == "r_min") {
        p.r_min = value;
    } else if (key == "mu_last") {
        p.mu_last = value;
    } else if (key == "gamma") {
        p.gamma = value;
    } else if (key == "sigma_last") {
        p.sigma_last = value;
    } else if (key == "sigma_keep") {
        p.sigma_keep = value;
    } else {
        throw ParseError("unknown machine-replacement parameter '" + key + "'");
    }
}

EnvironmentSpec read_environment(const YAML::Node& node, const fs::path& base_dir) {
    yaml::check_keys(node, {"name", "params", "file"}, "environment");
    EnvironmentSpec env;
    if (const auto file = node["file"]) {
        if (node["name"] || node["params"])
            yaml::fail(node, "environment takes either 'file' or 'name'/'params'");
        env.name.clear();
        env.file = base_dir / yaml::get<std::string>(node, "file", "environment");
        return env;
    }
    env.name = yaml::get_or<std::string>(node, "name", env.name);
    if (!is_machine_replacement(env.name))
        yaml::fail(node, "unknown environment '" + env.name + "'");
    if (const auto params = node["params"]) {
        yaml::check_keys(params, {"n", "r_max", "r_min", "mu_last", "gamma", "sigma_last",
                                  "sigma_keep"},
                         "environment.params");
        for (const auto& kv : params) {
            const auto key = kv.first.as<std::string>();
            set_mr_param(env.params, key, yaml::get<double>(params, key, "environment.params"));
        }
    }
    return env;
}

template <typename Enum>
Enum read_enum(const YAML::Node& node, const std::string& key, const std::string& context,
               std::initializer_list<std::pair<const char*, Enum>> options, Enum fallback) {
    if (!node[key]) return fallback;
    const auto value = yaml::get<std::string>(node, key, context);
    std::string names;
    for (const auto& [name, e] : options) {
        if (value == name) return e;
        names += names.empty() ? name : std::string(", ") + name;
    }
    yaml::fail(node[key], "'" + context + "." + key + "' must be one of: " + names);
}

EpsilonSchedule read_epsilon(const YAML::Node& node) {
    const auto kind = yaml::get<std::string>(node, "kind", "agent.epsilon");
    if (kind == "linear") {
        yaml::check_keys(node, {"kind", "start", "end", "n_steps"}, "agent.epsilon");
        LinearSchedule s;
        s.start = yaml::get_or(node, "start", s.start);
        s.end = yaml::get_or(node, "end", s.end);
        s.n_steps = yaml::get_or(node, "n_steps", s.n_steps);
        return s;
    }
    if (kind == "exponential") {
        yaml::check_keys(node, {"kind", "eps0", "decay", "step"}, "agent.epsilon");
        ExponentialSchedule s;
        s.eps0 = yaml::get_or(node, "eps0", s.eps0);
        s.decay = yaml::get_or(node, "decay", s.decay);
        s.step = yaml::get_or(node, "step", s.step);
        return s;
    }
    yaml::fail(node, "'agent.epsilon.kind' must be linear or exponential");
}

AgentConfig read_agent(const YAML::Node& node, double env_gamma) {
    AgentConfig a;
    a.gamma = env_gamma;
    if (!node) return a;
    yaml::check_keys(node, {"risk_alpha", "c", "beta", "gamma", "grid", "mode", "count_source",
                            "exploration", "epsilon", "density_learning_rate", "kappa",
                            "step_cap", "policy"},
                     "agent");
    a.risk_alpha = yaml::get_or(node, "risk_alpha", a.risk_alpha);
    a.c = yaml::get_or(node, "c", a.c);
    a.beta = yaml::get_or(node, "beta", a.beta);
    a.gamma = yaml::get_or(node, "gamma", a.gamma);
    if (const auto grid = node["grid"]) {
        yaml::check_keys(grid, {"v_min", "v_max", "n_atoms"}, "agent.grid");
        try {
            a.grid = SupportGrid(yaml::get<double>(grid, "v_min", "agent.grid"),
                                 yaml::get<double>(grid, "v_max", "agent.grid"),
                                 yaml::get<std::size_t>(grid, "n_atoms", "agent.grid"));
        } catch (const std::invalid_argument& e) {
            yaml::fail(grid, std::string("invalid grid: ") + e.what());
        }
    }
    a.mode = read_enum<AgentMode>(node, "mode", "agent",
                                  {{"control", AgentMode::kControl},
                                   {"evaluation", AgentMode::kEvaluation}},
                                  a.mode);
    a.count_source = read_enum<CountMode>(node, "count_source", "agent",
                                          {{"exact", CountMode::kExact},
                                           {"pseudo_exact", CountMode::kPseudoExact},
                                           {"pseudo_taylor", CountMode::kPseudoTaylor}},
                                          a.count_source);
    a.exploration = read_enum<Exploration>(node, "exploration", "agent",
                                           {{"optimistic", Exploration::kOptimistic},
                                            {"epsilon_greedy", Exploration::kEpsilonGreedy}},
                                           a.exploration);
    if (const auto eps = node["epsilon"]) a.epsilon = read_epsilon(eps);
    a.density_learning_rate = yaml::get_or(node, "density_learning_rate", a.density_learning_rate);
    a.kappa = yaml::get_or(node, "kappa", a.kappa);
    a.step_cap = yaml::get_or(node, "step_cap", a.step_cap);
    if (const auto rows = node["policy"]) {
        if (!rows.IsSequence() || rows.size() == 0) yaml::fail(rows, "'agent.policy' must be a list of rows");
        std::vector<double> probs;
        std::size_t width = 0;
        for (const auto& row : rows) {
            const auto values = row.as<std::vector<double>>();
            if (width == 0) width = values.size();
            if (values.size() != width || width == 0) yaml::fail(row, "policy rows differ in length");
            probs.insert(probs.end(), values.begin(), values.end());
        }
        try {
            a.evaluation_policy = PolicyTable(rows.size(), width, std::move(probs));
        } catch (const std::invalid_argument& e) {
            yaml::fail(rows, std::string("invalid policy: ") + e.what());
        }
    }
    return a;
}

ExperimentConfig read_experiment(const YAML::Node& doc, const fs::path& base_dir) {
    yaml::check_keys(doc, {"environment", "agent", "episodes", "eval_every", "eval_episodes",
                           "seeds", "output", "evaluator", "timing"},
                     "");
    ExperimentConfig cfg;
    if (const auto env = doc["environment"]) cfg.environment = read_environment(env, base_dir);
    const double env_gamma = cfg.environment.file.empty()
                                 ? cfg.environment.params.gamma
                                 : build_environment(cfg.environment).gamma;
    cfg.agent = read_agent(doc["agent"], env_gamma);
    cfg.episodes = yaml::get_or(doc, "episodes", cfg.episodes);
    cfg.eval_every = yaml::get_or(doc, "eval_every", cfg.eval_every);
    cfg.eval_episodes = yaml::get_or(doc, "eval_episodes", cfg.eval_episodes);
    if (const auto seeds = doc["seeds"]) {
        if (!seeds.IsSequence()) yaml::fail(seeds, "'seeds' must be a list of integers");
        cfg.seeds.clear();
        for (const auto& s : seeds) {
            try {
                cfg.seeds.push_back(s.as<std::uint64_t>());
            } catch (const YAML::Exception&) {
                yaml::fail(s, "seeds must be nonnegative integers");
            }
        }
    }
    cfg.output = yaml::get_or<std::string>(doc, "output", cfg.output.string());
    cfg.evaluator = read_enum<Evaluator>(doc, "evaluator", "",
                                         {{"monte_carlo", Evaluator::kMonteCarlo},
                                          {"closed_form", Evaluator::kClosedForm}},
                                         cfg.evaluator);
    cfg.timing = yaml::get_or(doc, "timing", cfg.timing);
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("invalid experiment: ") + e.what());
    }
    return cfg;
}

// Rebinds through the dotted path, creating maps as needed, and stores `value`.
void apply_override(YAML::Node& root, const std::string& dotted, const std::string& value) {
    YAML::Node cur;
    cur.reset(root);
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted.find('.', start);
        const auto part = dotted.substr(start, dot == std::string::npos ? std::string::npos
                                                                         : dot - start);
        if (part.empty()) throw ParseError("malformed sweep key '" + dotted + "'");
        if (dot == std::string::npos) {
            cur[part] = YAML::Load(value);
            return;
        }
        if (!cur[part] || !cur[part].IsMap()) {
            if (cur[part] && !cur[part].IsMap())
                throw ParseError("sweep key '" + dotted + "' descends into a non-mapping field");
            cur[part] = YAML::Node(YAML::NodeType::Map);
        }
        YAML::Node child = cur[part];
        cur.reset(child);
        start = dot + 1;
    }
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string format_records_csv(const std::vector<RunRecord>& records) {
    std::string out = "seed,episode,cvar_alpha,expected_return,epsilon,millis\n";
    for (const auto& r : records)
        out += fmt::format("{},{},{},{},{},{}\n", r.seed, r.episode, r.cvar_alpha,
                           r.expected_return, r.epsilon, r.millis);
    return out;
}

const char* evaluator_name(Evaluator e) {
    return e == Evaluator::kClosedForm ? "closed_form" : "monte_carlo";
}

struct RunOutcome {
    bool ok = true;
    std::size_t failed_seeds = 0;
};

RunOutcome execute_run(const ExperimentConfig& cfg, std::size_t jobs, std::ostream& log) {
    const auto mdp = build_environment(cfg.environment);
    if (cfg.agent.evaluation_policy &&
        (cfg.agent.evaluation_policy->n_states() != mdp.n_states ||
         cfg.agent.evaluation_policy->n_actions() != mdp.n_actions))
        throw ParseError("agent.policy does not match the environment dimensions");
    fs::create_directories(cfg.output);

    std::vector<SeedOutcome> outcomes(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), jobs,
                 [&](std::size_t i) { outcomes[i] = run_seed(cfg, mdp, cfg.seeds[i]); });

    std::vector<RunRecord> records;
    RunOutcome result;
    std::string errors;
    for (const auto& o : outcomes) {
        records.insert(records.end(), o.records.begin(), o.records.end());
        if (o.error) {
            ++result.failed_seeds;
            errors += fmt::format("{},{}\n", o.seed, csv_quote(*o.error));
            fmt::print(log, "seed {} failed: {}\n", o.seed, *o.error);
        }
    }
    result.ok = result.failed_seeds == 0;

    open_output(cfg.output / "runs.csv") << format_records_csv(records);
    auto summary = open_output(cfg.output / "summary.csv");
    fmt::print(summary, "# alpha={} eval_every={} eval_episodes={} evaluator={} seeds={}\n",
               cfg.agent.risk_alpha, cfg.eval_every, cfg.eval_episodes,
               evaluator_name(cfg.evaluator), cfg.seeds.size());
    summary << "episode,mean_cvar,ci_low,ci_high,n_seeds\n";
    for (const auto& row : summarize(records))
        fmt::print(summary, "{},{},{},{},{}\n", row.episode, row.mean_cvar, row.ci_low,
                   row.ci_high, row.n_seeds);
    if (!errors.empty()) open_output(cfg.output / "failures.csv") << "seed,error\n" << errors;
    fmt::print(log, "{}: {} seeds, {} failed\n", cfg.output.string(), cfg.seeds.size(),
               result.failed_seeds);
    return result;
}

}  // namespace

TabularMDP build_environment(const EnvironmentSpec& spec) {
    if (!spec.file.empty()) return load_mdp(spec.file);
    if (!is_machine_replacement(spec.name)) throw ParseError("unknown environment '" + spec.name + "'");
    try {
        return machine_replacement(spec.params);
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("invalid machine-replacement parameters: ") + e.what());
    }
}

void ExperimentConfig::validate() const {
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("seeds must not be empty");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw std::invalid_argument("seeds must be distinct");
    agent.validate();
    if (evaluator == Evaluator::kMonteCarlo && agent.mode == AgentMode::kControl) {
        const auto needed = static_cast<std::size_t>(std::ceil(10.0 / agent.risk_alpha));
        if (eval_episodes < needed)
            throw std::invalid_argument("eval_episodes must be >= ceil(10 / risk_alpha) = " +
                                        std::to_string(needed));
    }
    if (evaluator == Evaluator::kClosedForm && !is_machine_replacement(environment.name))
        throw std::invalid_argument("the closed-form evaluator needs the machine_replacement environment");
}

ExperimentConfig parse_experiment(const std::string& text, const fs::path& base_dir) {
    return read_experiment(yaml::parse_text(text), base_dir);
}

ExperimentConfig load_experiment(const fs::path& path) {
    try {
        return parse_experiment(read_file(path), path.parent_path());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

double greedy_threshold_cvar(const ReturnTable& table, const MachineReplacementParams& params,
                             double alpha) {
    const auto k = first_replace_state(greedy_cvar_policy(table, alpha), params);
    return threshold_policy_value(params, k, alpha).cvar;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, const TabularMDP& mdp, std::uint64_t seed) {
    SeedOutcome out;
    out.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    try {
        Rng env_rng = make_stream(seed, 1);
        Rng agent_rng = make_stream(seed, 2);
        Rng eval_rng = make_stream(seed, 3);
        auto state = AgentState::create(cfg.agent, mdp.n_states, mdp.n_actions);
        const auto& agent = cfg.agent;
        for (long e = 1; e <= cfg.episodes; ++e) {
            run_episode(mdp, state, agent, env_rng, agent_rng);
            if (e % cfg.eval_every != 0) continue;
            RunRecord rec;
            rec.seed = seed;
            rec.episode = e;
            if (agent.exploration == Exploration::kEpsilonGreedy && agent.mode == AgentMode::kControl)
                rec.epsilon = epsilon_for(agent.epsilon, state.total_steps, state.episodes);
            if (agent.mode == AgentMode::kEvaluation) {
                // learned distribution of the evaluated policy at the start state
                const auto s0 = mdp.initial_state;
                std::vector<double> mix(agent.grid.size(), 0.0);
                for (std::size_t a = 0; a < mdp.n_actions; ++a)
                    for (std::size_t j = 0; j < mix.size(); ++j)
                        mix[j] += agent.evaluation_policy->prob(s0, a) * state.table.at(s0, a).prob(j);
                const CategoricalDistribution z(agent.grid, std::move(mix));
                rec.cvar_alpha = cvar(z, agent.risk_alpha);
                rec.expected_return = z.mean();
            } else if (cfg.evaluator == Evaluator::kClosedForm) {
                const auto policy = greedy_cvar_policy(state.table, agent.risk_alpha);
                const auto v = threshold_policy_value(
                    cfg.environment.params, first_replace_state(policy, cfg.environment.params),
                    agent.risk_alpha);
                rec.cvar_alpha = v.cvar;
                rec.expected_return = v.mean;
            } else {
                const auto policy = greedy_cvar_policy(state.table, agent.risk_alpha);
                const auto mc = monte_carlo_cvar(mdp, policy, agent.risk_alpha,
                                                 cfg.eval_episodes, eval_rng);
                rec.cvar_alpha = mc.estimate;
                rec.expected_return = mc.mean;
            }
            if (cfg.timing)
                rec.millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
            out.records.push_back(rec);
        }
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
    std::map<long, std::vector<double>> by_episode;
    for (const auto& r : records) by_episode[r.episode].push_back(r.cvar_alpha);
    std::vector<SummaryRow> out;
    for (const auto& [episode, values] : by_episode) {
        const double n = static_cast<double>(values.size());
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        const double half = 1.96 * sd / std::sqrt(n);
        out.push_back({episode, mean, mean - half, mean + half, values.size()});
    }
    return out;
}

std::vector<double> machine_replacement_curve(const MachineReplacementParams& params,
                                              const AgentConfig& agent, long episodes,
                                              std::uint64_t seed) {
    const auto mdp = machine_replacement(params);
    Rng env_rng = make_stream(seed, 1);
    Rng agent_rng = make_stream(seed, 2);
    auto state = AgentState::create(agent, mdp.n_states, mdp.n_actions);
    std::vector<double> curve;
    curve.reserve(static_cast<std::size_t>(std::max(episodes, 0L)));
    for (long e = 0; e < episodes; ++e) {
        run_episode(mdp, state, agent, env_rng, agent_rng);
        curve.push_back(greedy_threshold_cvar(state.table, params, agent.risk_alpha));
    }
    return curve;
}

std::optional<long> episodes_to_stable(const std::vector<double>& curve, double optimum,
                                       double tol, long hold) {
    long run = 0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        run = std::abs(curve[i] - optimum) <= tol ? run + 1 : 0;
        if (run >= hold) return static_cast<long>(i) - hold + 2;
    }
    return std::nullopt;
}

SweepSpec parse_sweep(const std::string& text) {
    const auto doc = yaml::parse_text(text);
    if (!doc || doc.IsNull()) throw ParseError("empty sweep");
    yaml::require_map(doc, "sweep");
    SweepSpec spec;
    for (const auto& kv : doc) {
        const auto key = kv.first.as<std::string>();
        if (key.empty() || key.front() == '.' || key.back() == '.' ||
            key.find("..") != std::string::npos)
            yaml::fail(kv.first, "malformed sweep key '" + key + "'");
        if (!kv.second.IsSequence()) yaml::fail(kv.second, "sweep key '" + key + "' needs a list of values");
        if (kv.second.size() == 0) yaml::fail(kv.second, "sweep key '" + key + "' has no values");
        std::vector<std::string> values;
        for (const auto& v : kv.second) {
            YAML::Emitter em;
            em << YAML::Flow << v;
            values.emplace_back(em.c_str());
        }
        spec.emplace_back(key, std::move(values));
    }
    if (spec.empty()) throw ParseError("empty sweep");
    return spec;
}

int cmd_run(const fs::path& config, const CliOptions& opts, std::ostream& log) {
    auto cfg = load_experiment(config);
    if (opts.out) cfg.output = *opts.out;
    return execute_run(cfg, opts.jobs, log).ok ? 0 : 1;
}

int cmd_sweep(const fs::path& config, const fs::path& sweep, const CliOptions& opts,
              std::ostream& log) {
    const auto text = read_file(config);
    const auto base = load_experiment(config);
    SweepSpec spec;
    try {
        spec = parse_sweep(read_file(sweep));
    } catch (const ParseError& e) {
        throw ParseError(sweep.string() + ": " + e.what());
    }
    const fs::path root = opts.out ? *opts.out : base.output;

    std::size_t cells = 1;
    for (const auto& [key, values] : spec) cells *= values.size();
    std::vector<ExperimentConfig> configs;
    std::vector<std::vector<std::string>> chosen;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        YAML::Node doc = YAML::Load(text);
        std::vector<std::string> picks(spec.size());
        std::size_t rest = cell;
        for (std::size_t k = spec.size(); k-- > 0;) {
            const auto& values = spec[k].second;
            picks[k] = values[rest % values.size()];
            rest /= values.size();
        }
        for (std::size_t k = 0; k < spec.size(); ++k) apply_override(doc, spec[k].first, picks[k]);
        try {
            configs.push_back(read_experiment(doc, config.parent_path()));
        } catch (const ParseError& e) {
            throw ParseError(sweep.string() + ": " + e.what());
        }
        configs.back().output = root / fmt::format("cell_{:03d}", cell);
        chosen.push_back(std::move(picks));
    }

    std::vector<RunOutcome> outcomes(cells);
    std::vector<std::string> errors(cells);
    parallel_for(cells, opts.jobs, [&](std::size_t i) {
        std::ostringstream cell_log;
        try {
            outcomes[i] = execute_run(configs[i], 1, cell_log);
        } catch (const std::exception& e) {
            outcomes[i].ok = false;
            errors[i] = e.what();
        }
    });

    fs::create_directories(root);
    auto index = open_output(root / "index.csv");
    index << "cell,directory";
    for (const auto& [key, values] : spec) index << ',' << csv_quote(key);
    index << ",status\n";
    bool all_ok = true;
    for (std::size_t i = 0; i < cells; ++i) {
        index << i << ',' << csv_quote(configs[i].output.filename().string());
        for (const auto& v : chosen[i]) index << ',' << csv_quote(v);
        const bool ok = outcomes[i].ok;
        all_ok = all_ok && ok;
        index << ',' << (ok ? "ok" : "failed") << '\n';
        if (!errors[i].empty()) fmt::print(log, "cell {} failed: {}\n", i, errors[i]);
    }
    fmt::print(log, "{}: {} cells, index written to {}\n", root.string(), cells,
               (root / "index.csv").string());
    return all_ok ? 0 : 1;
}

int cmd_oracle(const std::string& env, double alpha,
               const std::map<std::string, std::string>& overrides, const CliOptions& opts,
               std::ostream& out) {
    std::string csv;
    if (is_machine_replacement(env)) {
        MachineReplacementParams params;
        for (const auto& [key, value] : overrides) {
            double v = 0.0;
            try {
                std::size_t used = 0;
                v = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
            } catch (const std::exception&) {
                throw ParseError("parameter '" + key + "' needs a number, got '" + value + "'");
            }
            set_mr_param(params, key, v);
        }
        machine_replacement(params);  // validates the parameters
        const auto result = machine_replacement_optimal(params, alpha);
        const auto label = [&](std::size_t k) {
            return k == params.n ? std::string("never") : fmt::format("replace_at_{}", k);
        };
        csv += fmt::format("# machine_replacement alpha={} gamma={}\n", alpha, params.gamma);
        csv += fmt::format("optimal_policy,{}\noptimal_threshold,{}\noptimal_cvar,{}\n",
                           label(result.best.threshold), result.best.threshold, result.best.cvar);
        csv += "threshold,policy,mean,stddev,cvar\n";
        for (const auto& p : result.policies)
            csv += fmt::format("{},{},{},{},{}\n", p.threshold, label(p.threshold), p.mean,
                               p.stddev, p.cvar);
    } else {
        if (!overrides.empty()) throw ParseError("--param applies to machine_replacement only");
        if (!fs::exists(env))
            throw ParseError("unknown environment '" + env +
                             "' (expected machine_replacement or an MDP file)");
        const auto mdp = load_mdp(env);
        const auto result = enumerate_deterministic_policies(mdp, alpha);
        const auto join = [](const std::vector<std::size_t>& actions) {
            std::string s;
            for (std::size_t i = 0; i < actions.size(); ++i)
                s += (i ? " " : "") + std::to_string(actions[i]);
            return s;
        };
        csv += fmt::format("# {} alpha={} (exact evaluation of {} deterministic policies)\n", env,
                           alpha, result.policies.size());
        csv += fmt::format("optimal_policy,{}\noptimal_cvar,{}\n", join(result.best.actions),
                           result.best.cvar);
        csv += "index,actions,cvar\n";
        for (std::size_t i = 0; i < result.policies.size(); ++i)
            csv += fmt::format("{},{},{}\n", i, join(result.policies[i].actions),
                               result.policies[i].cvar);
    }
    out << csv;
    if (opts.out) {
        fs::create_directories(*opts.out);
        open_output(*opts.out / "oracle.csv") << csv;
    }
    return 0;
}

int cmd_theory_check(const std::string& suite, std::uint64_t seed, const CliOptions& opts,
                     std::ostream& out) {
    const auto reports = run_suite(suite, seed, opts.jobs);
    const fs::path dir = opts.out ? *opts.out : fs::path("results");
    fs::create_directories(dir);
    auto csv = open_output(dir / fmt::format("theory_check_{}.csv", suite));
    csv << "check,passed,trials,violations,worst_margin,detail\n";
    bool all = true;
    for (const auto& r : reports) {
        all = all && r.passed;
        fmt::print(out, "{} {:<22} trials={:<6} violations={:<4} worst_margin={:.3e} ({:.2f}s) {}\n",
                   r.passed ? "PASS" : "FAIL", r.name, r.trials, r.violations, r.worst_margin,
                   r.seconds, r.detail);
        csv << fmt::format("{},{},{},{},{},{}\n", r.name, r.passed ? 1 : 0, r.trials,
                           r.violations, r.worst_margin, csv_quote(r.detail));
    }
    fmt::print(out, "{} ({} checks), report: {}\n", all ? "all checks passed" : "some checks failed",
               reports.size(), (dir / fmt::format("theory_check_{}.csv", suite)).string());
    return all ? 0 : 1;
}

}  // namespace ocvar
