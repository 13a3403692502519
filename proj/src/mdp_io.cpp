#include <cmath>
#include <fstream>
#include <sstream>

#include "ocvar/envs.hpp"
#include "yaml_util.hpp"

namespace ocvar {
namespace {

std::vector<double> read_probs(const YAML::Node& node, const std::string& what) {
    if (!node.IsSequence()) yaml::fail(node, what + " must be a list");
    std::vector<double> out;
    for (const auto& x : node) {
        try {
            out.push_back(x.as<double>());
        } catch (const YAML::Exception&) {
            yaml::fail(x, what + " entries must be numbers");
        }
        if (!std::isfinite(out.back()) || out.back() < 0.0)
            yaml::fail(x, what + " contains a negative or non-finite probability");
    }
    return out;
}

// Rows within 1e-6 of one are accepted; tiny rounding is normalized away.
void normalize_row(std::vector<double>& row, const YAML::Node& where, const std::string& what) {
    double total = 0.0;
    for (double p : row) total += p;
    if (std::abs(total - 1.0) > 1e-6)
        yaml::fail(where, what + " sums to " + std::to_string(total) + ", expected 1");
    if (std::abs(total - 1.0) > 1e-12)
        for (auto& p : row) p /= total;
}

std::pair<std::size_t, std::size_t> read_pair(const YAML::Node& entry, const TabularMDP& mdp,
                                              const std::string& context) {
    const auto s = yaml::get<long>(entry, "s", context);
    const auto a = yaml::get<long>(entry, "a", context);
    if (s < 0 || static_cast<std::size_t>(s) >= mdp.n_states)
        yaml::fail(entry, context + ": state " + std::to_string(s) + " out of range");
    if (a < 0 || static_cast<std::size_t>(a) >= mdp.n_actions)
        yaml::fail(entry, context + ": action " + std::to_string(a) + " out of range");
    return {static_cast<std::size_t>(s), static_cast<std::size_t>(a)};
}

RewardSpec read_reward(const YAML::Node& entry) {
    const auto kind = yaml::get<std::string>(entry, "kind", "rewards");
    const auto params = entry["params"];
    if (!params) yaml::fail(entry, "reward entry needs 'params'");
    if (kind == "point") {
        yaml::check_keys(params, {"value"}, "params");
        return PointReward{yaml::get<double>(params, "value", "params")};
    }
    if (kind == "gaussian") {
        yaml::check_keys(params, {"mean", "stddev"}, "params");
        GaussianReward g{yaml::get<double>(params, "mean", "params"),
                         yaml::get<double>(params, "stddev", "params")};
        if (!(g.stddev >= 0.0)) yaml::fail(params, "gaussian stddev must be nonnegative");
        return g;
    }
    if (kind == "finite") {
        yaml::check_keys(params, {"values", "probs"}, "params");
        const auto values_node = params["values"];
        if (!values_node || !values_node.IsSequence()) yaml::fail(params, "finite reward needs 'values'");
        if (!params["probs"]) yaml::fail(params, "finite reward needs 'probs'");
        auto probs = read_probs(params["probs"], "reward probs");
        if (probs.size() != values_node.size())
            yaml::fail(params, "finite reward 'values' and 'probs' differ in length");
        normalize_row(probs, params, "reward probs");
        FiniteReward f;
        for (std::size_t i = 0; i < probs.size(); ++i)
            f.atoms.push_back({values_node[i].as<double>(), probs[i]});
        return f;
    }
    yaml::fail(entry, "unknown reward kind '" + kind + "'");
}

}  // namespace

TabularMDP parse_mdp(const std::string& text) {
    const YAML::Node doc = yaml::parse_text(text);
    yaml::check_keys(doc, {"n_states", "n_actions", "gamma", "terminal", "initial", "transitions",
                           "rewards"},
                     "");
    TabularMDP mdp;
    const auto n_states = yaml::get<long>(doc, "n_states", "");
    const auto n_actions = yaml::get<long>(doc, "n_actions", "");
    if (n_states <= 0 || n_actions <= 0) yaml::fail(doc, "n_states and n_actions must be positive");
    mdp.n_states = static_cast<std::size_t>(n_states);
    mdp.n_actions = static_cast<std::size_t>(n_actions);
    mdp.gamma = yaml::get<double>(doc, "gamma", "");
    if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0)) yaml::fail(doc["gamma"], "gamma must lie in [0, 1)");
    const auto initial = yaml::get_or<long>(doc, "initial", 0);
    if (initial < 0 || initial >= n_states) yaml::fail(doc, "initial state out of range");
    mdp.initial_state = static_cast<std::size_t>(initial);

    mdp.terminal.assign(mdp.n_states, false);
    if (const auto term = doc["terminal"]) {
        if (!term.IsSequence()) yaml::fail(term, "terminal must be a list of states");
        for (const auto& x : term) {
            const auto s = x.as<long>();
            if (s < 0 || s >= n_states) yaml::fail(x, "terminal state out of range");
            mdp.terminal[static_cast<std::size_t>(s)] = true;
        }
    }

    const std::size_t pairs = mdp.n_states * mdp.n_actions;
    mdp.transition.assign(pairs, {});
    mdp.reward.assign(pairs, PointReward{0.0});
    std::vector<bool> has_row(pairs, false), has_reward(pairs, false);

    const auto transitions = doc["transitions"];
    if (!transitions || !transitions.IsSequence()) yaml::fail(doc, "missing list 'transitions'");
    for (const auto& entry : transitions) {
        yaml::check_keys(entry, {"s", "a", "probs"}, "transitions");
        const auto [s, a] = read_pair(entry, mdp, "transitions");
        const auto k = mdp.index(s, a);
        if (has_row[k]) yaml::fail(entry, "duplicate transition row for (" + std::to_string(s) +
                                              ", " + std::to_string(a) + ")");
        if (!entry["probs"]) yaml::fail(entry, "transition entry needs 'probs'");
        auto row = read_probs(entry["probs"], "transition probs");
        if (row.size() != mdp.n_states) yaml::fail(entry, "transition row must have n_states entries");
        normalize_row(row, entry, "transition row");
        mdp.transition[k] = std::move(row);
        has_row[k] = true;
    }

    if (const auto rewards = doc["rewards"]) {
        if (!rewards.IsSequence()) yaml::fail(rewards, "'rewards' must be a list");
        for (const auto& entry : rewards) {
            yaml::check_keys(entry, {"s", "a", "kind", "params"}, "rewards");
            const auto [s, a] = read_pair(entry, mdp, "rewards");
            const auto k = mdp.index(s, a);
            if (has_reward[k]) yaml::fail(entry, "duplicate reward entry");
            mdp.reward[k] = read_reward(entry);
            has_reward[k] = true;
        }
    }

    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            const auto k = mdp.index(s, a);
            if (has_row[k]) continue;
            if (!mdp.terminal[s])
                yaml::fail(doc, "missing transition row for (" + std::to_string(s) + ", " +
                                    std::to_string(a) + ")");
            mdp.transition[k].assign(mdp.n_states, 0.0);
            mdp.transition[k][s] = 1.0;
        }
    }
    try {
        mdp.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("invalid MDP: ") + e.what());
    }
    return mdp;
}

TabularMDP load_mdp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open MDP file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_mdp(buffer.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string dump_mdp(const TabularMDP& mdp) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "n_states" << YAML::Value << mdp.n_states;
    out << YAML::Key << "n_actions" << YAML::Value << mdp.n_actions;
    out << YAML::Key << "gamma" << YAML::Value << mdp.gamma;
    out << YAML::Key << "initial" << YAML::Value << mdp.initial_state;
    out << YAML::Key << "terminal" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (std::size_t s = 0; s < mdp.n_states; ++s)
        if (mdp.terminal[s]) out << s;
    out << YAML::EndSeq;
    out << YAML::Key << "transitions" << YAML::Value << YAML::BeginSeq;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            out << YAML::Flow << YAML::BeginMap << YAML::Key << "s" << YAML::Value << s
                << YAML::Key << "a" << YAML::Value << a << YAML::Key << "probs" << YAML::Value
                << YAML::Flow << mdp.transition[mdp.index(s, a)] << YAML::EndMap;
        }
    }
    out << YAML::EndSeq;
    out << YAML::Key << "rewards" << YAML::Value << YAML::BeginSeq;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            out << YAML::Flow << YAML::BeginMap << YAML::Key << "s" << YAML::Value << s
                << YAML::Key << "a" << YAML::Value << a;
            std::visit(
                [&](const auto& r) {
                    using T = std::decay_t<decltype(r)>;
                    if constexpr (std::is_same_v<T, PointReward>) {
                        out << YAML::Key << "kind" << YAML::Value << "point" << YAML::Key
                            << "params" << YAML::Value << YAML::BeginMap << YAML::Key << "value"
                            << YAML::Value << r.value << YAML::EndMap;
                    } else if constexpr (std::is_same_v<T, GaussianReward>) {
                        out << YAML::Key << "kind" << YAML::Value << "gaussian" << YAML::Key
                            << "params" << YAML::Value << YAML::BeginMap << YAML::Key << "mean"
                            << YAML::Value << r.mean << YAML::Key << "stddev" << YAML::Value
                            << r.stddev << YAML::EndMap;
                    } else {
                        std::vector<double> values, probs;
                        for (const auto& [v, p] : r.atoms) {
                            values.push_back(v);
                            probs.push_back(p);
                        }
                        out << YAML::Key << "kind" << YAML::Value << "finite" << YAML::Key
                            << "params" << YAML::Value << YAML::BeginMap << YAML::Key << "values"
                            << YAML::Value << values << YAML::Key << "probs" << YAML::Value
                            << probs << YAML::EndMap;
                    }
                },
                mdp.reward[mdp.index(s, a)]);
            out << YAML::EndMap;
        }
    }
    out << YAML::EndSeq << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write MDP file " + path.string());
    file << dump_mdp(mdp);
}

}  // namespace ocvar
