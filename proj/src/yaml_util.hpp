#pragma once

// Small helpers shared by the MDP and experiment-config readers.

#include <yaml-cpp/yaml.h>

#include <initializer_list>
#include <string>
#include <string_view>

#include "ocvar/envs.hpp"

namespace ocvar::yaml {

[[noreturn]] inline void fail(const YAML::Node& node, const std::string& message) {
    const auto mark = node.Mark();
    if (mark.line >= 0)
        throw ParseError("line " + std::to_string(mark.line + 1) + ": " + message);
    throw ParseError(message);
}

inline void require_map(const YAML::Node& node, const std::string& what) {
    if (!node.IsMap()) fail(node, what + " must be a mapping");
}

inline void check_keys(const YAML::Node& node, std::initializer_list<std::string_view> allowed,
                       const std::string& context) {
    require_map(node, context.empty() ? "document" : context);
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        bool known = false;
        for (auto k : allowed) known = known || key == k;
        if (!known)
            fail(kv.first, "unknown field '" + (context.empty() ? key : context + "." + key) + "'");
    }
}

template <typename T>
T get(const YAML::Node& node, const std::string& key, const std::string& context) {
    const auto child = node[key];
    if (!child) fail(node, "missing field '" + (context.empty() ? key : context + "." + key) + "'");
    try {
        return child.as<T>();
    } catch (const YAML::Exception&) {
        fail(child, "field '" + key + "' has the wrong type");
    }
}

template <typename T>
T get_or(const YAML::Node& node, const std::string& key, T fallback) {
    const auto child = node[key];
    if (!child) return fallback;
    try {
        return child.as<T>();
    } catch (const YAML::Exception&) {
        fail(child, "field '" + key + "' has the wrong type");
    }
}

inline YAML::Node parse_text(const std::string& text) {
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
}

}  // namespace ocvar::yaml
