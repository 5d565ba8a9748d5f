#pragma once

// JSON helpers shared by the config readers. Not part of the public API.

#include "json.hpp"

#include "fusion/data_model.hpp"
#include "fusion/recode_rule.hpp"

namespace fusion::detail {

using json = nlohmann::json;

RecodeRule parse_rule(const json& j);
json rule_to_json(const RecodeRule& rule);
ScaleLevel parse_scale(const json& j, const std::string& context);

/// Reads and parses a JSON file; Data error on failure.
json read_json_file(const std::string& path);

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : it->get<T>();
}

}  // namespace fusion::detail
