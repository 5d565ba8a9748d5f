#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "config_json.hpp"
#include "fusion/error.hpp"

namespace fusion {

void validate_rule(const RecodeRule& rule) {
    std::visit(
        [](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, QuantileBin>) {
                if (r.k < 2) throw_data("quantile_bin needs k >= 2");
            } else if constexpr (std::is_same_v<T, IntervalBin>) {
                if (r.breaks.empty()) throw_data("interval_bin needs at least one breakpoint");
                for (std::size_t i = 1; i < r.breaks.size(); ++i) {
                    if (!(r.breaks[i] > r.breaks[i - 1])) throw_data("interval_bin breakpoints must increase");
                }
            } else if constexpr (std::is_same_v<T, MapGroups>) {
                if (r.mapping.empty() && !r.default_level) throw_data("map_groups rule maps nothing");
            } else if constexpr (std::is_same_v<T, RandomCategory>) {
                if (r.levels.empty() || r.levels.size() != r.probabilities.size()) {
                    throw_data("random_category needs one probability per level");
                }
                double sum = 0.0;
                for (double p : r.probabilities) {
                    if (!(p >= 0.0)) throw_data("random_category probabilities must be non-negative");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-9) {
                    throw_data(fmt::format("random_category probabilities sum to {}, not 1", sum));
                }
                std::set<int> seen(r.levels.begin(), r.levels.end());
                if (seen.size() != r.levels.size()) throw_data("random_category has duplicate levels");
            } else if constexpr (std::is_same_v<T, MaxOfColumns>) {
                if (r.groups.empty()) throw_data("max_of_columns needs at least one column group");
                for (const auto& g : r.groups) {
                    if (g.columns.empty()) throw_data("max_of_columns group without columns");
                }
            }
        },
        rule);
}

std::vector<int> output_levels(const RecodeRule& rule) {
    std::set<int> levels;
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, QuantileBin>) {
                for (std::size_t i = 1; i <= r.k; ++i) levels.insert(static_cast<int>(i));
            } else if constexpr (std::is_same_v<T, IntervalBin>) {
                for (std::size_t i = 1; i <= r.breaks.size() + 1; ++i) levels.insert(static_cast<int>(i));
            } else if constexpr (std::is_same_v<T, MapGroups>) {
                for (const auto& [from, to] : r.mapping) levels.insert(to);
                if (r.default_level) levels.insert(*r.default_level);
                if (r.missing_level) levels.insert(*r.missing_level);
            } else if constexpr (std::is_same_v<T, RandomCategory>) {
                levels.insert(r.levels.begin(), r.levels.end());
            } else if constexpr (std::is_same_v<T, MaxOfColumns>) {
                for (const auto& g : r.groups) levels.insert(g.level);
                levels.insert(r.all_zero_level);
            }
        },
        rule);
    return {levels.begin(), levels.end()};
}

bool is_binning_rule(const RecodeRule& rule) {
    return std::holds_alternative<QuantileBin>(rule) || std::holds_alternative<IntervalBin>(rule);
}

namespace detail {

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data(fmt::format("cannot open '{}'", path));
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw_data(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
    }
}

RecodeRule parse_rule(const json& j) {
    const auto type = j.at("type").get<std::string>();
    RecodeRule rule;
    if (type == "quantile_bin") {
        rule = QuantileBin{j.at("k").get<std::size_t>()};
    } else if (type == "interval_bin") {
        rule = IntervalBin{j.at("breaks").get<std::vector<double>>()};
    } else if (type == "map_groups") {
        MapGroups m;
        for (const auto& g : j.at("groups")) {
            int to = g.at("to").get<int>();
            for (int from : g.at("from").get<std::vector<int>>()) {
                if (!m.mapping.emplace(from, to).second) {
                    throw_data(fmt::format("map_groups maps level {} twice", from));
                }
            }
        }
        if (j.contains("default")) m.default_level = j.at("default").get<int>();
        if (j.contains("missing")) m.missing_level = j.at("missing").get<int>();
        rule = std::move(m);
    } else if (type == "random_category") {
        rule = RandomCategory{j.at("levels").get<std::vector<int>>(), j.at("probabilities").get<std::vector<double>>()};
    } else if (type == "max_of_columns") {
        MaxOfColumns m;
        for (const auto& g : j.at("groups")) {
            m.groups.push_back({g.at("columns").get<std::vector<std::string>>(), g.at("level").get<int>()});
        }
        m.all_zero_level = get_or(j, "all_zero_level", 9);
        rule = std::move(m);
    } else {
        throw_data(fmt::format("unknown recode rule type '{}'", type));
    }
    validate_rule(rule);
    return rule;
}

json rule_to_json(const RecodeRule& rule) {
    return std::visit(
        [](const auto& r) -> json {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, QuantileBin>) {
                return {{"type", "quantile_bin"}, {"k", r.k}};
            } else if constexpr (std::is_same_v<T, IntervalBin>) {
                return {{"type", "interval_bin"}, {"breaks", r.breaks}};
            } else if constexpr (std::is_same_v<T, MapGroups>) {
                std::map<int, std::vector<int>> by_target;
                for (const auto& [from, to] : r.mapping) by_target[to].push_back(from);
                json groups = json::array();
                for (const auto& [to, from] : by_target) groups.push_back({{"from", from}, {"to", to}});
                json out = {{"type", "map_groups"}, {"groups", groups}};
                if (r.default_level) out["default"] = *r.default_level;
                if (r.missing_level) out["missing"] = *r.missing_level;
                return out;
            } else if constexpr (std::is_same_v<T, RandomCategory>) {
                return {{"type", "random_category"}, {"levels", r.levels}, {"probabilities", r.probabilities}};
            } else {
                json groups = json::array();
                for (const auto& g : r.groups) groups.push_back({{"columns", g.columns}, {"level", g.level}});
                return {{"type", "max_of_columns"}, {"groups", groups}, {"all_zero_level", r.all_zero_level}};
            }
        },
        rule);
}

ScaleLevel parse_scale(const json& j, const std::string& context) {
    const auto scale = get_or<std::string>(j, "scale", "metric");
    if (scale == "metric") return ScaleLevel::metric();
    if (scale == "categorical") {
        if (!j.contains("levels")) throw_data(fmt::format("{}: categorical scale needs 'levels'", context));
        return ScaleLevel::categorical(j.at("levels").get<std::vector<int>>());
    }
    throw_data(fmt::format("{}: unknown scale '{}'", context, scale));
}

}  // namespace detail

namespace {

VariableRole parse_role(const std::string& s) {
    if (s == "common") return VariableRole::Common;
    if (s == "recipient") return VariableRole::SpecificRecipient;
    if (s == "donor") return VariableRole::SpecificDonor;
    throw_data(fmt::format("unknown variable role '{}' (expected common, recipient or donor)", s));
}

FusionSchema schema_from_json(const detail::json& j) {
    std::vector<VariableSpec> vars;
    for (const auto& v : j.at("variables")) {
        VariableSpec spec;
        spec.name = v.at("name").get<std::string>();
        spec.role = parse_role(v.at("role").get<std::string>());
        spec.scale = detail::parse_scale(v, spec.name);
        if (v.contains("recode")) spec.recode = detail::parse_rule(v.at("recode"));
        vars.push_back(std::move(spec));
    }
    return FusionSchema(std::move(vars), detail::get_or<std::string>(j, "missing_token", ""));
}

}  // namespace

FusionSchema parse_schema(std::string_view json_text) {
    try {
        return schema_from_json(detail::json::parse(json_text));
    } catch (const detail::json::exception& e) {
        throw_data(fmt::format("invalid schema: {}", e.what()));
    }
}

FusionSchema load_schema(const std::string& path) {
    auto j = detail::read_json_file(path);
    try {
        return schema_from_json(j);
    } catch (const detail::json::exception& e) {
        throw_data(fmt::format("invalid schema '{}': {}", path, e.what()));
    }
}

}  // namespace fusion
