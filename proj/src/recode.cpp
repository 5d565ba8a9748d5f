#include "fusion/recode.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "fusion/error.hpp"
#include "fusion/rng.hpp"

namespace fusion {

std::vector<int> quantile_bin(std::span<const double> values, std::size_t k) {
    if (k < 2) throw_data("quantile_bin needs k >= 2");
    for (double v : values) {
        if (!std::isfinite(v)) throw_data("quantile_bin needs finite values");
    }
    if (values.empty()) return {};
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw_data("quantile_bin: all values are identical; treat the variable as categorical");
    }
    const double n = static_cast<double>(sorted.size());
    std::vector<int> codes;
    codes.reserve(values.size());
    for (double v : values) {
        auto below = std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
        auto code = static_cast<std::size_t>(std::floor(static_cast<double>(k) * static_cast<double>(below) / n)) + 1;
        codes.push_back(static_cast<int>(std::min(code, k)));
    }
    return codes;
}

std::vector<int> interval_bin(std::span<const double> values, const IntervalBin& rule) {
    validate_rule(rule);
    std::vector<int> codes;
    codes.reserve(values.size());
    for (double v : values) {
        if (!std::isfinite(v)) throw_data("interval_bin needs finite values");
        auto above = std::upper_bound(rule.breaks.begin(), rule.breaks.end(), v) - rule.breaks.begin();
        codes.push_back(static_cast<int>(above) + 1);
    }
    return codes;
}

std::vector<int> map_groups(std::span<const double> values, const MapGroups& rule) {
    std::vector<int> codes;
    codes.reserve(values.size());
    for (double v : values) {
        if (is_missing(v)) {
            if (rule.missing_level) {
                codes.push_back(*rule.missing_level);
                continue;
            }
            if (rule.default_level) {
                codes.push_back(*rule.default_level);
                continue;
            }
            throw_data("map_groups: missing input and the rule has no missing or default level");
        }
        auto it = rule.mapping.find(static_cast<int>(v));
        if (it != rule.mapping.end()) {
            codes.push_back(it->second);
        } else if (rule.default_level) {
            codes.push_back(*rule.default_level);
        } else {
            throw_data(fmt::format("map_groups: level {} is not covered and the rule has no default", v));
        }
    }
    return codes;
}

std::vector<int> random_category(std::size_t n, const RandomCategory& rule, std::uint64_t seed) {
    validate_rule(rule);
    std::vector<double> cumulative(rule.probabilities.size());
    std::partial_sum(rule.probabilities.begin(), rule.probabilities.end(), cumulative.begin());
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> codes;
    codes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = unif(rng) * cumulative.back();
        auto pos = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        if (pos == cumulative.size()) {
            // only reachable through rounding; fall back to the last level with mass
            pos = cumulative.size() - 1;
            while (pos > 0 && rule.probabilities[pos] == 0.0) --pos;
        }
        codes.push_back(rule.levels[pos]);
    }
    return codes;
}

std::vector<int> max_of_columns(const DataTable& table, const MaxOfColumns& rule) {
    validate_rule(rule);
    std::vector<std::vector<const std::vector<double>*>> groups;
    for (const auto& g : rule.groups) {
        auto& cols = groups.emplace_back();
        for (const auto& name : g.columns) {
            const auto& c = table.column(name);
            if (!c.scale.is_metric()) throw_data(fmt::format("max_of_columns: '{}' is not metric", name));
            cols.push_back(&c.values);
        }
    }
    std::vector<int> codes(table.rows(), rule.all_zero_level);
    for (std::size_t r = 0; r < table.rows(); ++r) {
        double best = 0.0;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            for (const auto* col : groups[g]) {
                double v = (*col)[r];
                if (is_missing(v) || v < 0.0) {
                    throw_data(fmt::format("max_of_columns: row {} has a missing or negative value", r));
                }
                if (v > best) {  // strict: earlier groups win ties
                    best = v;
                    codes[r] = rule.groups[g].level;
                }
            }
        }
    }
    return codes;
}

std::vector<int> apply_rule(std::span<const double> values, const RecodeRule& rule) {
    if (const auto* q = std::get_if<QuantileBin>(&rule)) return quantile_bin(values, q->k);
    if (const auto* b = std::get_if<IntervalBin>(&rule)) return interval_bin(values, *b);
    if (const auto* m = std::get_if<MapGroups>(&rule)) return map_groups(values, *m);
    throw_data("apply_rule: rule does not act on a single column");
}

DataTable categorise_common(const DataTable& table, const FusionSchema& schema) {
    DataTable out = table;
    for (const auto& spec : schema.variables()) {
        if (spec.role != VariableRole::Common) continue;
        const auto& col = table.column(spec.name);
        if (col.scale.is_metric() && !spec.recode) {
            throw_data(fmt::format(
                "common variable '{}' is metric; covariate matching needs a categorised version "
                "(declare a quantile_bin or interval_bin recode in the schema)",
                spec.name));
        }
        if (!spec.recode) continue;
        auto codes = apply_rule(col.values, *spec.recode);
        Column recoded{spec.name, ScaleLevel::categorical(output_levels(*spec.recode)), {}};
        recoded.values.assign(codes.begin(), codes.end());
        out = out.with_column(std::move(recoded));
    }
    return out;
}

MapGroups activity_status_rule() {
    MapGroups m;
    for (int c : {1, 2, 3, 4}) m.mapping[c] = 1;
    m.mapping[5] = 2;
    m.mapping[7] = 3;
    m.mapping[10] = 4;
    m.mapping[8] = 5;
    for (int c : {6, 9, 11}) m.mapping[c] = 9;
    m.missing_level = 9;
    return m;
}

RandomCategory population_density_rule() {
    return RandomCategory{{1, 2, 3}, {0.358, 0.418, 0.224}};
}

MaxOfColumns main_source_of_income_rule() {
    MaxOfColumns m;
    m.groups = {
        {{"PY010G", "PY020G"}, 1},                      // wages or salary
        {{"PY050G"}, 1},                                // self-employment
        {{"PY080G"}, 1},                                // property income
        {{"PY100G"}, 2},                                // pensions
        {{"PY090G"}, 2},                                // unemployment benefits
        {{"PY110G", "PY120G", "PY130G", "PY140G"}, 2},  // other benefits
    };
    m.all_zero_level = 9;
    return m;
}

IntervalBin age_band_rule() {
    return IntervalBin{{26, 36, 46, 56, 66, 76, 86}};
}

}  // namespace fusion
