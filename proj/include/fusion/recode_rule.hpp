#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fusion {

/// Equal-frequency binning into codes 1..k.
struct QuantileBin {
    std::size_t k = 5;
};

/// Left-closed interval binning: code = 1 + #{breaks <= x}.
struct IntervalBin {
    std::vector<double> breaks;
};

/// Element-wise regrouping of category codes.
struct MapGroups {
    std::map<int, int> mapping;
    std::optional<int> default_level;
    std::optional<int> missing_level;  ///< target level for missing input
};

/// i.i.d. categorical draws.
struct RandomCategory {
    std::vector<int> levels;
    std::vector<double> probabilities;
};

/// Level of the column group holding the row maximum.
struct MaxOfColumns {
    struct Group {
        std::vector<std::string> columns;
        int level = 0;
    };
    std::vector<Group> groups;
    int all_zero_level = 9;
};

using RecodeRule = std::variant<QuantileBin, IntervalBin, MapGroups, RandomCategory, MaxOfColumns>;

/// Throws fusion::Error (Data) when a rule breaks its invariants.
void validate_rule(const RecodeRule& rule);

/// Sorted set of codes the rule can emit.
std::vector<int> output_levels(const RecodeRule& rule);

/// True for rules that turn a metric column into categories.
bool is_binning_rule(const RecodeRule& rule);

}  // namespace fusion
