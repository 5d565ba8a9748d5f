#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fusion/data_model.hpp"
#include "fusion/recode_rule.hpp"

namespace fusion {

/// Codes 1..k by empirical-CDF position. A value's code is
/// floor(k * #{values < x} / n) + 1, so equal values always share a bin and
/// the coding is monotone. Throws when all values are identical.
std::vector<int> quantile_bin(std::span<const double> values, std::size_t k);

/// Left-closed intervals: code = 1 + #{breaks <= x}.
std::vector<int> interval_bin(std::span<const double> values, const IntervalBin& rule);

/// Regroups category codes (NaN = missing input).
std::vector<int> map_groups(std::span<const double> values, const MapGroups& rule);

std::vector<int> random_category(std::size_t n, const RandomCategory& rule, std::uint64_t seed);

/// Per row, the level of the first-declared group holding the row maximum;
/// rows whose referenced values are all zero get `all_zero_level`.
std::vector<int> max_of_columns(const DataTable& table, const MaxOfColumns& rule);

/// Applies a rule to one source column (binning or regrouping).
std::vector<int> apply_rule(std::span<const double> values, const RecodeRule& rule);

/// Categorised copy of `table` for covariate matching: every common metric
/// variable is binned by its schema recode rule and categorical variables
/// with a map_groups rule are regrouped. Throws if a common metric variable
/// has no binning rule.
DataTable categorise_common(const DataTable& table, const FusionSchema& schema);

// Preset rules for the survey variables.

/// Self-defined economic status (11 source codes) -> activity status 1..5, 9.
MapGroups activity_status_rule();
/// Degree of urbanisation with its published shares.
RandomCategory population_density_rule();
/// Main source of income from the personal income components.
MaxOfColumns main_source_of_income_rule();
/// Eight age bands: <=25, 26-35, ..., 76-85, >=86.
IntervalBin age_band_rule();

}  // namespace fusion
