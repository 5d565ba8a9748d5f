#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fusion/recode_rule.hpp"

namespace fusion {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

enum class VariableRole { Common, SpecificRecipient, SpecificDonor };

std::string_view to_string(VariableRole role);

/// Measurement level of a column. Categorical codes are integers drawn
/// from an explicit level set; the first declared level is the reference
/// level for dummy coding.
class ScaleLevel {
public:
    static ScaleLevel metric() { return ScaleLevel(); }
    static ScaleLevel categorical(std::vector<int> levels);

    bool is_metric() const { return levels_.empty(); }
    bool is_categorical() const { return !levels_.empty(); }
    const std::vector<int>& levels() const { return levels_; }
    std::size_t level_count() const { return levels_.size(); }
    bool has_level(int code) const;

    bool operator==(const ScaleLevel&) const = default;

private:
    ScaleLevel() = default;
    std::vector<int> levels_;
};

/// Values are stored as doubles for both scales; categorical cells hold
/// integral codes, and NaN marks a missing cell.
struct Column {
    std::string name;
    ScaleLevel scale = ScaleLevel::metric();
    std::vector<double> values;
};

class DataTable {
public:
    DataTable() = default;
    /// Table with `n_rows` rows and row ids 0..n_rows-1.
    explicit DataTable(std::size_t n_rows);
    explicit DataTable(std::vector<std::size_t> row_ids);

    /// Validates length, name uniqueness and categorical codes.
    void add_column(Column column);

    std::size_t rows() const { return row_ids_.size(); }
    std::size_t cols() const { return columns_.size(); }

    bool has_column(std::string_view name) const;
    std::optional<std::size_t> index_of(std::string_view name) const;
    const Column& column(std::string_view name) const;
    const Column& column(std::size_t index) const { return columns_[index]; }
    const std::vector<Column>& columns() const { return columns_; }
    std::vector<std::string> names() const;
    const std::vector<std::size_t>& row_ids() const { return row_ids_; }

    DataTable select_rows(std::span<const std::size_t> rows) const;
    DataTable select_columns(std::span<const std::string> names) const;
    /// Copy with `column` replacing the column of the same name (or appended).
    DataTable with_column(Column column) const;

private:
    std::vector<std::size_t> row_ids_;
    std::vector<Column> columns_;
};

struct VariableSpec {
    std::string name;
    VariableRole role = VariableRole::Common;
    ScaleLevel scale = ScaleLevel::metric();
    /// Categorisation applied before covariate (hot deck) matching.
    std::optional<RecodeRule> recode;
};

class FusionSchema {
public:
    FusionSchema() = default;
    FusionSchema(std::vector<VariableSpec> variables, std::string missing_token = "");

    const std::vector<VariableSpec>& variables() const { return variables_; }
    const std::string& missing_token() const { return missing_token_; }
    const VariableSpec* find(std::string_view name) const;
    const VariableSpec& at(std::string_view name) const;
    std::vector<std::string> names(VariableRole role) const;
    std::vector<std::string> common() const { return names(VariableRole::Common); }

private:
    std::vector<VariableSpec> variables_;
    std::string missing_token_;
};

/// Parses the declarative schema config (JSON).
FusionSchema load_schema(const std::string& path);
FusionSchema parse_schema(std::string_view json_text);

/// Recipient block first, then donor block.
struct StackedFrame {
    DataTable table;
    std::vector<std::size_t> recipient_rows;
    std::vector<std::size_t> donor_rows;

    std::size_t n_recipients() const { return recipient_rows.size(); }
    std::size_t n_donors() const { return donor_rows.size(); }
    DataTable recipient_block() const { return table.select_rows(recipient_rows); }
    DataTable donor_block() const { return table.select_rows(donor_rows); }
};

DataTable load_table(const std::string& path, const FusionSchema& schema);
DataTable parse_table(std::string_view csv_text, const FusionSchema& schema);

/// Comma-separated, header row, missing cells written as `missing_token`.
void write_table(const DataTable& table, const std::string& path, std::string_view missing_token = "");
std::string format_table(const DataTable& table, std::string_view missing_token = "");

StackedFrame stack(const DataTable& recipient, const DataTable& donor, const FusionSchema& schema);

/// Throws if the missing-by-design pattern does not hold.
void check_stacked(const StackedFrame& frame, const FusionSchema& schema);

/// Disjoint simple random samples without replacement. The recipient copy
/// drops donor-specific columns, the donor copy drops recipient-specific ones.
std::pair<DataTable, DataTable> split_population(const DataTable& population, const FusionSchema& schema,
                                                 std::size_t n_recipients, std::size_t n_donors,
                                                 std::uint64_t seed);

/// Sampled population row indices used by split_population: the first
/// `n_recipients` entries form the recipient block.
std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count,
                                                    std::uint64_t seed);

}  // namespace fusion
