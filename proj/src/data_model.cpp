#include "fusion/data_model.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "fusion/error.hpp"
#include "fusion/rng.hpp"

namespace fusion {

std::string_view to_string(VariableRole role) {
    switch (role) {
        case VariableRole::Common: return "common";
        case VariableRole::SpecificRecipient: return "recipient";
        case VariableRole::SpecificDonor: return "donor";
    }
    return "?";
}

ScaleLevel ScaleLevel::categorical(std::vector<int> levels) {
    if (levels.size() < 2) throw_data("categorical scale needs at least two levels");
    std::set<int> seen(levels.begin(), levels.end());
    if (seen.size() != levels.size()) throw_data("categorical scale has duplicate levels");
    ScaleLevel s;
    s.levels_ = std::move(levels);
    return s;
}

bool ScaleLevel::has_level(int code) const {
    return std::find(levels_.begin(), levels_.end(), code) != levels_.end();
}

// ---------------------------------------------------------------- DataTable

DataTable::DataTable(std::size_t n_rows) : row_ids_(n_rows) {
    std::iota(row_ids_.begin(), row_ids_.end(), std::size_t{0});
}

DataTable::DataTable(std::vector<std::size_t> row_ids) : row_ids_(std::move(row_ids)) {}

void DataTable::add_column(Column column) {
    if (column.values.size() != rows()) {
        throw_data(fmt::format("column '{}' has {} values, table has {} rows", column.name,
                               column.values.size(), rows()));
    }
    if (has_column(column.name)) throw_data(fmt::format("duplicate column '{}'", column.name));
    for (double v : column.values) {
        if (is_missing(v)) continue;
        if (!std::isfinite(v)) throw_data(fmt::format("column '{}' holds a non-finite value", column.name));
        if (column.scale.is_categorical()) {
            if (v != std::floor(v) || !column.scale.has_level(static_cast<int>(v))) {
                throw_data(fmt::format("column '{}': code {} is not a declared level", column.name, v));
            }
        }
    }
    columns_.push_back(std::move(column));
}

bool DataTable::has_column(std::string_view name) const { return index_of(name).has_value(); }

std::optional<std::size_t> DataTable::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == name) return i;
    }
    return std::nullopt;
}

const Column& DataTable::column(std::string_view name) const {
    auto idx = index_of(name);
    if (!idx) throw_data(fmt::format("missing column '{}'", name));
    return columns_[*idx];
}

std::vector<std::string> DataTable::names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.name);
    return out;
}

DataTable DataTable::select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::size_t> ids;
    ids.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= this->rows()) throw_data(fmt::format("row index {} out of range", r));
        ids.push_back(row_ids_[r]);
    }
    DataTable out(std::move(ids));
    for (const auto& c : columns_) {
        Column sub{c.name, c.scale, {}};
        sub.values.reserve(rows.size());
        for (std::size_t r : rows) sub.values.push_back(c.values[r]);
        out.columns_.push_back(std::move(sub));
    }
    return out;
}

DataTable DataTable::select_columns(std::span<const std::string> names) const {
    DataTable out(row_ids_);
    for (const auto& n : names) out.add_column(column(n));
    return out;
}

DataTable DataTable::with_column(Column column) const {
    DataTable out(row_ids_);
    bool replaced = false;
    for (const auto& c : columns_) {
        if (c.name == column.name) {
            out.add_column(column);
            replaced = true;
        } else {
            out.columns_.push_back(c);
        }
    }
    if (!replaced) out.add_column(std::move(column));
    return out;
}

// ------------------------------------------------------------- FusionSchema

FusionSchema::FusionSchema(std::vector<VariableSpec> variables, std::string missing_token)
    : variables_(std::move(variables)), missing_token_(std::move(missing_token)) {
    std::set<std::string> seen;
    bool has_common = false, has_donor = false;
    for (const auto& v : variables_) {
        if (v.name.empty()) throw_data("schema variable with empty name");
        if (!seen.insert(v.name).second) throw_data(fmt::format("schema declares '{}' twice", v.name));
        has_common |= v.role == VariableRole::Common;
        has_donor |= v.role == VariableRole::SpecificDonor;
        if (v.recode) {
            validate_rule(*v.recode);
            if (v.scale.is_metric() && !is_binning_rule(*v.recode)) {
                throw_data(fmt::format("metric variable '{}' needs a binning recode rule", v.name));
            }
            if (v.scale.is_categorical() && !std::holds_alternative<MapGroups>(*v.recode)) {
                throw_data(fmt::format("categorical variable '{}' only accepts a map_groups recode", v.name));
            }
        }
    }
    if (!has_common) throw_data("schema needs at least one common variable");
    if (!has_donor) throw_data("schema needs at least one donor-specific variable");
}

const VariableSpec* FusionSchema::find(std::string_view name) const {
    for (const auto& v : variables_) {
        if (v.name == name) return &v;
    }
    return nullptr;
}

const VariableSpec& FusionSchema::at(std::string_view name) const {
    const auto* v = find(name);
    if (!v) throw_data(fmt::format("variable '{}' is not declared in the schema", name));
    return *v;
}

std::vector<std::string> FusionSchema::names(VariableRole role) const {
    std::vector<std::string> out;
    for (const auto& v : variables_) {
        if (v.role == role) out.push_back(v.name);
    }
    return out;
}

// ---------------------------------------------------------------------- CSV

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_cell(const std::string& text, const VariableSpec& spec, std::size_t line_no,
                  const std::string& missing_token) {
    if (text == missing_token) return kMissing;
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
        throw_data(fmt::format("line {}: column '{}': cannot parse '{}' as a number", line_no, spec.name, text));
    }
    if (spec.scale.is_categorical()) {
        if (v != std::floor(v) || !spec.scale.has_level(static_cast<int>(v))) {
            throw_data(fmt::format("line {}: column '{}': code '{}' is not a declared level", line_no,
                                   spec.name, text));
        }
    }
    return v;
}

}  // namespace

DataTable parse_table(std::string_view csv_text, const FusionSchema& schema) {
    std::istringstream in{std::string(csv_text)};
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            for (auto& f : split_csv_line(line)) header.push_back(trim(f));
            break;
        }
    }
    if (header.empty()) throw_data("empty file: no header row");

    std::vector<const VariableSpec*> specs;
    std::set<std::string> seen;
    for (const auto& name : header) {
        const auto* spec = schema.find(name);
        if (!spec) throw_data(fmt::format("column '{}' is not declared in the schema", name));
        if (!seen.insert(name).second) throw_data(fmt::format("duplicate column '{}'", name));
        specs.push_back(spec);
    }
    for (const auto& name : schema.common()) {
        if (!seen.count(name)) throw_data(fmt::format("missing column '{}'", name));
    }

    std::vector<std::vector<double>> values(header.size());
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw_data(fmt::format("line {}: expected {} fields, found {}", line_no, header.size(), fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            values[c].push_back(parse_cell(trim(fields[c]), *specs[c], line_no, schema.missing_token()));
        }
        ++n;
    }
    if (n == 0) throw_data("empty file: no data rows");

    DataTable table(n);
    for (std::size_t c = 0; c < header.size(); ++c) {
        table.add_column(Column{header[c], specs[c]->scale, std::move(values[c])});
    }
    return table;
}

DataTable load_table(const std::string& path, const FusionSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data(fmt::format("cannot open '{}'", path));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_table(buf.str(), schema);
}

std::string format_table(const DataTable& table, std::string_view missing_token) {
    std::string out;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        if (c) out += ',';
        out += table.column(c).name;
    }
    out += '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            if (c) out += ',';
            const auto& col = table.column(c);
            double v = col.values[r];
            if (is_missing(v)) {
                out += missing_token;
            } else if (col.scale.is_categorical()) {
                out += fmt::format("{}", static_cast<long long>(v));
            } else {
                out += fmt::format("{}", v);
            }
        }
        out += '\n';
    }
    return out;
}

void write_table(const DataTable& table, const std::string& path, std::string_view missing_token) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_runtime(fmt::format("cannot write '{}'", path));
    out << format_table(table, missing_token);
    if (!out) throw_runtime(fmt::format("write to '{}' failed", path));
}

// ------------------------------------------------------------------ stacking

namespace {

bool all_missing(const Column& c) {
    return std::all_of(c.values.begin(), c.values.end(), [](double v) { return is_missing(v); });
}

void check_block(const DataTable& block, const FusionSchema& schema, VariableRole forbidden,
                 std::string_view label) {
    for (const auto& col : block.columns()) {
        const auto& spec = schema.at(col.name);
        if (!(col.scale == spec.scale)) {
            throw_data(fmt::format("{} column '{}' has a scale different from the schema", label, col.name));
        }
        if (spec.role == forbidden && !all_missing(col)) {
            throw_data(fmt::format("{} file observes '{}', which must be missing by design", label, col.name));
        }
    }
    for (const auto& name : schema.common()) {
        if (!block.has_column(name)) throw_data(fmt::format("{} file lacks common column '{}'", label, name));
        for (double v : block.column(name).values) {
            if (is_missing(v)) {
                throw_data(fmt::format("{} file has a missing value in common column '{}'", label, name));
            }
        }
    }
}

}  // namespace

StackedFrame stack(const DataTable& recipient, const DataTable& donor, const FusionSchema& schema) {
    if (donor.rows() == 0) throw_data("donor file is empty");
    if (recipient.rows() == 0) throw_data("recipient file is empty");
    check_block(recipient, schema, VariableRole::SpecificDonor, "recipient");
    check_block(donor, schema, VariableRole::SpecificRecipient, "donor");

    std::vector<std::size_t> ids = recipient.row_ids();
    ids.insert(ids.end(), donor.row_ids().begin(), donor.row_ids().end());
    StackedFrame frame{DataTable(std::move(ids)), {}, {}};
    const std::size_t nr = recipient.rows(), nd = donor.rows();
    for (const auto& spec : schema.variables()) {
        Column col{spec.name, spec.scale, std::vector<double>(nr + nd, kMissing)};
        if (spec.role != VariableRole::SpecificDonor && recipient.has_column(spec.name)) {
            const auto& src = recipient.column(spec.name).values;
            std::copy(src.begin(), src.end(), col.values.begin());
        }
        if (spec.role != VariableRole::SpecificRecipient && donor.has_column(spec.name)) {
            const auto& src = donor.column(spec.name).values;
            std::copy(src.begin(), src.end(), col.values.begin() + static_cast<std::ptrdiff_t>(nr));
        }
        frame.table.add_column(std::move(col));
    }
    frame.recipient_rows.resize(nr);
    std::iota(frame.recipient_rows.begin(), frame.recipient_rows.end(), std::size_t{0});
    frame.donor_rows.resize(nd);
    std::iota(frame.donor_rows.begin(), frame.donor_rows.end(), nr);
    return frame;
}

void check_stacked(const StackedFrame& frame, const FusionSchema& schema) {
    for (const auto& spec : schema.variables()) {
        const auto& values = frame.table.column(spec.name).values;
        if (spec.role == VariableRole::SpecificDonor) {
            for (auto r : frame.recipient_rows) {
                if (!is_missing(values[r])) throw_data(fmt::format("recipient row observes '{}'", spec.name));
            }
        } else if (spec.role == VariableRole::SpecificRecipient) {
            for (auto r : frame.donor_rows) {
                if (!is_missing(values[r])) throw_data(fmt::format("donor row observes '{}'", spec.name));
            }
        } else {
            for (double v : values) {
                if (is_missing(v)) throw_data(fmt::format("common variable '{}' has a missing cell", spec.name));
            }
        }
    }
}

// ------------------------------------------------------------------ sampling

std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count,
                                                    std::uint64_t seed) {
    if (count > population) {
        throw_data(fmt::format("cannot draw {} rows from a population of {}", count, population));
    }
    std::vector<std::size_t> idx(population);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + uniform_index(rng, population - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
}

std::pair<DataTable, DataTable> split_population(const DataTable& population, const FusionSchema& schema,
                                                 std::size_t n_recipients, std::size_t n_donors,
                                                 std::uint64_t seed) {
    auto drawn = sample_without_replacement(population.rows(), n_recipients + n_donors, seed);
    std::vector<std::size_t> rec(drawn.begin(), drawn.begin() + static_cast<std::ptrdiff_t>(n_recipients));
    std::vector<std::size_t> don(drawn.begin() + static_cast<std::ptrdiff_t>(n_recipients), drawn.end());
    std::sort(rec.begin(), rec.end());
    std::sort(don.begin(), don.end());

    std::vector<std::string> rec_cols, don_cols;
    for (const auto& spec : schema.variables()) {
        if (!population.has_column(spec.name)) continue;
        if (spec.role != VariableRole::SpecificDonor) rec_cols.push_back(spec.name);
        if (spec.role != VariableRole::SpecificRecipient) don_cols.push_back(spec.name);
    }
    return {population.select_rows(rec).select_columns(rec_cols),
            population.select_rows(don).select_columns(don_cols)};
}

}  // namespace fusion
