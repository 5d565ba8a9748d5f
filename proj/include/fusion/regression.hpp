#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fusion/data_model.hpp"

namespace fusion {

/// Model-selection criterion, always minimised. AdjustedR2 is scored as
/// its negative.
enum class Criterion { Bic, AdjustedR2 };

Criterion parse_criterion(std::string_view name);
std::string_view to_string(Criterion c);

/// Columns contributed by one original variable after pruning. Metric
/// variables contribute themselves; categorical variables one indicator per
/// kept non-reference level.
struct DesignTerm {
    std::string variable;
    bool metric = true;
    std::vector<int> dummy_levels;

    std::size_t width() const { return metric ? 1 : dummy_levels.size(); }
};

struct ColumnGroup {
    std::string variable;
    std::size_t first = 0;
    std::size_t count = 0;
};

struct DesignMatrix {
    Eigen::MatrixXd x;  ///< n x q; column 0 is the intercept
    std::vector<std::string> labels;
    std::vector<DesignTerm> terms;
    std::vector<ColumnGroup> groups;
    std::vector<std::string> pruned;  ///< one line per dropped column with the reason

    std::size_t n() const { return static_cast<std::size_t>(x.rows()); }
    std::size_t q() const { return static_cast<std::size_t>(x.cols()); }
};

/// Intercept plus metric columns as-is plus indicator coding for
/// categoricals (first declared level is the reference). Constant and
/// collinear columns are dropped greedily in column order and reported.
DesignMatrix dummy_expand(const DataTable& table, std::span<const std::size_t> rows,
                          const std::vector<std::string>& variables);
DesignMatrix dummy_expand(const DataTable& table, const std::vector<std::string>& variables);

/// Rebuilds the columns of `terms` (plus intercept) on other rows, e.g. the
/// recipient block for a model fitted on donors.
Eigen::MatrixXd encode(const DataTable& table, std::span<const std::size_t> rows,
                       const std::vector<DesignTerm>& terms);

/// n x m matrix of metric, fully observed responses.
Eigen::MatrixXd response_matrix(const DataTable& table, std::span<const std::size_t> rows,
                                const std::vector<std::string>& names);

struct OlsFit {
    Eigen::MatrixXd coefficients;         ///< q x m
    Eigen::MatrixXd fitted;               ///< n x m
    Eigen::MatrixXd residuals;            ///< n x m
    Eigen::MatrixXd residual_covariance;  ///< m x m, E'E / (n - q)
    std::vector<std::string> selected;    ///< variables in the design
    std::size_t n = 0;
    std::size_t q = 0;

    double rss(std::size_t response) const { return residuals.col(static_cast<Eigen::Index>(response)).squaredNorm(); }
};

/// Least squares via the normal equations (column-equilibrated Cholesky).
/// Throws on n <= q or a rank-deficient design.
OlsFit ols_fit(const DesignMatrix& design, const Eigen::MatrixXd& responses);

/// Criterion value of a single-response fit; `tss` is the centred total sum
/// of squares of that response.
double criterion_value(Criterion criterion, double rss, double tss, std::size_t n, std::size_t q);

/// Backward deletion of whole variables (all dummy columns together),
/// starting from the full set and stopping when no single removal improves
/// the criterion. Returns survivors in candidate order; a zero-variance
/// response yields the empty set.
std::vector<std::string> backward_select(const DataTable& table, std::span<const std::size_t> rows,
                                         const std::string& response,
                                         const std::vector<std::string>& candidates,
                                         Criterion criterion = Criterion::Bic);

/// backward_select with at most `max_size` survivors: deletions are forced
/// (best criterion first) until the cap is met, then the usual stopping
/// rule applies.
std::vector<std::string> max_subset_select(const DataTable& table, std::span<const std::size_t> rows,
                                           const std::string& response,
                                           const std::vector<std::string>& candidates, std::size_t max_size,
                                           Criterion criterion = Criterion::Bic);

/// The full backward-deletion path: sets[k] is the best k-variable set
/// reached by repeatedly removing the variable whose removal scores best,
/// scores[k] its criterion value. Every capped selection stops somewhere on
/// this path, so one path serves all caps.
struct SelectionPath {
    std::vector<std::vector<std::string>> sets;
    std::vector<double> scores;
    bool degenerate = false;  ///< zero-variance response

    /// Survivors under a size cap: start at min(cap, p) variables and keep
    /// deleting while the criterion improves.
    std::vector<std::string> select(std::size_t cap) const;
};

SelectionPath backward_path(const DataTable& table, std::span<const std::size_t> rows,
                            const std::string& response, const std::vector<std::string>& candidates,
                            Criterion criterion = Criterion::Bic);

std::vector<std::size_t> all_rows(const DataTable& table);

}  // namespace fusion
