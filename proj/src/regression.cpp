#include "fusion/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "fusion/error.hpp"

namespace fusion {

Criterion parse_criterion(std::string_view name) {
    if (name == "bic") return Criterion::Bic;
    if (name == "adjr2" || name == "adjusted_r2") return Criterion::AdjustedR2;
    throw_data(fmt::format("unknown selection criterion '{}' (expected bic or adjr2)", name));
}

std::string_view to_string(Criterion c) { return c == Criterion::Bic ? "bic" : "adjr2"; }

std::vector<std::size_t> all_rows(const DataTable& table) {
    std::vector<std::size_t> rows(table.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

namespace {

constexpr double kPruneTol = 1e-8;

const Column& observed_column(const DataTable& table, std::span<const std::size_t> rows, const std::string& name) {
    const auto& col = table.column(name);
    for (auto r : rows) {
        if (is_missing(col.values[r])) throw_data(fmt::format("variable '{}' has missing values on the fitting rows", name));
    }
    return col;
}

}  // namespace

DesignMatrix dummy_expand(const DataTable& table, std::span<const std::size_t> rows,
                          const std::vector<std::string>& variables) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n == 0) throw_data("dummy_expand: no rows");

    struct Candidate {
        std::size_t term;
        int level;  // unused for metric columns
        std::string label;
        Eigen::VectorXd values;
    };
    std::vector<DesignTerm> terms;
    std::vector<Candidate> candidates;
    for (const auto& name : variables) {
        const auto& col = observed_column(table, rows, name);
        DesignTerm term{name, col.scale.is_metric(), {}};
        if (term.metric) {
            Eigen::VectorXd v(n);
            for (Eigen::Index i = 0; i < n; ++i) v[i] = col.values[rows[static_cast<std::size_t>(i)]];
            candidates.push_back({terms.size(), 0, name, std::move(v)});
        } else {
            const auto& levels = col.scale.levels();
            for (std::size_t l = 1; l < levels.size(); ++l) {
                Eigen::VectorXd v(n);
                for (Eigen::Index i = 0; i < n; ++i) {
                    v[i] = col.values[rows[static_cast<std::size_t>(i)]] == levels[l] ? 1.0 : 0.0;
                }
                candidates.push_back({terms.size(), levels[l], fmt::format("{}={}", name, levels[l]), std::move(v)});
            }
        }
        terms.push_back(std::move(term));
    }

    // Greedy Gram-Schmidt screen in column order, intercept first.
    std::vector<Eigen::VectorXd> basis;
    basis.push_back(Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
    DesignMatrix out;
    std::vector<const Candidate*> kept;
    for (const auto& c : candidates) {
        const double norm = c.values.norm();
        if (norm == 0.0) {
            out.pruned.push_back(fmt::format("{}: level absent from the data", c.label));
            continue;
        }
        Eigen::VectorXd r = c.values;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) r -= b.dot(r) * b;
        }
        const double rnorm = r.norm();
        if (rnorm <= kPruneTol * norm) {
            out.pruned.push_back(fmt::format("{}: constant or collinear with earlier columns", c.label));
            continue;
        }
        basis.push_back(r / rnorm);
        kept.push_back(&c);
    }

    out.x.resize(n, static_cast<Eigen::Index>(kept.size() + 1));
    out.x.col(0).setOnes();
    out.labels.push_back("(intercept)");
    for (auto& t : terms) {
        if (!t.metric) t.dummy_levels.clear();
    }
    std::vector<std::size_t> metric_kept(terms.size(), 0);
    for (const auto* c : kept) {
        if (terms[c->term].metric) {
            metric_kept[c->term] = 1;
        } else {
            terms[c->term].dummy_levels.push_back(c->level);
        }
    }
    // Lay columns out grouped by term, in variable order.
    Eigen::Index col = 1;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        ColumnGroup group{terms[t].variable, static_cast<std::size_t>(col), 0};
        for (const auto* c : kept) {
            if (c->term != t) continue;
            out.x.col(col++) = c->values;
            out.labels.push_back(c->label);
            ++group.count;
        }
        out.groups.push_back(group);
    }
    // Metric terms whose single column was pruned are dropped from the encoding.
    for (std::size_t t = 0; t < terms.size(); ++t) {
        if (terms[t].metric && !metric_kept[t]) continue;
        out.terms.push_back(terms[t]);
    }
    return out;
}

DesignMatrix dummy_expand(const DataTable& table, const std::vector<std::string>& variables) {
    auto rows = all_rows(table);
    return dummy_expand(table, rows, variables);
}

Eigen::MatrixXd encode(const DataTable& table, std::span<const std::size_t> rows,
                       const std::vector<DesignTerm>& terms) {
    std::size_t q = 1;
    for (const auto& t : terms) q += t.width();
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(q));
    x.col(0).setOnes();
    Eigen::Index col = 1;
    for (const auto& t : terms) {
        const auto& c = observed_column(table, rows, t.variable);
        if (t.metric) {
            for (Eigen::Index i = 0; i < n; ++i) x(i, col) = c.values[rows[static_cast<std::size_t>(i)]];
            ++col;
        } else {
            for (int level : t.dummy_levels) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    x(i, col) = c.values[rows[static_cast<std::size_t>(i)]] == level ? 1.0 : 0.0;
                }
                ++col;
            }
        }
    }
    return x;
}

Eigen::MatrixXd response_matrix(const DataTable& table, std::span<const std::size_t> rows,
                                const std::vector<std::string>& names) {
    Eigen::MatrixXd y(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto& c = observed_column(table, rows, names[j]);
        if (!c.scale.is_metric()) throw_data(fmt::format("response '{}' must be metric", names[j]));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.values[rows[i]];
        }
    }
    return y;
}

OlsFit ols_fit(const DesignMatrix& design, const Eigen::MatrixXd& responses) {
    const auto& x = design.x;
    const auto n = x.rows(), q = x.cols();
    if (responses.rows() != n) throw_data("ols_fit: responses and design differ in row count");
    if (n <= q) throw_data(fmt::format("ols_fit: {} rows cannot support {} coefficients", n, q));

    // Equilibrate columns so the Gram matrix has a unit diagonal.
    Eigen::VectorXd scale = x.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < q; ++j) {
        if (scale[j] == 0.0) throw_data("ols_fit: design has an all-zero column");
        scale[j] = 1.0 / scale[j];
    }
    const Eigen::MatrixXd xs = x * scale.asDiagonal();
    Eigen::MatrixXd gram = xs.transpose() * xs;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw_runtime("ols_fit: design is rank deficient");
    const Eigen::MatrixXd& l = llt.matrixL();
    if (l.diagonal().minCoeff() < 1e-7) throw_runtime("ols_fit: design is numerically rank deficient");

    OlsFit fit;
    fit.coefficients = scale.asDiagonal() * llt.solve(xs.transpose() * responses);
    fit.fitted = x * fit.coefficients;
    fit.residuals = responses - fit.fitted;
    Eigen::MatrixXd s = fit.residuals.transpose() * fit.residuals / static_cast<double>(n - q);
    fit.residual_covariance = 0.5 * (s + s.transpose());
    for (const auto& t : design.terms) fit.selected.push_back(t.variable);
    fit.n = static_cast<std::size_t>(n);
    fit.q = static_cast<std::size_t>(q);
    return fit;
}

double criterion_value(Criterion criterion, double rss, double tss, std::size_t n, std::size_t q) {
    const double dn = static_cast<double>(n), dq = static_cast<double>(q);
    if (criterion == Criterion::Bic) {
        // Floor keeps exact fits finite so the penalty still separates them.
        const double floored = std::max(rss, 1e-24 * tss);
        return dn * std::log(floored / dn) + dq * std::log(dn);
    }
    if (n <= q) return std::numeric_limits<double>::infinity();
    return -(1.0 - (rss / (dn - dq)) / (tss / (dn - 1.0)));
}

namespace {

struct Scorer {
    const DataTable& table;
    std::span<const std::size_t> rows;
    Eigen::MatrixXd y;
    double tss;
    Criterion criterion;

    double operator()(const std::vector<std::string>& vars) const {
        auto design = dummy_expand(table, rows, vars);
        if (design.n() <= design.q()) return std::numeric_limits<double>::infinity();
        try {
            auto fit = ols_fit(design, y);
            return criterion_value(criterion, fit.rss(0), tss, design.n(), design.q());
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    }
};

}  // namespace

SelectionPath backward_path(const DataTable& table, std::span<const std::size_t> rows,
                            const std::string& response, const std::vector<std::string>& candidates,
                            Criterion criterion) {
    if (candidates.empty()) throw_data("variable selection needs at least one candidate");
    for (const auto& c : candidates) observed_column(table, rows, c);
    Eigen::MatrixXd y = response_matrix(table, rows, {response});
    const double mean = y.col(0).mean();
    const double tss = (y.col(0).array() - mean).square().sum();

    SelectionPath path;
    path.degenerate = !(tss > 0.0);
    if (path.degenerate) return path;

    Scorer score{table, rows, y, tss, criterion};
    std::vector<std::string> current = candidates;
    path.sets.push_back(current);
    path.scores.push_back(score(current));
    while (!current.empty()) {
        double best_drop = std::numeric_limits<double>::infinity();
        std::size_t drop = 0;
        for (std::size_t i = 0; i < current.size(); ++i) {
            auto trial = current;
            trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
            double v = score(trial);
            if (v < best_drop || i == 0) {
                best_drop = v;
                drop = i;
            }
        }
        current.erase(current.begin() + static_cast<std::ptrdiff_t>(drop));
        path.sets.push_back(current);
        path.scores.push_back(best_drop);
    }
    std::reverse(path.sets.begin(), path.sets.end());
    std::reverse(path.scores.begin(), path.scores.end());
    return path;
}

std::vector<std::string> SelectionPath::select(std::size_t cap) const {
    if (degenerate || sets.empty()) return {};
    std::size_t k = std::min(cap, sets.size() - 1);
    while (k > 0 && scores[k - 1] < scores[k]) --k;
    return sets[k];
}

std::vector<std::string> backward_select(const DataTable& table, std::span<const std::size_t> rows,
                                         const std::string& response, const std::vector<std::string>& candidates,
                                         Criterion criterion) {
    return backward_path(table, rows, response, candidates, criterion).select(candidates.size());
}

std::vector<std::string> max_subset_select(const DataTable& table, std::span<const std::size_t> rows,
                                           const std::string& response, const std::vector<std::string>& candidates,
                                           std::size_t max_size, Criterion criterion) {
    if (max_size == 0) throw_data("max_subset_select: max-size must be at least 1");
    if (max_size > candidates.size()) {
        throw_data(fmt::format("max_subset_select: max-size {} exceeds {} candidates", max_size, candidates.size()));
    }
    return backward_path(table, rows, response, candidates, criterion).select(max_size);
}

}  // namespace fusion
