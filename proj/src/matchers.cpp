#include "fusion/matchers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <fmt/format.h>

#include "fusion/error.hpp"
#include "fusion/kernels.hpp"
#include "fusion/recode.hpp"
#include "fusion/rng.hpp"

namespace fusion {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::Rhd: return "rhd";
        case Method::Pmm: return "pmm";
        case Method::Gower: return "gower";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    if (name == "rhd") return Method::Rhd;
    if (name == "pmm") return Method::Pmm;
    if (name == "gower") return Method::Gower;
    throw_usage(fmt::format("unknown method '{}' (expected rhd, pmm or gower)", name));
}

std::size_t MatchAssignment::fallback_count() const {
    return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [](const MatchPair& p) { return p.fallback; }));
}

void validate(const RhdConfig& c) {
    if (!(c.c_secondary >= 1.0) || !(c.c_primary >= c.c_secondary)) {
        throw_data("rhd config: need c_primary >= c_secondary >= 1");
    }
    if (!(c.tolerance >= 0.0 && c.tolerance < 1.0)) throw_data("rhd config: tolerance must lie in [0, 1)");
}

void validate(const PmmConfig& c) {
    if (!(c.tie_epsilon >= 0.0)) throw_data("pmm config: tie_epsilon must be non-negative");
}

std::vector<std::string> build_stratum_keys(const DataTable& table, std::span<const std::size_t> rows,
                                            const std::vector<std::string>& variables) {
    std::vector<const Column*> cols;
    for (const auto& v : variables) {
        const auto& c = table.column(v);
        if (!c.scale.is_categorical()) {
            throw_data(fmt::format("stratum variable '{}' is metric; categorise it first (recode rule)", v));
        }
        cols.push_back(&c);
    }
    std::vector<std::string> keys;
    keys.reserve(rows.size());
    for (auto r : rows) {
        std::string key;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            double v = cols[k]->values[r];
            if (is_missing(v)) throw_data(fmt::format("stratum variable '{}' has a missing value", cols[k]->name));
            if (k) key += '|';
            key += fmt::format("{}", static_cast<long long>(v));
        }
        keys.push_back(std::move(key));
    }
    return keys;
}

namespace {

void check_target(const StackedFrame& frame, const FusionSchema& schema, const std::string& target) {
    const auto& spec = schema.at(target);
    if (spec.role != VariableRole::SpecificDonor) {
        throw_data(fmt::format("target '{}' is not a donor-specific variable", target));
    }
    if (!spec.scale.is_metric()) throw_data(fmt::format("target '{}' must be metric", target));
    if (!frame.table.has_column(target)) throw_data(fmt::format("target '{}' absent from the frame", target));
    const auto& values = frame.table.column(target).values;
    for (auto r : frame.donor_rows) {
        if (is_missing(values[r])) throw_data(fmt::format("target '{}' is not observed on every donor", target));
    }
}

void check_frame(const StackedFrame& frame) {
    if (frame.donor_rows.empty()) throw_data("donor block is empty");
    if (frame.recipient_rows.empty()) throw_data("recipient block is empty");
}

}  // namespace

// ---------------------------------------------------------------- hot deck

MatchAssignment rhd_match(const StackedFrame& frame, const FusionSchema& schema, const std::string& target,
                          const RhdConfig& config) {
    validate(config);
    check_frame(frame);
    check_target(frame, schema, target);

    const DataTable cat = categorise_common(frame.table, schema);
    const auto candidates = schema.common();
    const auto path = backward_path(cat, frame.donor_rows, target, candidates, config.criterion);

    MatchAssignment out;
    out.method = Method::Rhd;
    out.targets = {target};
    if (path.degenerate) out.notes.push_back(fmt::format("'{}' has zero variance among donors; one global stratum", target));

    const std::size_t n_rec = frame.n_recipients(), n_don = frame.n_donors();
    const std::size_t start_cap = std::min(config.max_variables.value_or(candidates.size()), candidates.size());
    const double base_ratio = static_cast<double>(n_rec) / static_cast<double>(n_don);

    Rng rng(config.seed);
    out.pairs.resize(n_rec);
    std::vector<std::size_t> pending(n_rec);
    for (std::size_t i = 0; i < n_rec; ++i) pending[i] = i;

    struct RoundSpec {
        int round;
        double c;
        double tolerance;
    };
    for (const RoundSpec spec : {RoundSpec{1, config.c_primary, config.tolerance}, RoundSpec{2, config.c_secondary, 0.0}}) {
        if (pending.empty()) break;
        std::vector<std::size_t> pending_rows;
        pending_rows.reserve(pending.size());
        for (auto i : pending) pending_rows.push_back(frame.recipient_rows[i]);

        std::size_t cap = start_cap;
        std::vector<std::string> selected = cap == 0 ? std::vector<std::string>{} : path.select(cap);
        std::vector<std::string> rec_keys;
        std::unordered_map<std::string, std::vector<std::size_t>> donors_by_key;
        std::unordered_map<std::string, std::size_t> rec_count;
        auto violates = [&](const std::string& key) {
            auto it = donors_by_key.find(key);
            if (it == donors_by_key.end()) return true;
            const double ratio = static_cast<double>(rec_count[key]) / static_cast<double>(it->second.size());
            return ratio > spec.c * base_ratio;
        };
        bool accepted = false;
        while (true) {
            rec_keys = build_stratum_keys(cat, pending_rows, selected);
            const auto don_keys = build_stratum_keys(cat, frame.donor_rows, selected);
            donors_by_key.clear();
            rec_count.clear();
            for (std::size_t j = 0; j < n_don; ++j) donors_by_key[don_keys[j]].push_back(j);
            for (const auto& k : rec_keys) ++rec_count[k];
            std::size_t violating = 0;
            for (const auto& [key, count] : rec_count) {
                if (violates(key)) violating += count;
            }
            accepted = static_cast<double>(violating) <= spec.tolerance * static_cast<double>(n_rec);
            out.attempts.push_back({spec.round, spec.c, spec.tolerance, cap, selected, pending.size(), violating, accepted});
            if (accepted || selected.size() <= 1) break;
            cap = selected.size() - 1;
            selected = path.select(cap);
        }
        if (spec.round == 1) out.selected = selected;

        std::vector<std::size_t> still_pending;
        for (std::size_t p = 0; p < pending.size(); ++p) {
            const auto& key = rec_keys[p];
            auto it = donors_by_key.find(key);
            const bool eligible = it != donors_by_key.end() && (accepted || !violates(key));
            if (!eligible) {
                still_pending.push_back(pending[p]);
                continue;
            }
            const auto& pool = it->second;
            const std::size_t i = pending[p];
            out.pairs[i] = MatchPair{i, pool[uniform_index(rng, pool.size())], 0.0, key, spec.round, spec.round > 1};
        }
        pending = std::move(still_pending);
    }

    if (!pending.empty()) {
        out.notes.push_back(fmt::format("{} recipient(s) drawn from the full donor pool after two rounds", pending.size()));
    }
    for (auto i : pending) out.pairs[i] = MatchPair{i, uniform_index(rng, n_don), 0.0, "", 3, true};
    return out;
}

// ------------------------------------------------------ predictive means

namespace {

Eigen::MatrixXd mahalanobis_weight(const Eigen::MatrixXd& s, std::vector<std::string>& notes) {
    const auto m = s.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    const auto& lambda = eig.eigenvalues();
    const double top = lambda.maxCoeff();
    if (!(top > 0.0)) {
        notes.push_back("residual covariance is zero; using identity weighting");
        return Eigen::MatrixXd::Identity(m, m);
    }
    const double tol = top * static_cast<double>(m) * 1e-12;
    Eigen::VectorXd inv(m);
    bool singular = false;
    for (Eigen::Index k = 0; k < m; ++k) {
        if (lambda[k] > tol) {
            inv[k] = 1.0 / lambda[k];
        } else {
            inv[k] = 0.0;
            singular = true;
        }
    }
    if (singular) notes.push_back("residual covariance is singular; using its pseudo-inverse");
    Eigen::MatrixXd w = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (w + w.transpose());
}

kernels::RowMatrix to_rows(const Eigen::MatrixXd& m) { return m; }

}  // namespace

MatchAssignment pmm_match(const StackedFrame& frame, const FusionSchema& schema,
                          const std::vector<std::string>& targets, const PmmConfig& config) {
    validate(config);
    check_frame(frame);
    if (targets.empty()) throw_data("pmm needs at least one target");
    for (const auto& t : targets) check_target(frame, schema, t);

    MatchAssignment out;
    out.method = Method::Pmm;
    out.targets = targets;

    const auto candidates = schema.common();
    std::vector<char> keep(candidates.size(), 0);
    for (const auto& t : targets) {
        for (const auto& v : backward_select(frame.table, frame.donor_rows, t, candidates, config.criterion)) {
            keep[static_cast<std::size_t>(std::find(candidates.begin(), candidates.end(), v) - candidates.begin())] = 1;
        }
    }
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (keep[k]) out.selected.push_back(candidates[k]);
    }
    if (out.selected.empty()) {
        out.notes.push_back("no common variable selected for any target; intercept-only predictive means (random donor)");
    }

    const auto design = dummy_expand(frame.table, frame.donor_rows, out.selected);
    for (const auto& p : design.pruned) out.notes.push_back("pruned " + p);
    const auto fit = ols_fit(design, response_matrix(frame.table, frame.donor_rows, targets));
    const Eigen::MatrixXd rec_means = encode(frame.table, frame.recipient_rows, design.terms) * fit.coefficients;
    const Eigen::MatrixXd weight = mahalanobis_weight(fit.residual_covariance, out.notes);

    const auto nearest = kernels::mahalanobis_parallel(to_rows(rec_means), to_rows(fit.fitted), weight,
                                                       config.tie_epsilon, config.seed);
    out.pairs.resize(frame.n_recipients());
    for (std::size_t i = 0; i < out.pairs.size(); ++i) {
        out.pairs[i] = MatchPair{i, nearest.donor[i], nearest.distance[i], "", 1, false};
    }
    return out;
}

// ------------------------------------------------------------------ Gower

MatchAssignment gower_match(const StackedFrame& frame, const FusionSchema& schema, const GowerConfig& config) {
    check_frame(frame);
    if (!(config.tie_epsilon >= 0.0)) throw_data("gower config: tie_epsilon must be non-negative");
    auto variables = config.variables.empty() ? schema.common() : config.variables;

    MatchAssignment out;
    out.method = Method::Gower;
    out.targets = schema.names(VariableRole::SpecificDonor);
    out.selected = variables;

    const auto p = static_cast<Eigen::Index>(variables.size());
    kernels::GowerInput in;
    in.recipients.resize(static_cast<Eigen::Index>(frame.n_recipients()), p);
    in.donors.resize(static_cast<Eigen::Index>(frame.n_donors()), p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const auto& name = variables[static_cast<std::size_t>(k)];
        if (schema.at(name).role == VariableRole::SpecificDonor) {
            throw_data(fmt::format("gower variable '{}' is not observed on recipients", name));
        }
        const auto& col = frame.table.column(name);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        auto fill = [&](auto& dest, const std::vector<std::size_t>& rows) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                double v = col.values[rows[i]];
                if (is_missing(v)) throw_data(fmt::format("gower variable '{}' has a missing value", name));
                dest(static_cast<Eigen::Index>(i), k) = v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        };
        fill(in.recipients, frame.recipient_rows);
        fill(in.donors, frame.donor_rows);
        in.categorical.push_back(col.scale.is_categorical() ? 1 : 0);
        in.range.push_back(col.scale.is_categorical() ? 0.0 : hi - lo);
        if (col.scale.is_metric() && !(hi > lo)) {
            out.notes.push_back(fmt::format("'{}' has zero range; it contributes 0 to every distance", name));
        }
    }

    const auto nearest = kernels::gower_parallel(in, config.tie_epsilon, config.seed);
    out.pairs.resize(frame.n_recipients());
    for (std::size_t i = 0; i < out.pairs.size(); ++i) {
        out.pairs[i] = MatchPair{i, nearest.donor[i], nearest.distance[i], "", 1, false};
    }
    return out;
}

// ----------------------------------------------------------------- impute

DataTable impute(const StackedFrame& frame, const MatchAssignment& assignment,
                 const std::vector<std::string>& targets) {
    const std::size_t n_rec = frame.n_recipients();
    if (assignment.pairs.size() != n_rec) {
        throw_data(fmt::format("assignment covers {} recipients, frame has {}", assignment.pairs.size(), n_rec));
    }
    std::vector<char> seen(n_rec, 0);
    for (const auto& p : assignment.pairs) {
        if (p.recipient >= n_rec || seen[p.recipient]) throw_data("assignment does not list every recipient exactly once");
        seen[p.recipient] = 1;
        if (p.donor >= frame.n_donors()) {
            throw_data(fmt::format("assignment references donor row {} of {}", p.donor, frame.n_donors()));
        }
    }
    DataTable out = frame.recipient_block();
    for (const auto& t : targets) {
        const auto& src = frame.table.column(t);
        Column filled{t, src.scale, std::vector<double>(n_rec)};
        for (const auto& p : assignment.pairs) filled.values[p.recipient] = src.values[frame.donor_rows[p.donor]];
        out = out.with_column(std::move(filled));
    }
    return out;
}

FusionResult fuse(const StackedFrame& frame, const FusionSchema& schema, Method method,
                  const std::vector<std::string>& targets, const FuseOptions& options) {
    FusionResult result;
    switch (method) {
        case Method::Rhd: {
            result.imputed = frame.recipient_block();
            for (std::size_t t = 0; t < targets.size(); ++t) {
                RhdConfig cfg = options.rhd;
                cfg.seed = derive_seed(options.rhd.seed, static_cast<std::uint64_t>(t));
                auto a = rhd_match(frame, schema, targets[t], cfg);
                auto one = impute(frame, a, {targets[t]});
                result.imputed = result.imputed.with_column(one.column(targets[t]));
                result.assignments.push_back(std::move(a));
            }
            break;
        }
        case Method::Pmm:
            result.assignments.push_back(pmm_match(frame, schema, targets, options.pmm));
            result.imputed = impute(frame, result.assignments.back(), targets);
            break;
        case Method::Gower: {
            for (const auto& t : targets) check_target(frame, schema, t);
            auto a = gower_match(frame, schema, options.gower);
            a.targets = targets;
            result.imputed = impute(frame, a, targets);
            result.assignments.push_back(std::move(a));
            break;
        }
    }
    return result;
}

std::string format_assignments(const StackedFrame& frame, const std::vector<MatchAssignment>& assignments) {
    std::string out = "method,target,recipient_id,donor_id,distance,stratum,round,fallback\n";
    const auto& ids = frame.table.row_ids();
    for (const auto& a : assignments) {
        std::string target;
        for (std::size_t t = 0; t < a.targets.size(); ++t) target += (t ? "|" : "") + a.targets[t];
        for (const auto& p : a.pairs) {
            out += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(a.method), target,
                               ids[frame.recipient_rows[p.recipient]], ids[frame.donor_rows[p.donor]], p.distance,
                               p.stratum, p.round, p.fallback ? 1 : 0);
        }
    }
    return out;
}

}  // namespace fusion
