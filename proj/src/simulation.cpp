#include "fusion/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "config_json.hpp"
#include "fusion/error.hpp"
#include "fusion/recode.hpp"
#include "fusion/rng.hpp"

namespace fusion {

using detail::get_or;
using detail::json;

// ---------------------------------------------------------- calibration

namespace {

bool is_continuous(const Margin& m) { return m.kind != Margin::Kind::Categorical; }

double lognormal_spread(double sigma) { return std::sqrt(std::expm1(sigma * sigma)); }

}  // namespace

double pearson_from_latent(const Margin& a, const Margin& b, double latent) {
    if (!is_continuous(a) || !is_continuous(b)) throw_data("pearson calibration needs normal or lognormal margins");
    const bool la = a.kind == Margin::Kind::Lognormal, lb = b.kind == Margin::Kind::Lognormal;
    if (!la && !lb) return latent;
    if (la && lb) return std::expm1(latent * a.sigma * b.sigma) / (lognormal_spread(a.sigma) * lognormal_spread(b.sigma));
    const double s = la ? a.sigma : b.sigma;
    return latent * s / lognormal_spread(s);
}

double latent_for_pearson(const Margin& a, const Margin& b, double target) {
    if (!is_continuous(a) || !is_continuous(b)) throw_data("pearson calibration needs normal or lognormal margins");
    if (!(target > -1.0 && target < 1.0) && std::abs(target) != 1.0) throw_data("pearson target outside [-1, 1]");
    const bool la = a.kind == Margin::Kind::Lognormal, lb = b.kind == Margin::Kind::Lognormal;
    double latent = target;
    if (la && lb) {
        const double arg = 1.0 + target * lognormal_spread(a.sigma) * lognormal_spread(b.sigma);
        if (!(arg > 0.0)) throw_data(fmt::format("pearson target {} is unattainable for these lognormal margins", target));
        latent = std::log(arg) / (a.sigma * b.sigma);
    } else if (la || lb) {
        const double s = la ? a.sigma : b.sigma;
        latent = target * lognormal_spread(s) / s;
    }
    if (std::abs(latent) > 1.0) {
        throw_data(fmt::format("pearson target {} needs latent correlation {}, outside [-1, 1]", target, latent));
    }
    return latent;
}

std::vector<double> thresholds_from_shares(const std::vector<double>& shares) {
    if (shares.size() < 2) throw_data("need at least two category shares");
    double total = 0.0;
    for (double s : shares) {
        if (!(s > 0.0)) throw_data("category shares must be positive");
        total += s;
    }
    if (std::abs(total - 1.0) > 1e-9) throw_data("category shares must sum to 1");
    boost::math::normal_distribution<double> stdnorm;
    std::vector<double> cuts;
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < shares.size(); ++i) {
        cum += shares[i];
        cuts.push_back(boost::math::quantile(stdnorm, std::min(cum, 1.0 - 1e-15)));
    }
    return cuts;
}

Eigen::MatrixXd repair_correlation(const Eigen::MatrixXd& c, std::vector<std::string>* notes) {
    const auto d = c.rows();
    if (c.cols() != d) throw_data("latent correlation matrix is not square");
    for (Eigen::Index i = 0; i < d; ++i) {
        if (std::abs(c(i, i) - 1.0) > 1e-12) throw_data("latent correlation matrix needs a unit diagonal");
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::abs(c(i, j) - c(j, i)) > 1e-12) throw_data("latent correlation matrix is not symmetric");
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    const double low = eig.eigenvalues().minCoeff();
    if (low >= 0.0) return c;
    if (low < -1e-6) {
        throw_data(fmt::format("latent correlation matrix is not positive semi-definite (smallest eigenvalue {})", low));
    }
    Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd r = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    Eigen::VectorXd inv_sd = r.diagonal().cwiseSqrt().cwiseInverse();
    r = inv_sd.asDiagonal() * r * inv_sd.asDiagonal();
    r = 0.5 * (r + r.transpose());
    r.diagonal().setOnes();
    if (notes) notes->push_back(fmt::format("latent correlation repaired (smallest eigenvalue was {})", low));
    return r;
}

// ------------------------------------------------------------ spec parsing

namespace {

Margin parse_margin(const json& j, const std::string& name) {
    Margin m;
    const auto type = j.at("type").get<std::string>();
    if (type == "normal" || type == "lognormal") {
        m.kind = type == "normal" ? Margin::Kind::Normal : Margin::Kind::Lognormal;
        m.mu = get_or(j, "mu", 0.0);
        m.sigma = get_or(j, "sigma", 1.0);
        if (!(m.sigma > 0.0)) throw_data(fmt::format("variable '{}': sigma must be positive", name));
    } else if (type == "categorical") {
        m.kind = Margin::Kind::Categorical;
        if (j.contains("shares")) {
            m.thresholds = thresholds_from_shares(j.at("shares").get<std::vector<double>>());
        } else {
            m.thresholds = j.at("thresholds").get<std::vector<double>>();
        }
        for (std::size_t i = 1; i < m.thresholds.size(); ++i) {
            if (!(m.thresholds[i] > m.thresholds[i - 1])) {
                throw_data(fmt::format("variable '{}': thresholds must increase strictly", name));
            }
        }
        if (j.contains("levels")) {
            m.levels = j.at("levels").get<std::vector<int>>();
        } else {
            for (std::size_t i = 1; i <= m.thresholds.size() + 1; ++i) m.levels.push_back(static_cast<int>(i));
        }
        if (m.levels.size() != m.thresholds.size() + 1) {
            throw_data(fmt::format("variable '{}': need one more level than thresholds", name));
        }
    } else {
        throw_data(fmt::format("variable '{}': unknown margin type '{}'", name, type));
    }
    return m;
}

SynthSpec synth_from_json(const json& j) {
    SynthSpec spec;
    spec.n = j.at("n").get<std::size_t>();
    spec.seed = get_or<std::uint64_t>(j, "seed", 0);
    std::map<std::string, Eigen::Index> index;
    for (const auto& v : j.at("variables")) {
        LatentVariable lv;
        lv.name = v.at("name").get<std::string>();
        lv.margin = parse_margin(v.at("margin"), lv.name);
        lv.helper = get_or(v, "helper", false);
        if (!index.emplace(lv.name, static_cast<Eigen::Index>(spec.variables.size())).second) {
            throw_data(fmt::format("synthetic variable '{}' declared twice", lv.name));
        }
        spec.variables.push_back(std::move(lv));
    }
    const auto d = static_cast<Eigen::Index>(spec.variables.size());
    spec.latent_correlation = Eigen::MatrixXd::Identity(d, d);
    if (j.contains("correlations")) {
        for (const auto& c : j.at("correlations")) {
            const auto a = c.at("a").get<std::string>(), b = c.at("b").get<std::string>();
            auto ia = index.find(a), ib = index.find(b);
            if (ia == index.end() || ib == index.end()) throw_data(fmt::format("correlation {}~{}: unknown variable", a, b));
            if (ia->second == ib->second) throw_data(fmt::format("correlation {}~{}: a variable with itself", a, b));
            double latent;
            if (c.contains("pearson")) {
                const double target = c.at("pearson").get<double>();
                latent = latent_for_pearson(spec.variables[static_cast<std::size_t>(ia->second)].margin,
                                            spec.variables[static_cast<std::size_t>(ib->second)].margin, target);
                spec.targets.push_back({a, b, target});
            } else {
                latent = c.at("latent").get<double>();
            }
            if (std::abs(latent) > 1.0) throw_data(fmt::format("correlation {}~{} outside [-1, 1]", a, b));
            spec.latent_correlation(ia->second, ib->second) = latent;
            spec.latent_correlation(ib->second, ia->second) = latent;
        }
    }
    if (j.contains("derived")) {
        for (const auto& v : j.at("derived")) {
            DerivedVariable dv;
            dv.name = v.at("name").get<std::string>();
            if (v.contains("source")) dv.sources.push_back(v.at("source").get<std::string>());
            dv.rule = detail::parse_rule(v.at("rule"));
            dv.helper = get_or(v, "helper", false);
            spec.derived.push_back(std::move(dv));
        }
    }
    return spec;
}

}  // namespace

SynthSpec parse_synth_spec(std::string_view json_text) {
    try {
        return synth_from_json(json::parse(json_text));
    } catch (const json::exception& e) {
        throw_data(fmt::format("invalid synthetic population spec: {}", e.what()));
    }
}

SynthSpec load_synth_spec(const std::string& path) {
    auto j = detail::read_json_file(path);
    try {
        return synth_from_json(j);
    } catch (const json::exception& e) {
        throw_data(fmt::format("invalid synthetic population spec '{}': {}", path, e.what()));
    }
}

// -------------------------------------------------------------- generation

DataTable synth_population(const SynthSpec& spec, SynthReport* report) {
    if (spec.variables.empty()) throw_data("synthetic population needs at least one latent variable");
    const auto d = static_cast<Eigen::Index>(spec.variables.size());
    if (spec.latent_correlation.rows() != d) throw_data("latent correlation does not match the variable list");
    std::vector<std::string> notes;
    const Eigen::MatrixXd corr = repair_correlation(spec.latent_correlation, &notes);

    // Symmetric square root handles singular (but PSD) matrices.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    const Eigen::MatrixXd factor =
        eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();

    const auto n = static_cast<Eigen::Index>(spec.n);
    Eigen::MatrixXd latent(n, d);
    {
        Rng rng(spec.seed);
        std::normal_distribution<double> stdnorm(0.0, 1.0);
        Eigen::VectorXd eps(d);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index k = 0; k < d; ++k) eps[k] = stdnorm(rng);
            latent.row(i) = (factor * eps).transpose();
        }
    }

    DataTable full(spec.n);
    for (Eigen::Index k = 0; k < d; ++k) {
        const auto& v = spec.variables[static_cast<std::size_t>(k)];
        Column col{v.name, ScaleLevel::metric(), std::vector<double>(spec.n)};
        const auto& m = v.margin;
        if (m.kind == Margin::Kind::Categorical) col.scale = ScaleLevel::categorical(m.levels);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double z = latent(i, k);
            double value = 0.0;
            switch (m.kind) {
                case Margin::Kind::Normal: value = m.mu + m.sigma * z; break;
                case Margin::Kind::Lognormal: value = std::exp(m.mu + m.sigma * z); break;
                case Margin::Kind::Categorical: {
                    auto pos = std::upper_bound(m.thresholds.begin(), m.thresholds.end(), z) - m.thresholds.begin();
                    value = m.levels[static_cast<std::size_t>(pos)];
                    break;
                }
            }
            col.values[static_cast<std::size_t>(i)] = value;
        }
        full.add_column(std::move(col));
    }

    for (const auto& dv : spec.derived) {
        std::vector<int> codes;
        if (const auto* rc = std::get_if<RandomCategory>(&dv.rule)) {
            codes = random_category(spec.n, *rc, derive_seed(spec.seed, "derived:" + dv.name));
        } else if (const auto* mc = std::get_if<MaxOfColumns>(&dv.rule)) {
            codes = max_of_columns(full, *mc);
        } else {
            if (dv.sources.size() != 1) throw_data(fmt::format("derived variable '{}' needs one source", dv.name));
            codes = apply_rule(full.column(dv.sources.front()).values, dv.rule);
        }
        Column col{dv.name, ScaleLevel::categorical(output_levels(dv.rule)), {}};
        col.values.assign(codes.begin(), codes.end());
        full.add_column(std::move(col));
    }

    std::vector<std::string> keep;
    for (const auto& v : spec.variables) {
        if (!v.helper) keep.push_back(v.name);
    }
    for (const auto& v : spec.derived) {
        if (!v.helper) keep.push_back(v.name);
    }
    if (report) {
        report->notes = notes;
        report->achieved.clear();
        for (const auto& t : spec.targets) {
            report->achieved.push_back(
                {t.a, t.b, t.target, pearson_corr(full.column(t.a).values, full.column(t.b).values)});
        }
    }
    return full.select_columns(keep);
}

// ------------------------------------------------------------ Monte Carlo

void validate(const McConfig& c) {
    if (c.k < 1) throw_data("mc config: k must be at least 1");
    if (c.n_recipients < 10 || (!c.self_fusion && c.n_donors < 10)) {
        throw_data("mc config: recipient and donor sizes must be at least 10");
    }
    if (c.methods.empty()) throw_data("mc config: no methods");
    if (!(c.max_failure_rate >= 0.0 && c.max_failure_rate <= 1.0)) throw_data("mc config: bad failure rate");
    validate(c.options.rhd);
    validate(c.options.pmm);
}

McConfig resolve(const McConfig& config, const FusionSchema& schema) {
    McConfig out = config;
    if (out.targets.empty()) out.targets = schema.names(VariableRole::SpecificDonor);
    for (const auto& t : out.targets) {
        if (schema.at(t).role != VariableRole::SpecificDonor) throw_data(fmt::format("'{}' is not donor-specific", t));
    }
    if (out.pairs.empty()) {
        for (auto role : {VariableRole::SpecificRecipient, VariableRole::Common}) {
            for (const auto& v : schema.variables()) {
                if (v.role != role || !v.scale.is_metric()) continue;
                for (const auto& t : out.targets) out.pairs.push_back({v.name, t});
            }
        }
    }
    for (const auto& p : out.pairs) {
        const auto& spec = schema.at(p.a);
        if (spec.role == VariableRole::SpecificDonor) throw_data(fmt::format("pair {}: '{}' is not on the recipient side", p.label(), p.a));
        if (std::find(out.targets.begin(), out.targets.end(), p.z) == out.targets.end()) {
            throw_data(fmt::format("pair {}: '{}' is not an imputed target", p.label(), p.z));
        }
    }
    return out;
}

namespace {

std::pair<DataTable, DataTable> draw_blocks(const DataTable& population, const FusionSchema& schema,
                                            const McConfig& config, std::uint64_t seed) {
    if (!config.self_fusion) {
        return split_population(population, schema, config.n_recipients, config.n_donors, seed);
    }
    auto rows = sample_without_replacement(population.rows(), config.n_recipients, seed);
    std::sort(rows.begin(), rows.end());
    const auto sample = population.select_rows(rows);
    std::vector<std::string> rec_cols, don_cols;
    for (const auto& spec : schema.variables()) {
        if (spec.role != VariableRole::SpecificDonor) rec_cols.push_back(spec.name);
        if (spec.role != VariableRole::SpecificRecipient) don_cols.push_back(spec.name);
    }
    return {sample.select_columns(rec_cols), sample.select_columns(don_cols)};
}

FuseOptions replication_options(const McConfig& config, std::uint64_t rep_seed) {
    FuseOptions o = config.options;
    o.rhd.seed = derive_seed(rep_seed, "rhd");
    o.pmm.seed = derive_seed(rep_seed, "pmm");
    o.gower.seed = derive_seed(rep_seed, "gower");
    return o;
}

}  // namespace

ReplicationResult run_replication(const DataTable& population, const FusionSchema& schema, const McConfig& config,
                                  std::size_t rep) {
    ReplicationResult result;
    result.replication = rep;
    result.estimates.assign(config.methods.size(), std::vector<double>(config.pairs.size(), kMissing));
    result.errors.assign(config.methods.size(), "");

    const std::uint64_t rep_seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(rep));
    const auto [recipient, donor] = draw_blocks(population, schema, config, derive_seed(rep_seed, "sample"));
    const auto frame = stack(recipient, donor, schema);
    const auto options = replication_options(config, rep_seed);

    for (std::size_t m = 0; m < config.methods.size(); ++m) {
        try {
            const auto fused = fuse(frame, schema, config.methods[m], config.targets, options);
            for (std::size_t p = 0; p < config.pairs.size(); ++p) {
                result.estimates[m][p] = pearson_corr(fused.imputed.column(config.pairs[p].a).values,
                                                      fused.imputed.column(config.pairs[p].z).values);
            }
        } catch (const std::exception& e) {
            std::fill(result.estimates[m].begin(), result.estimates[m].end(), kMissing);
            result.errors[m] = e.what();
        }
    }
    return result;
}

const McCell& McResult::cell(Method method, const std::string& a, const std::string& z) const {
    for (const auto& c : cells) {
        if (c.method == method && c.pair.a == a && c.pair.z == z) return c;
    }
    throw_data(fmt::format("no result cell for {} {}:{}", to_string(method), a, z));
}

McResult run_mc(const DataTable& population, const FusionSchema& schema, const McConfig& raw) {
    validate(raw);
    const McConfig config = resolve(raw, schema);
    const std::size_t needed = config.self_fusion ? config.n_recipients : config.n_recipients + config.n_donors;
    if (needed > population.rows()) {
        throw_data(fmt::format("population has {} rows; the scenario needs {}", population.rows(), needed));
    }

    std::vector<ReplicationResult> reps(config.k);
    const auto k = static_cast<long long>(config.k);
    const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long long r = 0; r < k; ++r) {
        const auto rep = static_cast<std::size_t>(r);
        try {
            reps[rep] = run_replication(population, schema, config, rep);
        } catch (const std::exception& e) {
            reps[rep].replication = rep;
            reps[rep].estimates.assign(config.methods.size(), std::vector<double>(config.pairs.size(), kMissing));
            reps[rep].errors.assign(config.methods.size(), e.what());
        }
    }

    McResult result;
    result.config = config;
    std::vector<std::size_t> failed(config.methods.size(), 0);
    for (const auto& r : reps) {
        for (std::size_t m = 0; m < config.methods.size(); ++m) {
            if (r.errors[m].empty()) continue;
            ++failed[m];
            result.failures.push_back(
                fmt::format("replication {}: {}: {}", r.replication, to_string(config.methods[m]), r.errors[m]));
        }
    }
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
        if (static_cast<double>(failed[m]) > config.max_failure_rate * static_cast<double>(config.k)) {
            std::string first = result.failures.empty() ? "" : result.failures.front();
            throw_runtime(fmt::format("{}: {} of {} replications failed (limit {:.0f}%); first failure: {}",
                                      to_string(config.methods[m]), failed[m], config.k,
                                      100.0 * config.max_failure_rate, first));
        }
    }

    const auto common = schema.common();
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
        for (std::size_t p = 0; p < config.pairs.size(); ++p) {
            const auto& pair = config.pairs[p];
            McCell cell;
            cell.method = config.methods[m];
            cell.pair = pair;
            cell.true_value = pearson_corr(population.column(pair.a).values, population.column(pair.z).values);
            try {
                cell.cia_value = cia_corr(population, pair.a, pair.z, common);
            } catch (const Error&) {
                cell.cia_value.reset();
            }
            std::vector<double> ok;
            for (const auto& r : reps) {
                cell.estimates.push_back(r.estimates[m][p]);
                if (!is_missing(r.estimates[m][p])) ok.push_back(r.estimates[m][p]);
            }
            if (ok.empty()) {
                cell.summary.mean = cell.summary.bias = cell.summary.mse = cell.summary.variance = kMissing;
                cell.summary.quantiles = {kMissing, kMissing, kMissing, kMissing, kMissing};
            } else {
                cell.summary = summarize(ok, cell.true_value);
            }
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

// ---------------------------------------------------------------- scenario

namespace {

RhdConfig parse_rhd(const json& j) {
    RhdConfig c;
    c.c_primary = get_or(j, "c_primary", c.c_primary);
    c.c_secondary = get_or(j, "c_secondary", c.c_secondary);
    c.tolerance = get_or(j, "tolerance", c.tolerance);
    c.criterion = parse_criterion(get_or<std::string>(j, "criterion", "bic"));
    if (j.contains("max_variables")) c.max_variables = j.at("max_variables").get<std::size_t>();
    validate(c);
    return c;
}

PmmConfig parse_pmm(const json& j) {
    PmmConfig c;
    c.criterion = parse_criterion(get_or<std::string>(j, "criterion", "bic"));
    c.tie_epsilon = get_or(j, "tie_epsilon", c.tie_epsilon);
    validate(c);
    return c;
}

GowerConfig parse_gower(const json& j) {
    GowerConfig c;
    c.variables = get_or(j, "variables", std::vector<std::string>{});
    c.tie_epsilon = get_or(j, "tie_epsilon", c.tie_epsilon);
    return c;
}

FuseOptions fuse_options_from_json(const json& j) {
    FuseOptions o;
    if (j.contains("rhd")) o.rhd = parse_rhd(j.at("rhd"));
    if (j.contains("pmm")) o.pmm = parse_pmm(j.at("pmm"));
    if (j.contains("gower")) o.gower = parse_gower(j.at("gower"));
    return o;
}

}  // namespace

FuseOptions parse_fuse_options(std::string_view json_text) {
    try {
        return fuse_options_from_json(json::parse(json_text));
    } catch (const json::exception& e) {
        throw_data(fmt::format("invalid fusion config: {}", e.what()));
    }
}

FuseOptions load_fuse_options(const std::string& path) {
    auto j = detail::read_json_file(path);
    try {
        return fuse_options_from_json(j);
    } catch (const json::exception& e) {
        throw_data(fmt::format("invalid fusion config '{}': {}", path, e.what()));
    }
}

Scenario load_scenario(const std::string& path) {
    namespace fs = std::filesystem;
    const auto j = detail::read_json_file(path);
    const fs::path base = fs::path(path).parent_path();
    auto resolve_path = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };
    try {
        Scenario s;
        s.schema = load_schema(resolve_path(j.at("schema").get<std::string>()));
        const auto& pop = j.at("population");
        if (pop.contains("synth")) {
            const auto& src = pop.at("synth");
            s.synth = src.is_string() ? load_synth_spec(resolve_path(src.get<std::string>())) : synth_from_json(src);
            if (pop.contains("n")) s.synth->n = pop.at("n").get<std::size_t>();
        } else if (pop.contains("csv")) {
            s.population_csv = resolve_path(pop.at("csv").get<std::string>());
        } else {
            throw_data("scenario population needs 'synth' or 'csv'");
        }
        auto& c = s.config;
        c.scenario = get_or<std::string>(j, "name", fs::path(path).stem().string());
        c.k = j.at("k").get<std::size_t>();
        c.n_recipients = j.at("n_recipients").get<std::size_t>();
        c.n_donors = get_or<std::size_t>(j, "n_donors", c.n_recipients);
        for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
        s.has_seed = j.contains("seed");
        c.master_seed = get_or<std::uint64_t>(j, "seed", 0);
        c.targets = get_or(j, "targets", std::vector<std::string>{});
        if (j.contains("pairs")) {
            for (const auto& p : j.at("pairs")) c.pairs.push_back({p.at(0).get<std::string>(), p.at(1).get<std::string>()});
        }
        c.self_fusion = get_or(j, "self_fusion", false);
        c.max_failure_rate = get_or(j, "max_failure_rate", c.max_failure_rate);
        c.options = fuse_options_from_json(j);
        validate(c);
        c = resolve(c, s.schema);
        return s;
    } catch (const json::exception& e) {
        throw_data(fmt::format("invalid scenario '{}': {}", path, e.what()));
    }
}

DataTable conform_to_schema(const DataTable& table, const FusionSchema& schema) {
    DataTable out(table.row_ids());
    for (const auto& spec : schema.variables()) {
        if (!table.has_column(spec.name)) throw_data(fmt::format("population lacks schema variable '{}'", spec.name));
        Column col = table.column(spec.name);
        if (col.scale.is_metric() != spec.scale.is_metric()) {
            throw_data(fmt::format("population variable '{}' has the wrong scale level", spec.name));
        }
        if (!spec.scale.is_metric()) {
            const auto& levels = spec.scale.levels();
            for (double v : col.values) {
                if (is_missing(v)) continue;
                if (std::find(levels.begin(), levels.end(), static_cast<int>(v)) == levels.end()) {
                    throw_data(fmt::format("population variable '{}' has undeclared level {}", spec.name, v));
                }
            }
        }
        col.scale = spec.scale;
        out.add_column(std::move(col));
    }
    return out;
}

DataTable build_population(const Scenario& scenario, SynthReport* report) {
    if (scenario.population_csv) return load_table(*scenario.population_csv, scenario.schema);
    SynthSpec spec = *scenario.synth;
    spec.seed = derive_seed(scenario.config.master_seed, "population");
    return conform_to_schema(synth_population(spec, report), scenario.schema);
}

}  // namespace fusion
