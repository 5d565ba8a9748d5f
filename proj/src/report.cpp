#include "fusion/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "config_json.hpp"
#include "fusion/error.hpp"

namespace fusion {

using detail::json;

namespace {

std::string num(double v) {
    if (is_missing(v)) return "";
    return fmt::format("{}", v);
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double num_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return kMissing;
    return j.at(key).get<double>();
}

}  // namespace

McSummary summarize_result(const McResult& result) {
    McSummary s;
    const auto& c = result.config;
    s.scenario = c.scenario;
    s.k = c.k;
    s.n_recipients = c.n_recipients;
    s.n_donors = c.self_fusion ? c.n_recipients : c.n_donors;
    s.seed = c.master_seed;
    for (auto m : c.methods) s.methods.emplace_back(to_string(m));
    for (const auto& cell : result.cells) {
        s.rows.push_back({std::string(to_string(cell.method)), cell.pair.a, cell.pair.z, cell.true_value,
                          cell.cia_value, cell.summary});
    }
    s.failures = result.failures;
    return s;
}

std::string format_estimates_csv(const McResult& result) {
    std::string out = "scenario,method,pair,replication,estimate\n";
    for (const auto& cell : result.cells) {
        for (std::size_t r = 0; r < cell.estimates.size(); ++r) {
            out += fmt::format("{},{},{},{},{}\n", result.config.scenario, to_string(cell.method), cell.pair.label(),
                               r + 1, num(cell.estimates[r]));
        }
    }
    return out;
}

std::string format_quantiles_csv(const McSummary& s) {
    std::string out = "scenario,method,pair,true,cia,min,q25,median,q75,max\n";
    for (const auto& r : s.rows) {
        const auto& q = r.summary.quantiles;
        out += fmt::format("{},{},{}:{},{},{},{},{},{},{},{}\n", s.scenario, r.method, r.a, r.z, num(r.true_value),
                           opt_num(r.cia_value), num(q.min), num(q.q25), num(q.median), num(q.q75), num(q.max));
    }
    return out;
}

std::string format_summary_json(const McSummary& s) {
    json j;
    j["scenario"] = s.scenario;
    j["k"] = s.k;
    j["n_recipients"] = s.n_recipients;
    j["n_donors"] = s.n_donors;
    j["seed"] = s.seed;
    json methods = json::object();
    for (const auto& m : s.methods) methods[m] = json{{"pairs", json::array()}};
    for (const auto& r : s.rows) {
        const auto& e = r.summary;
        json row{{"pair", r.a + ":" + r.z},
                 {"a", r.a},
                 {"z", r.z},
                 {"true", num_json(r.true_value)},
                 {"cia", r.cia_value ? num_json(*r.cia_value) : json(nullptr)},
                 {"count", e.count},
                 {"mean", num_json(e.mean)},
                 {"bias", num_json(e.bias)},
                 {"mse", num_json(e.mse)},
                 {"variance", num_json(e.variance)},
                 {"quantiles",
                  {{"min", num_json(e.quantiles.min)},
                   {"q25", num_json(e.quantiles.q25)},
                   {"median", num_json(e.quantiles.median)},
                   {"q75", num_json(e.quantiles.q75)},
                   {"max", num_json(e.quantiles.max)}}}};
        methods[r.method]["pairs"].push_back(std::move(row));
    }
    j["methods"] = std::move(methods);
    j["method_order"] = s.methods;
    j["failures"] = s.failures;
    return j.dump(2) + "\n";
}

McSummary parse_summary_json(const std::string& text) {
    try {
        const auto j = json::parse(text);
        McSummary s;
        s.scenario = j.at("scenario").get<std::string>();
        s.k = j.at("k").get<std::size_t>();
        s.n_recipients = j.at("n_recipients").get<std::size_t>();
        s.n_donors = j.at("n_donors").get<std::size_t>();
        s.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("method_order")) {
            s.methods = j.at("method_order").get<std::vector<std::string>>();
        } else {
            for (const auto& [name, _] : j.at("methods").items()) s.methods.push_back(name);
        }
        for (const auto& m : s.methods) {
            for (const auto& p : j.at("methods").at(m).at("pairs")) {
                SummaryRow r;
                r.method = m;
                r.a = p.at("a").get<std::string>();
                r.z = p.at("z").get<std::string>();
                r.true_value = num_from(p, "true");
                if (!p.at("cia").is_null()) r.cia_value = p.at("cia").get<double>();
                auto& e = r.summary;
                e.count = p.at("count").get<std::size_t>();
                e.mean = num_from(p, "mean");
                e.bias = num_from(p, "bias");
                e.mse = num_from(p, "mse");
                e.variance = num_from(p, "variance");
                const auto& q = p.at("quantiles");
                e.quantiles = {num_from(q, "min"), num_from(q, "q25"), num_from(q, "median"), num_from(q, "q75"),
                               num_from(q, "max")};
                s.rows.push_back(std::move(r));
            }
        }
        if (j.contains("failures")) s.failures = j.at("failures").get<std::vector<std::string>>();
        return s;
    } catch (const json::exception& e) {
        throw_data(fmt::format("invalid summary file: {}", e.what()));
    }
}

McSummary load_summary_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_data(fmt::format("cannot open '{}'", path));
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_summary_json(text);
}

std::string format_bias_mse_table(const McSummary& s) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::map<std::pair<std::string, std::string>, std::pair<double, std::optional<double>>> truth;
    std::map<std::tuple<std::string, std::string, std::string>, const SummaryRow*> lookup;
    for (const auto& r : s.rows) {
        auto key = std::make_pair(r.a, r.z);
        if (!truth.count(key)) {
            pairs.push_back(key);
            truth[key] = {r.true_value, r.cia_value};
        }
        lookup[{r.method, r.a, r.z}] = &r;
    }
    std::string out = fmt::format("scenario {}  k={}  n={}/{}\n", s.scenario, s.k, s.n_recipients, s.n_donors);
    std::string head = fmt::format("{:<12}{:>9}{:>9}", "pair", "true", "CIA");
    std::string sub = fmt::format("{:<30}", "");
    for (const auto& m : s.methods) {
        std::string upper = m;
        std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char ch) { return std::toupper(ch); });
        head += fmt::format("  {:^19}", upper);
        sub += fmt::format("  {:>9}{:>10}", "Bias", "MSE");
    }
    out += head + "\n" + sub + "\n";
    for (const auto& key : pairs) {
        const auto& [tv, cia] = truth[key];
        out += fmt::format("{:<12}{:>9.4f}{:>9}", key.first + ":" + key.second, tv,
                           cia ? fmt::format("{:.4f}", *cia) : std::string("-"));
        for (const auto& m : s.methods) {
            auto it = lookup.find({m, key.first, key.second});
            if (it == lookup.end()) {
                out += fmt::format("  {:>9}{:>10}", "-", "-");
            } else {
                out += fmt::format("  {:>9.4f}{:>10.5f}", it->second->summary.bias, it->second->summary.mse);
            }
        }
        out += "\n";
    }
    if (!s.failures.empty()) out += fmt::format("{} failed method runs\n", s.failures.size());
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_runtime(fmt::format("cannot write '{}'", path));
    out << text;
    if (!out) throw_runtime(fmt::format("write to '{}' failed", path));
}

std::vector<std::string> write_mc_outputs(const McResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw_runtime(fmt::format("cannot create '{}': {}", out_dir, ec.message()));
    const auto summary = summarize_result(result);
    const fs::path dir(out_dir);
    const std::vector<std::pair<std::string, std::string>> files = {
        {(dir / "estimates.csv").string(), format_estimates_csv(result)},
        {(dir / "summary.json").string(), format_summary_json(summary)},
        {(dir / "quantiles.csv").string(), format_quantiles_csv(summary)},
    };
    std::vector<std::string> written;
    for (const auto& [path, text] : files) {
        write_text_file(path, text);
        written.push_back(path);
    }
    return written;
}

}  // namespace fusion
