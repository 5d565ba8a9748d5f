#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "fusion/data_model.hpp"
#include "fusion/error.hpp"
#include "fusion/matchers.hpp"
#include "fusion/report.hpp"
#include "fusion/rng.hpp"
#include "fusion/simulation.hpp"

namespace fusion::cli {

namespace fs = std::filesystem;

namespace {

std::uint64_t fresh_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return 1;
        case ErrorKind::Data: return 2;
        case ErrorKind::Runtime: return 3;
    }
    return 3;
}

std::string_view kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Data: return "data";
        case ErrorKind::Runtime: return "runtime";
    }
    return "runtime";
}

int report_error(std::ostream& err, ErrorKind kind, const std::string& command, const std::string& message) {
    nlohmann::json j{{"error", {{"kind", kind_name(kind)}, {"command", command}, {"message", message}}}};
    err << j.dump() << "\n";
    return exit_code(kind);
}

struct ValidateArgs {
    std::string schema;
    std::vector<std::string> data;
    std::string recipient, donor;
};

struct FuseArgs {
    std::string recipient, donor, schema, method = "pmm", config, out;
    std::optional<std::uint64_t> seed;
};

struct SynthArgs {
    std::string spec, out;
    std::optional<std::uint64_t> seed;
};

struct SimulateArgs {
    std::string scenario, out;
    std::optional<std::uint64_t> seed;
    int threads = 0;
};

struct ReportArgs {
    std::string summary, out;
};

void cmd_validate(const ValidateArgs& a, std::ostream& out) {
    const auto schema = load_schema(a.schema);
    out << fmt::format("schema ok: {} variables\n", schema.variables().size());
    for (const auto& path : a.data) {
        const auto t = load_table(path, schema);
        out << fmt::format("{}: {} rows, {} columns\n", path, t.rows(), t.cols());
    }
    if (!a.recipient.empty() || !a.donor.empty()) {
        if (a.recipient.empty() || a.donor.empty()) throw_usage("--recipient and --donor go together");
        const auto frame = stack(load_table(a.recipient, schema), load_table(a.donor, schema), schema);
        out << fmt::format("stacked: {} recipients, {} donors\n", frame.recipient_rows.size(),
                           frame.donor_rows.size());
    }
}

void cmd_fuse(const FuseArgs& a, std::ostream& out) {
    const auto method = parse_method(a.method);
    const auto schema = load_schema(a.schema);
    FuseOptions options = a.config.empty() ? FuseOptions{} : load_fuse_options(a.config);
    const std::uint64_t seed = a.seed ? *a.seed : fresh_seed();
    if (!a.seed) out << fmt::format("seed: {}\n", seed);
    options.rhd.seed = derive_seed(seed, "rhd");
    options.pmm.seed = derive_seed(seed, "pmm");
    options.gower.seed = derive_seed(seed, "gower");

    const auto frame = stack(load_table(a.recipient, schema), load_table(a.donor, schema), schema);
    const auto targets = schema.names(VariableRole::SpecificDonor);
    const auto result = fuse(frame, schema, method, targets, options);

    const fs::path out_path(a.out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    const fs::path audit = out_path.parent_path() / (out_path.stem().string() + "_assignment.csv");
    write_table(result.imputed, a.out, schema.missing_token());
    write_text_file(audit.string(), format_assignments(frame, result.assignments));

    std::size_t total = 0, fallback = 0;
    for (const auto& asg : result.assignments) {
        total += asg.pairs.size();
        fallback += asg.fallback_count();
        for (const auto& note : asg.notes) out << "note: " << note << "\n";
    }
    out << fmt::format("fused {} recipients with {} ({} targets)\n", frame.recipient_rows.size(), to_string(method),
                       targets.size());
    out << fmt::format("fallback rate: {:.4f} ({} of {} matches)\n",
                       total ? static_cast<double>(fallback) / static_cast<double>(total) : 0.0, fallback, total);
    out << fmt::format("wrote {} and {}\n", a.out, audit.string());
}

void cmd_synth(const SynthArgs& a, std::ostream& out) {
    auto spec = load_synth_spec(a.spec);
    if (a.seed) spec.seed = *a.seed;
    SynthReport report;
    const auto table = synth_population(spec, &report);
    const fs::path out_path(a.out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_table(table, a.out);
    for (const auto& note : report.notes) out << "note: " << note << "\n";
    for (const auto& r : report.achieved) {
        out << fmt::format("{}~{}: target {:.4f} achieved {:.4f}\n", r.a, r.b, r.target, r.achieved);
    }
    out << fmt::format("wrote {} rows to {}\n", table.rows(), a.out);
}

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    auto scenario = load_scenario(a.scenario);
    if (a.seed) {
        scenario.config.master_seed = *a.seed;
    } else if (!scenario.has_seed) {
        scenario.config.master_seed = fresh_seed();
        out << fmt::format("seed: {}\n", scenario.config.master_seed);
    }
    if (a.threads < 0) throw_usage("--threads must be non-negative");
    scenario.config.threads = a.threads;
    SynthReport synth;
    const auto population = build_population(scenario, &synth);
    for (const auto& note : synth.notes) out << "note: " << note << "\n";
    const auto result = run_mc(population, scenario.schema, scenario.config);
    const auto files = write_mc_outputs(result, a.out);
    out << format_bias_mse_table(summarize_result(result));
    for (const auto& f : files) out << "wrote " << f << "\n";
}

void cmd_report(const ReportArgs& a, std::ostream& out) {
    fs::path in(a.summary);
    if (fs::is_directory(in)) in /= "summary.json";
    const auto summary = load_summary_json(in.string());
    const auto table = format_bias_mse_table(summary);
    out << table;
    if (!a.out.empty()) {
        const fs::path dir(a.out);
        fs::create_directories(dir);
        write_text_file((dir / "table.txt").string(), table);
        write_text_file((dir / "quantiles.csv").string(), format_quantiles_csv(summary));
        out << "wrote " << (dir / "table.txt").string() << " and " << (dir / "quantiles.csv").string() << "\n";
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Statistical matching of survey files and Monte Carlo evaluation", "fusion"};
    app.require_subcommand(1);

    ValidateArgs va;
    auto* validate_cmd = app.add_subcommand("validate", "check a schema and data files");
    validate_cmd->add_option("--schema", va.schema, "schema JSON")->required();
    validate_cmd->add_option("--data", va.data, "CSV files to check against the schema");
    validate_cmd->add_option("--recipient", va.recipient, "recipient CSV (checks stacking with --donor)");
    validate_cmd->add_option("--donor", va.donor, "donor CSV");

    FuseArgs fa;
    auto* fuse_cmd = app.add_subcommand("fuse", "impute donor variables into the recipient file");
    fuse_cmd->add_option("--recipient", fa.recipient, "recipient CSV")->required();
    fuse_cmd->add_option("--donor", fa.donor, "donor CSV")->required();
    fuse_cmd->add_option("--schema", fa.schema, "schema JSON")->required();
    fuse_cmd->add_option("--method", fa.method, "rhd | pmm | gower")->capture_default_str();
    fuse_cmd->add_option("--config", fa.config, "method options JSON");
    fuse_cmd->add_option("--seed", fa.seed, "random seed (printed when omitted)");
    fuse_cmd->add_option("--out", fa.out, "fused CSV; the audit goes to <stem>_assignment.csv")->required();

    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "draw a synthetic population");
    synth_cmd->add_option("--spec", sa.spec, "population spec JSON")->required();
    synth_cmd->add_option("--out", sa.out, "output CSV")->required();
    synth_cmd->add_option("--seed", sa.seed, "overrides the spec seed");

    SimulateArgs ma;
    auto* sim_cmd = app.add_subcommand("simulate", "run a Monte Carlo scenario");
    sim_cmd->add_option("--scenario", ma.scenario, "scenario JSON")->required();
    sim_cmd->add_option("--out", ma.out, "output directory")->required();
    sim_cmd->add_option("--seed", ma.seed, "master seed (overrides the scenario)");
    sim_cmd->add_option("--threads", ma.threads, "worker threads, 0 for the OpenMP default")->capture_default_str();

    ReportArgs ra;
    auto* report_cmd = app.add_subcommand("report", "print the Bias/MSE table of a finished run");
    report_cmd->add_option("--summary", ra.summary, "summary.json or the simulate output directory")->required();
    report_cmd->add_option("--out", ra.out, "directory for table.txt and quantiles.csv");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    std::string command = "fusion";
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        return report_error(err, ErrorKind::Usage, command, e.what());
    }

    try {
        if (*validate_cmd) {
            command = "validate";
            cmd_validate(va, out);
        } else if (*fuse_cmd) {
            command = "fuse";
            cmd_fuse(fa, out);
        } else if (*synth_cmd) {
            command = "synth";
            cmd_synth(sa, out);
        } else if (*sim_cmd) {
            command = "simulate";
            cmd_simulate(ma, out);
        } else if (*report_cmd) {
            command = "report";
            cmd_report(ra, out);
        }
    } catch (const Error& e) {
        return report_error(err, e.kind(), command, e.what());
    } catch (const fs::filesystem_error& e) {
        return report_error(err, ErrorKind::Runtime, command, e.what());
    } catch (const std::exception& e) {
        return report_error(err, ErrorKind::Runtime, command, e.what());
    }
    return 0;
}

}  // namespace fusion::cli
