#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

#ifndef FUSION_CONFIG_DIR
#error "FUSION_CONFIG_DIR must point at configs/"
#endif
#ifndef FUSION_TEST_TMP
#error "FUSION_TEST_TMP must name a scratch directory"
#endif

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = fusion::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(FUSION_TEST_TMP) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string config(const std::string& name) { return std::string(FUSION_CONFIG_DIR) + "/" + name; }

// 20/20 toy files in the small fixture schema.
struct Toy {
    fs::path schema, recipient, donor;
};

Toy write_toy(const fs::path& dir, bool with_recodes) {
    using namespace fusion;
    Toy t{dir / "schema.json", dir / "rec.csv", dir / "don.csv"};
    std::ofstream(t.schema) << (with_recodes ? R"({"variables": [
        {"name": "X1", "role": "common", "scale": "categorical", "levels": [1, 2, 3]},
        {"name": "X2", "role": "common", "scale": "metric", "recode": {"type": "quantile_bin", "k": 3}},
        {"name": "X3", "role": "common", "scale": "metric", "recode": {"type": "quantile_bin", "k": 2}},
        {"name": "Y", "role": "recipient", "scale": "metric"},
        {"name": "Z1", "role": "donor", "scale": "metric"},
        {"name": "Z2", "role": "donor", "scale": "metric"}]})"
                                                : R"({"variables": [
        {"name": "X1", "role": "common", "scale": "categorical", "levels": [1, 2, 3]},
        {"name": "X2", "role": "common", "scale": "metric"},
        {"name": "X3", "role": "common", "scale": "metric"},
        {"name": "Y", "role": "recipient", "scale": "metric"},
        {"name": "Z1", "role": "donor", "scale": "metric"},
        {"name": "Z2", "role": "donor", "scale": "metric"}]})");
    const auto pop = fixture::small_population(40, 77);
    auto [rec, don] = split_population(pop, fixture::small_schema(), 20, 20, 1);
    write_table(rec, t.recipient.string());
    write_table(don, t.donor.string());
    return t;
}

}  // namespace

TEST_CASE("cli fuse") {
    const auto dir = scratch("fuse");
    const auto toy = write_toy(dir, true);
    const std::vector<std::string> base{"fuse", "--recipient", toy.recipient.string(), "--donor", toy.donor.string(),
                                        "--schema", toy.schema.string(), "--seed", "5"};

    auto args = base;
    args.insert(args.end(), {"--method", "pmm", "--out", (dir / "a" / "fused.csv").string()});
    const auto r = cli(args);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("fallback rate: 0.0000") != std::string::npos);
    CHECK(fs::exists(dir / "a" / "fused_assignment.csv"));

    // Every Z cell filled with a donor value.
    const auto schema = fusion::load_schema(toy.schema.string());
    const auto fused = fusion::load_table((dir / "a" / "fused.csv").string(), schema);
    const auto donor = fusion::load_table(toy.donor.string(), schema);
    for (const char* z : {"Z1", "Z2"}) {
        std::set<double> pool(donor.column(z).values.begin(), donor.column(z).values.end());
        REQUIRE(fused.column(z).values.size() == 20);
        for (double v : fused.column(z).values) CHECK(pool.count(v) == 1);
    }

    // Same seed, same bytes.
    args = base;
    args.insert(args.end(), {"--method", "pmm", "--out", (dir / "b" / "fused.csv").string()});
    REQUIRE(cli(args).code == 0);
    CHECK(slurp(dir / "a" / "fused.csv") == slurp(dir / "b" / "fused.csv"));
    CHECK(slurp(dir / "a" / "fused_assignment.csv") == slurp(dir / "b" / "fused_assignment.csv"));

    for (const char* method : {"rhd", "gower"}) {
        args = base;
        args.insert(args.end(), {"--method", method, "--out", (dir / method / "f.csv").string()});
        const auto m = cli(args);
        CHECK(m.code == 0);
        const auto audit = slurp(dir / method / "f_assignment.csv");
        CHECK(audit.rfind("method,target,recipient_id,donor_id,distance,stratum,round,fallback\n", 0) == 0);
    }
}

TEST_CASE("cli errors are machine readable") {
    const auto dir = scratch("errors");
    const auto toy = write_toy(dir, false);

    const auto rhd = cli({"fuse", "--recipient", toy.recipient.string(), "--donor", toy.donor.string(), "--schema",
                          toy.schema.string(), "--method", "rhd", "--seed", "1", "--out", (dir / "x.csv").string()});
    CHECK(rhd.code == 2);
    const auto j = nlohmann::json::parse(rhd.err);
    CHECK(j["error"]["kind"] == "data");
    CHECK(j["error"]["command"] == "fuse");
    CHECK(j["error"]["message"].get<std::string>().find("recode") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "x.csv"));

    const auto bad_method = cli({"fuse", "--recipient", toy.recipient.string(), "--donor", toy.donor.string(),
                                 "--schema", toy.schema.string(), "--method", "knn", "--out", (dir / "y.csv").string()});
    CHECK(bad_method.code == 1);
    CHECK(nlohmann::json::parse(bad_method.err)["error"]["kind"] == "usage");

    CHECK(cli({"simulate"}).code == 1);
    CHECK(cli({}).code == 1);
    CHECK(cli({"validate", "--schema", (dir / "missing.json").string()}).code == 2);
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("cli validate and synth") {
    const auto dir = scratch("validate");
    const auto toy = write_toy(dir, true);
    const auto v = cli({"validate", "--schema", toy.schema.string(), "--data", toy.recipient.string(), "--recipient",
                        toy.recipient.string(), "--donor", toy.donor.string()});
    CHECK(v.code == 0);
    CHECK(v.out.find("stacked: 20 recipients, 20 donors") != std::string::npos);

    const auto s = cli({"synth", "--spec", config("population.json"), "--out", (dir / "pop.csv").string(), "--seed", "3"});
    CHECK(s.code == 0);
    CHECK(s.out.find("Y1~Z1: target 0.8665") != std::string::npos);
    const auto pop = fusion::load_table((dir / "pop.csv").string(), fusion::load_schema(config("schema.json")));
    CHECK(pop.rows() == 20000);
}

TEST_CASE("cli simulate and report") {
    const auto dir = scratch("simulate");
    const auto a = cli({"simulate", "--scenario", config("smoke.json"), "--out", (dir / "a").string()});
    REQUIRE(a.code == 0);
    CHECK(a.out.find("Bias") != std::string::npos);
    for (const char* f : {"estimates.csv", "summary.json", "quantiles.csv"}) CHECK(fs::exists(dir / "a" / f));
    const auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
    CHECK(summary["k"] == 1);
    CHECK(summary["methods"].contains("rhd"));
    CHECK(summary["methods"].contains("pmm"));

    // A seed on the command line overrides the scenario; reruns are byte-identical.
    REQUIRE(cli({"simulate", "--scenario", config("smoke.json"), "--out", (dir / "b").string(), "--seed", "8"}).code == 0);
    REQUIRE(cli({"simulate", "--scenario", config("smoke.json"), "--out", (dir / "c").string(), "--seed", "8"}).code == 0);
    for (const char* f : {"estimates.csv", "summary.json", "quantiles.csv"}) {
        CHECK(slurp(dir / "b" / f) == slurp(dir / "c" / f));
    }
    CHECK(slurp(dir / "a" / "estimates.csv") != slurp(dir / "b" / "estimates.csv"));

    const auto three = cli({"simulate", "--scenario", config("three_methods.json"), "--out", (dir / "t").string()});
    REQUIRE(three.code == 0);
    const auto s3 = nlohmann::json::parse(slurp(dir / "t" / "summary.json"));
    for (const char* m : {"rhd", "pmm", "gower"}) CHECK(s3["methods"].contains(m));

    const auto rep = cli({"report", "--summary", (dir / "t").string(), "--out", (dir / "r").string()});
    CHECK(rep.code == 0);
    CHECK(rep.out.find("GOWER") != std::string::npos);
    CHECK(slurp(dir / "r" / "quantiles.csv") == slurp(dir / "t" / "quantiles.csv"));
}
