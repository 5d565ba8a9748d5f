#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "fusion/data_model.hpp"
#include "fusion/error.hpp"

using namespace fusion;

namespace {

const char* kSchema = R"({
  "missing_token": "NA",
  "variables": [
    {"name": "X1", "role": "common", "scale": "categorical", "levels": [1, 2]},
    {"name": "X2", "role": "common", "scale": "metric", "recode": {"type": "quantile_bin", "k": 2}},
    {"name": "Y", "role": "recipient", "scale": "metric"},
    {"name": "Z", "role": "donor", "scale": "metric"}
  ]})";

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Runtime;
}

}  // namespace

TEST_CASE("load_table parses declared columns") {
    const auto schema = parse_schema(kSchema);
    const auto t = parse_table("X1,X2,Y\n1,2.5,3\n2,1.0,4\n1,0.5,5\n", schema);
    CHECK(t.rows() == 3);
    CHECK(t.cols() == 3);
    CHECK(t.column("X2").values[1] == 1.0);
    CHECK(t.row_ids() == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("load_table rejects a category outside the declared levels") {
    const auto schema = parse_schema(kSchema);
    CHECK(kind_of([&] { parse_table("X1,X2\n3,1\n", schema); }) == ErrorKind::Data);
}

TEST_CASE("missing token becomes the missing marker") {
    const auto schema = parse_schema(kSchema);
    const auto t = parse_table("X1,X2,Y\n1,2,NA\n", schema);
    CHECK(is_missing(t.column("Y").values[0]));
}

TEST_CASE("csv details") {
    const auto schema = parse_schema(kSchema);
    SUBCASE("undeclared column") { CHECK(kind_of([&] { parse_table("X1,X2,W\n1,2,3\n", schema); }) == ErrorKind::Data); }
    SUBCASE("missing common column") { CHECK(kind_of([&] { parse_table("X1,Y\n1,2\n", schema); }) == ErrorKind::Data); }
    SUBCASE("quoted fields and CRLF") {
        const auto t = parse_table("\"X1\",X2\r\n\"1\",\"2.5\"\r\n", schema);
        CHECK(t.column("X2").values[0] == 2.5);
    }
    SUBCASE("ragged row") { CHECK(kind_of([&] { parse_table("X1,X2\n1\n", schema); }) == ErrorKind::Data); }
    SUBCASE("non-numeric") { CHECK(kind_of([&] { parse_table("X1,X2\n1,abc\n", schema); }) == ErrorKind::Data); }
    SUBCASE("round trip") {
        const auto t = parse_table("X1,X2,Y\n1,0.1,NA\n2,1e-300,3.25\n", schema);
        const auto back = parse_table(format_table(t, "NA"), schema);
        CHECK(back.column("X2").values == t.column("X2").values);
        CHECK(is_missing(back.column("Y").values[0]));
    }
}

TEST_CASE("schema validation") {
    CHECK(kind_of([] { parse_schema(R"({"variables": [{"name": "X", "role": "common", "scale": "metric"}]})"); }) ==
          ErrorKind::Data);
    CHECK(kind_of([] {
              parse_schema(R"({"variables": [
                {"name": "X", "role": "common", "scale": "metric", "recode": {"type": "map_groups", "groups": [{"from": [1], "to": 1}]}},
                {"name": "Z", "role": "donor", "scale": "metric"}]})");
          }) == ErrorKind::Data);
    CHECK(kind_of([] {
              parse_schema(R"({"variables": [
                {"name": "X", "role": "common", "scale": "categorical", "levels": [1, 1]},
                {"name": "Z", "role": "donor", "scale": "metric"}]})");
          }) == ErrorKind::Data);
    const auto s = parse_schema(kSchema);
    CHECK(s.common() == std::vector<std::string>{"X1", "X2"});
    CHECK(s.at("X1").scale.levels().front() == 1);
}

TEST_CASE("stack builds the missing-by-design frame") {
    const auto schema = fixture::small_schema();
    const auto pop = fixture::small_population(4000, 1);

    SUBCASE("400/400") {
        auto [rec, don] = split_population(pop, schema, 400, 400, 9);
        const auto f = stack(rec, don, schema);
        CHECK(f.table.rows() == 800);
        for (std::size_t i = 0; i < 400; ++i) CHECK(is_missing(f.table.column("Z1").values[i]));
        for (std::size_t i = 400; i < 800; ++i) CHECK(is_missing(f.table.column("Y").values[i]));
        CHECK_NOTHROW(check_stacked(f, schema));
    }
    SUBCASE("400/3600") {
        auto [rec, don] = split_population(pop, schema, 400, 3600, 9);
        CHECK(stack(rec, don, schema).table.rows() == 4000);
    }
    SUBCASE("empty donor") {
        auto [rec, don] = split_population(pop, schema, 10, 10, 9);
        CHECK(kind_of([&] { stack(rec, don.select_rows(std::vector<std::size_t>{}), schema); }) == ErrorKind::Data);
    }
    SUBCASE("donor file observing Y") {
        auto [rec, don] = split_population(pop, schema, 10, 10, 9);
        auto bad = don.with_column({"Y", ScaleLevel::metric(), std::vector<double>(10, 1.0)});
        CHECK(kind_of([&] { stack(rec, bad, schema); }) == ErrorKind::Data);
    }
}

TEST_CASE("stack then project reproduces the inputs") {
    const auto schema = fixture::small_schema();
    const auto pop = fixture::small_population(300, 2);
    auto [rec, don] = split_population(pop, schema, 100, 200, 4);
    const auto f = stack(rec, don, schema);
    const auto r = f.recipient_block();
    const auto d = f.donor_block();
    CHECK(r.row_ids() == rec.row_ids());
    CHECK(d.row_ids() == don.row_ids());
    for (const auto& c : rec.columns()) CHECK(r.column(c.name).values == c.values);
    for (const auto& c : don.columns()) CHECK(d.column(c.name).values == c.values);
}

TEST_CASE("split_population") {
    const auto schema = fixture::small_schema();
    const auto pop = fixture::small_population(10, 3);
    auto a = split_population(pop, schema, 5, 5, 42);
    auto b = split_population(pop, schema, 5, 5, 42);
    CHECK(a.first.row_ids() == b.first.row_ids());
    CHECK(a.second.row_ids() == b.second.row_ids());
    std::set<std::size_t> ids(a.first.row_ids().begin(), a.first.row_ids().end());
    for (auto id : a.second.row_ids()) CHECK(ids.insert(id).second);
    CHECK(ids.size() == 10);
    CHECK_FALSE(a.first.has_column("Z1"));
    CHECK_FALSE(a.second.has_column("Y"));
    CHECK(kind_of([&] { split_population(pop, schema, 8, 8, 1); }) == ErrorKind::Data);
}
