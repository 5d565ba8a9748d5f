#pragma once

#include <random>
#include <string>
#include <vector>

#include "fusion/data_model.hpp"

namespace fixture {

using namespace fusion;

// X1 categorical {1,2,3}; X2, X3 metric with quantile recodes; one Y, two Z.
inline FusionSchema small_schema() {
    return parse_schema(R"({
      "variables": [
        {"name": "X1", "role": "common", "scale": "categorical", "levels": [1, 2, 3]},
        {"name": "X2", "role": "common", "scale": "metric", "recode": {"type": "quantile_bin", "k": 3}},
        {"name": "X3", "role": "common", "scale": "metric", "recode": {"type": "quantile_bin", "k": 2}},
        {"name": "Y", "role": "recipient", "scale": "metric"},
        {"name": "Z1", "role": "donor", "scale": "metric"},
        {"name": "Z2", "role": "donor", "scale": "metric"}
      ]})");
}

// Full population table in small_schema() shape.
inline DataTable small_population(std::size_t n, std::uint64_t seed, double noise = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> cat(1, 3);
    std::vector<double> x1(n), x2(n), x3(n), y(n), z1(n), z2(n);
    for (std::size_t i = 0; i < n; ++i) {
        x1[i] = cat(rng);
        x2[i] = g(rng);
        x3[i] = g(rng);
        y[i] = x2[i] + 0.3 * x3[i] + noise * g(rng);
        z1[i] = x2[i] + 0.8 * (x1[i] == 2.0) + noise * g(rng);
        z2[i] = 0.7 * x3[i] - 0.5 * x2[i] + noise * g(rng);
    }
    DataTable t(n);
    t.add_column({"X1", ScaleLevel::categorical({1, 2, 3}), x1});
    t.add_column({"X2", ScaleLevel::metric(), x2});
    t.add_column({"X3", ScaleLevel::metric(), x3});
    t.add_column({"Y", ScaleLevel::metric(), y});
    t.add_column({"Z1", ScaleLevel::metric(), z1});
    t.add_column({"Z2", ScaleLevel::metric(), z2});
    return t;
}

inline StackedFrame small_frame(std::size_t n_rec, std::size_t n_don, std::uint64_t seed, double noise = 0.5) {
    const auto schema = small_schema();
    const auto pop = small_population(n_rec + n_don, seed, noise);
    auto [rec, don] = split_population(pop, schema, n_rec, n_don, seed ^ 0x5eedULL);
    return stack(rec, don, schema);
}

}  // namespace fixture
