// Serial vs OpenMP nearest-donor kernels. Arguments are n_rec, n_don.

#include <random>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "fusion/kernels.hpp"

namespace {

using fusion::kernels::RowMatrix;

RowMatrix random_rows(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    RowMatrix m(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < p; ++k) m(i, k) = g(rng);
    }
    return m;
}

fusion::kernels::GowerInput gower_input(Eigen::Index n_rec, Eigen::Index n_don) {
    // Three metric columns and three categorical ones with four levels.
    fusion::kernels::GowerInput in;
    in.recipients = random_rows(n_rec, 6, 1);
    in.donors = random_rows(n_don, 6, 2);
    for (auto* m : {&in.recipients, &in.donors}) {
        for (Eigen::Index i = 0; i < m->rows(); ++i) {
            for (Eigen::Index k = 3; k < 6; ++k) (*m)(i, k) = std::floor(std::abs((*m)(i, k)) * 2.0);
        }
    }
    in.categorical = {0, 0, 0, 1, 1, 1};
    in.range = {6.0, 6.0, 6.0, 0.0, 0.0, 0.0};
    return in;
}

void mahalanobis(benchmark::State& state, bool parallel) {
    const auto rec = random_rows(state.range(0), 2, 3);
    const auto don = random_rows(state.range(1), 2, 4);
    Eigen::MatrixXd w(2, 2);
    w << 1.5, -0.3, -0.3, 0.8;
    for (auto _ : state) {
        auto out = parallel ? fusion::kernels::mahalanobis_parallel(rec, don, w, 1e-12, 7)
                            : fusion::kernels::mahalanobis_serial(rec, don, w, 1e-12, 7);
        benchmark::DoNotOptimize(out.donor.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
    state.counters["threads"] = parallel ? omp_get_max_threads() : 1;
}

void gower(benchmark::State& state, bool parallel) {
    const auto in = gower_input(state.range(0), state.range(1));
    for (auto _ : state) {
        auto out = parallel ? fusion::kernels::gower_parallel(in, 1e-12, 7) : fusion::kernels::gower_serial(in, 1e-12, 7);
        benchmark::DoNotOptimize(out.donor.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
    state.counters["threads"] = parallel ? omp_get_max_threads() : 1;
}

void sizes(benchmark::internal::Benchmark* b) {
    b->Args({400, 400})->Args({400, 3600})->Args({4000, 4000})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK_CAPTURE(mahalanobis, serial, false)->Apply(sizes);
BENCHMARK_CAPTURE(mahalanobis, parallel, true)->Apply(sizes);
BENCHMARK_CAPTURE(gower, serial, false)->Apply(sizes);
BENCHMARK_CAPTURE(gower, parallel, true)->Apply(sizes);

BENCHMARK_MAIN();
