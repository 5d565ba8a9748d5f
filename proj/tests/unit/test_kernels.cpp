#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "fusion/error.hpp"
#include "fusion/kernels.hpp"

using namespace fusion;
using namespace fusion::kernels;

namespace {

RowMatrix random_rows(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m, bool coarse) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> small(0, 3);
    RowMatrix out(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < m; ++k) out(i, k) = coarse ? small(rng) : g(rng);
    }
    return out;
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index m) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd a(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < m; ++k) a(i, k) = g(rng);
    }
    return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(m, m);
}

}  // namespace

TEST_CASE("mahalanobis kernels agree with each other and with brute force") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 60; ++trial) {
        const bool coarse = trial % 2 == 1;  // integer grids produce exact ties
        const Eigen::Index m = 1 + trial % 3;
        const auto rec = random_rows(rng, 5 + trial % 17, m, coarse);
        const auto don = random_rows(rng, 3 + trial % 41, m, coarse);
        const Eigen::MatrixXd w = coarse ? Eigen::MatrixXd::Identity(m, m) : random_spd(rng, m);
        const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(trial);

        const auto serial = mahalanobis_serial(rec, don, w, 1e-12, seed);
        const auto parallel = mahalanobis_parallel(rec, don, w, 1e-12, seed);
        CHECK(serial.donor == parallel.donor);
        CHECK(serial.distance == parallel.distance);
        CHECK(serial.ties == parallel.ties);

        const auto ref = oracle::brute_force(oracle::mahalanobis_matrix(rec, don, w), 1e-12, seed);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(serial.donor[i] == ref[i].donor);
            CHECK(serial.distance[i] == doctest::Approx(ref[i].distance).epsilon(1e-12));
        }
    }
}

TEST_CASE("gower kernels agree with each other and with brute force") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 60; ++trial) {
        const Eigen::Index p = 2 + trial % 3;
        GowerInput in;
        in.recipients = random_rows(rng, 4 + trial % 13, p, true);
        in.donors = random_rows(rng, 3 + trial % 29, p, true);
        std::vector<bool> categorical;
        for (Eigen::Index k = 0; k < p; ++k) {
            const bool cat = k % 2 == 0;
            categorical.push_back(cat);
            in.categorical.push_back(cat ? 1 : 0);
            const double hi = std::max(in.recipients.col(k).maxCoeff(), in.donors.col(k).maxCoeff());
            const double lo = std::min(in.recipients.col(k).minCoeff(), in.donors.col(k).minCoeff());
            in.range.push_back(cat ? 0.0 : hi - lo);
        }
        const std::uint64_t seed = 77 + static_cast<std::uint64_t>(trial);
        const auto serial = gower_serial(in, 1e-12, seed);
        const auto parallel = gower_parallel(in, 1e-12, seed);
        CHECK(serial.donor == parallel.donor);
        CHECK(serial.distance == parallel.distance);

        const auto ref = oracle::brute_force(oracle::gower_matrix(in.recipients, in.donors, categorical), 1e-12, seed);
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(serial.donor[i] == ref[i].donor);
    }
}

TEST_CASE("ties are drawn uniformly") {
    // Every donor is equidistant, so each pick is a pure tie draw.
    RowMatrix rec = RowMatrix::Zero(4000, 1);
    RowMatrix don = RowMatrix::Zero(4, 1);
    const auto out = mahalanobis_serial(rec, don, Eigen::MatrixXd::Identity(1, 1), 0.0, 9);
    std::array<int, 4> count{};
    for (auto d : out.donor) ++count[d];
    for (int c : count) CHECK(std::abs(c - 1000) < 150);
    CHECK(out.ties[0] == 4);
}

TEST_CASE("kernel input checks") {
    RowMatrix a = RowMatrix::Zero(2, 2), b = RowMatrix::Zero(0, 2), c = RowMatrix::Zero(3, 1);
    CHECK_THROWS_AS(mahalanobis_serial(a, b, Eigen::MatrixXd::Identity(2, 2), 0.0, 1), Error);
    CHECK_THROWS_AS(mahalanobis_serial(a, c, Eigen::MatrixXd::Identity(2, 2), 0.0, 1), Error);
    CHECK_THROWS_AS(mahalanobis_parallel(a, a, Eigen::MatrixXd::Identity(3, 3), 0.0, 1), Error);
}
