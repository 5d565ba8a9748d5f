#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "fusion/error.hpp"
#include "fusion/evaluation.hpp"

using namespace fusion;

TEST_CASE("pearson_corr") {
    const std::vector<double> a{1, 2, 3, 4.5};
    std::vector<double> neg;
    for (double v : a) neg.push_back(-v);
    CHECK(pearson_corr(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pearson_corr(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));

    const std::vector<double> x{1, 2, 3}, y{2, 4, 7};
    CHECK(std::abs(pearson_corr(x, y) - oracle::pearson(x, y)) < 1e-12);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> u(30), v(30), w(30);
        for (std::size_t i = 0; i < 30; ++i) {
            u[i] = g(rng);
            v[i] = u[i] + g(rng);
            w[i] = 2.0 * u[i] + 3.0;
        }
        CHECK(pearson_corr(u, v) == doctest::Approx(pearson_corr(v, u)).epsilon(1e-14));
        CHECK(std::abs(pearson_corr(w, v) - pearson_corr(u, v)) < 1e-12);
        CHECK(std::abs(pearson_corr(u, v) - oracle::pearson(u, v)) < 1e-12);
    }
    CHECK_THROWS_AS(pearson_corr(std::vector<double>{1, 1}, std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(pearson_corr(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
}

namespace {

DataTable gaussian_table(std::size_t n, const Eigen::Matrix3d& sigma, std::uint64_t seed) {
    // Columns Y, X, Z.
    const Eigen::Matrix3d l = sigma.llt().matrixL();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> y(n), x(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d v = l * Eigen::Vector3d(g(rng), g(rng), g(rng));
        y[i] = v[0];
        x[i] = v[1];
        z[i] = v[2];
    }
    DataTable t(n);
    t.add_column({"Y", ScaleLevel::metric(), y});
    t.add_column({"X", ScaleLevel::metric(), x});
    t.add_column({"Z", ScaleLevel::metric(), z});
    return t;
}

}  // namespace

TEST_CASE("cia_corr") {
    SUBCASE("analytic Gaussian value") {
        Eigen::Matrix3d sigma;
        sigma << 4.0, 1.2, 0.5, 1.2, 1.0, -0.6, 0.5, -0.6, 2.25;
        const auto t = gaussian_table(20000, sigma, 7);
        const double analytic = sigma(0, 1) / sigma(1, 1) * sigma(1, 2) / std::sqrt(sigma(0, 0) * sigma(2, 2));
        CHECK(std::abs(cia_corr(t, "Y", "Z", {"X"}) - analytic) < 0.02);
    }
    SUBCASE("perfect fit limit") {
        DataTable t(50);
        std::vector<double> x(50), y(50);
        for (std::size_t i = 0; i < 50; ++i) {
            x[i] = std::sin(static_cast<double>(i));
            y[i] = 3.0 * x[i] - 1.0;
        }
        t.add_column({"X", ScaleLevel::metric(), x});
        t.add_column({"Y", ScaleLevel::metric(), y});
        t.add_column({"Z", ScaleLevel::metric(), y});
        CHECK(cia_corr(t, "Y", "Z", {"X"}) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("no common signal") {
        const auto t = gaussian_table(20000, Eigen::Matrix3d::Identity(), 8);
        CHECK(std::abs(cia_corr(t, "Y", "Z", {"X"})) < 0.01);
    }
    SUBCASE("bounded and invariant to rescaling x") {
        Eigen::Matrix3d sigma;
        sigma << 1.0, 0.7, 0.3, 0.7, 1.0, 0.5, 0.3, 0.5, 1.0;
        const auto t = gaussian_table(500, sigma, 9);
        auto x = t.column("X");
        for (auto& v : x.values) v = 40.0 * v + 7.0;
        const double a = cia_corr(t, "Y", "Z", {"X"});
        CHECK(a >= -1.0);
        CHECK(a <= 1.0);
        CHECK(std::abs(cia_corr(t.with_column(x), "Y", "Z", {"X"}) - a) < 1e-10);
    }
}

TEST_CASE("summarize") {
    const auto same = summarize(std::vector<double>(5, 0.4), 0.4);
    CHECK(same.bias == doctest::Approx(0.0));
    CHECK(same.mse == doctest::Approx(0.0));

    const double t = 0.6, d = 0.1;
    const auto pair = summarize(std::vector<double>{t - d, t + d}, t);
    CHECK(std::abs(pair.bias) < 1e-15);
    CHECK(pair.mse == doctest::Approx(d * d).epsilon(1e-12));

    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.5, 0.2);
    std::vector<double> est(1000);
    for (auto& e : est) e = g(rng);
    const auto s = summarize(est, 0.55);
    double mse = 0.0;
    for (double e : est) mse += (e - 0.55) * (e - 0.55);
    mse /= 1000.0;
    CHECK(std::abs(s.mse - mse) < 1e-12);
    CHECK(s.mse >= s.bias * s.bias);
    CHECK(std::abs(s.mse - (s.bias * s.bias + s.variance)) < 1e-12);
    CHECK(s.count == 1000);

    // Inclusive quantiles: h = (n - 1) p with linear interpolation.
    const auto q = summarize(std::vector<double>{4, 1, 3, 2}, 0.0).quantiles;
    CHECK(q.min == 1.0);
    CHECK(q.q25 == doctest::Approx(1.75));
    CHECK(q.median == doctest::Approx(2.5));
    CHECK(q.q75 == doctest::Approx(3.25));
    CHECK(q.max == 4.0);
    CHECK_THROWS_AS(summarize(std::vector<double>{}, 0.0), Error);
}
