#include "fusion/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fusion/error.hpp"
#include "fusion/regression.hpp"

namespace fusion {

double pearson_corr(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw_data("pearson_corr: inputs differ in length");
    if (a.size() < 2) throw_data("pearson_corr: need at least two values");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw_data("pearson_corr: constant input");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double cia_corr(const DataTable& population, const std::string& y, const std::string& z,
                const std::vector<std::string>& x) {
    const auto rows = all_rows(population);
    const auto design = dummy_expand(population, rows, x);
    const auto responses = response_matrix(population, rows, {y, z});
    const auto fit = ols_fit(design, responses);

    const double n = static_cast<double>(rows.size());
    const Eigen::VectorXd yc = responses.col(0).array() - responses.col(0).mean();
    const Eigen::VectorXd zc = responses.col(1).array() - responses.col(1).mean();
    const Eigen::VectorXd yh = fit.fitted.col(0).array() - fit.fitted.col(0).mean();
    const Eigen::VectorXd zh = fit.fitted.col(1).array() - fit.fitted.col(1).mean();
    const double sy = std::sqrt(yc.squaredNorm() / n), sz = std::sqrt(zc.squaredNorm() / n);
    if (!(sy > 0.0) || !(sz > 0.0)) throw_data("cia_corr: constant y or z");
    return std::clamp(yh.dot(zh) / n / (sy * sz), -1.0, 1.0);
}

double quantile_inclusive(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw_data("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

EstimateSummary summarize(std::span<const double> estimates, double true_value) {
    if (estimates.empty()) throw_data("summarize: no estimates");
    EstimateSummary s;
    s.count = estimates.size();
    const double n = static_cast<double>(estimates.size());
    for (double e : estimates) s.mean += e;
    s.mean /= n;
    s.bias = s.mean - true_value;
    for (double e : estimates) {
        s.mse += (e - true_value) * (e - true_value);
        s.variance += (e - s.mean) * (e - s.mean);
    }
    s.mse /= n;
    s.variance /= n;
    std::vector<double> sorted(estimates.begin(), estimates.end());
    std::sort(sorted.begin(), sorted.end());
    s.quantiles = {sorted.front(), quantile_inclusive(sorted, 0.25), quantile_inclusive(sorted, 0.5),
                   quantile_inclusive(sorted, 0.75), sorted.back()};
    return s;
}

}  // namespace fusion
