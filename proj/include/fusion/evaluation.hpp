#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fusion/data_model.hpp"

namespace fusion {

/// Sample Pearson correlation. Throws on unequal lengths, fewer than two
/// values, or a constant input.
double pearson_corr(std::span<const double> a, std::span<const double> b);

/// Correlation of y and z implied by conditional independence given x:
/// Cov(y_hat, z_hat) / (sd(y) sd(z)), where y_hat and z_hat are OLS fits
/// on the dummy-expanded x over the whole table. Throws on degenerate
/// regressions.
double cia_corr(const DataTable& population, const std::string& y, const std::string& z,
                const std::vector<std::string>& x);

struct CorrelationTarget {
    std::string a;
    std::string b;
    double true_value = 0.0;
    std::optional<double> cia_value;
};

struct Quantiles {
    double min = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double max = 0.0;
};

struct EstimateSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double bias = 0.0;      ///< mean - true value
    double mse = 0.0;       ///< mean squared deviation from the true value
    double variance = 0.0;  ///< divisor n, so mse == bias^2 + variance
    Quantiles quantiles;
};

/// Linear-interpolation quantile on sorted data (the "inclusive" method).
double quantile_inclusive(std::span<const double> sorted, double p);

EstimateSummary summarize(std::span<const double> estimates, double true_value);

}  // namespace fusion
