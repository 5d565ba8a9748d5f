#pragma once

// Independent reference computations for the tests. Nothing here calls
// into the library's numerical code; only plain data types are shared.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fusion/data_model.hpp"
#include "fusion/rng.hpp"

namespace oracle {

using fusion::DataTable;

struct Design {
    Eigen::MatrixXd x;
    int rank = 0;
};

// Intercept, metric columns, and one dummy per observed non-reference level.
inline Design build_design(const DataTable& t, const std::vector<std::size_t>& rows,
                           const std::vector<std::string>& vars) {
    std::vector<Eigen::VectorXd> cols;
    const auto n = static_cast<Eigen::Index>(rows.size());
    cols.push_back(Eigen::VectorXd::Ones(n));
    for (const auto& v : vars) {
        const auto& c = t.column(v);
        if (c.scale.is_metric()) {
            Eigen::VectorXd col(n);
            for (Eigen::Index i = 0; i < n; ++i) col[i] = c.values[rows[static_cast<std::size_t>(i)]];
            cols.push_back(col);
        } else {
            const auto& levels = c.scale.levels();
            for (std::size_t l = 1; l < levels.size(); ++l) {
                Eigen::VectorXd col(n);
                bool any = false;
                for (Eigen::Index i = 0; i < n; ++i) {
                    col[i] = c.values[rows[static_cast<std::size_t>(i)]] == levels[l] ? 1.0 : 0.0;
                    any = any || col[i] != 0.0;
                }
                if (any) cols.push_back(col);
            }
        }
    }
    Design d;
    d.x.resize(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) d.x.col(static_cast<Eigen::Index>(k)) = cols[k];
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.x);
    qr.setThreshold(1e-9);
    d.rank = static_cast<int>(qr.rank());
    return d;
}

// Least squares by column-pivoted QR.
inline Eigen::MatrixXd qr_solve(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return x.colPivHouseholderQr().solve(y);
}

inline double rss_of(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd r = y - x * qr_solve(x, y);
    return r.squaredNorm();
}

inline double bic(double rss, std::size_t n, int q) {
    const double dn = static_cast<double>(n);
    return dn * std::log(rss / dn) + q * std::log(dn);
}

// Exhaustive best-subset search over all 2^p subsets. Ties go to the
// smaller subset.
inline std::vector<std::string> best_subset_bic(const DataTable& t, const std::vector<std::size_t>& rows,
                                                const std::string& response,
                                                const std::vector<std::string>& candidates) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) y[static_cast<Eigen::Index>(i)] = t.column(response).values[rows[i]];
    const std::size_t p = candidates.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_size = 0;
    std::vector<std::string> best_set;
    for (std::uint32_t mask = 0; mask < (1u << p); ++mask) {
        std::vector<std::string> set;
        for (std::size_t k = 0; k < p; ++k) {
            if (mask & (1u << k)) set.push_back(candidates[k]);
        }
        const auto d = build_design(t, rows, set);
        const double score = bic(rss_of(d.x, y), rows.size(), d.rank);
        if (score < best - 1e-9 || (std::abs(score - best) <= 1e-9 && set.size() < best_size)) {
            best = score;
            best_size = set.size();
            best_set = set;
        }
    }
    return best_set;
}

struct Match {
    std::size_t donor = 0;
    double distance = 0.0;
};

// Full distance matrix, then the library's documented tie protocol: the
// tie set (d <= min + eps) in donor order, one index drawn from
// mt19937_64 seeded with derive_seed(seed, recipient).
inline std::vector<Match> brute_force(const Eigen::MatrixXd& dist, double eps, std::uint64_t seed) {
    std::vector<Match> out;
    for (Eigen::Index i = 0; i < dist.rows(); ++i) {
        const double best = dist.row(i).minCoeff();
        std::vector<std::size_t> ties;
        for (Eigen::Index j = 0; j < dist.cols(); ++j) {
            if (dist(i, j) <= best + eps) ties.push_back(static_cast<std::size_t>(j));
        }
        if (ties.empty()) throw std::runtime_error("brute_force: distance row without a finite minimum");
        std::size_t pick = 0;
        if (ties.size() > 1) {
            std::mt19937_64 rng(fusion::derive_seed(seed, static_cast<std::uint64_t>(i)));
            pick = std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng);
        }
        out.push_back({ties[pick], dist(i, static_cast<Eigen::Index>(ties[pick]))});
    }
    return out;
}

inline Eigen::MatrixXd mahalanobis_matrix(const Eigen::MatrixXd& rec, const Eigen::MatrixXd& don,
                                          const Eigen::MatrixXd& w) {
    Eigen::MatrixXd d(rec.rows(), don.rows());
    for (Eigen::Index i = 0; i < rec.rows(); ++i) {
        for (Eigen::Index j = 0; j < don.rows(); ++j) {
            const Eigen::VectorXd diff = (rec.row(i) - don.row(j)).transpose();
            d(i, j) = diff.dot(w * diff);
        }
    }
    return d;
}

// Gower dissimilarity straight from the definition.
inline Eigen::MatrixXd gower_matrix(const Eigen::MatrixXd& rec, const Eigen::MatrixXd& don,
                                    const std::vector<bool>& categorical) {
    const auto p = rec.cols();
    std::vector<double> range(static_cast<std::size_t>(p));
    for (Eigen::Index k = 0; k < p; ++k) {
        const double hi = std::max(rec.col(k).maxCoeff(), don.col(k).maxCoeff());
        const double lo = std::min(rec.col(k).minCoeff(), don.col(k).minCoeff());
        range[static_cast<std::size_t>(k)] = hi - lo;
    }
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rec.rows(), don.rows());
    for (Eigen::Index i = 0; i < rec.rows(); ++i) {
        for (Eigen::Index j = 0; j < don.rows(); ++j) {
            double s = 0.0;
            for (Eigen::Index k = 0; k < p; ++k) {
                const auto ku = static_cast<std::size_t>(k);
                if (categorical[ku]) {
                    s += rec(i, k) == don(j, k) ? 0.0 : 1.0;
                } else if (range[ku] > 0.0) {
                    s += std::abs(rec(i, k) - don(j, k)) / range[ku];
                }
            }
            d(i, j) = s / static_cast<double>(p);
        }
    }
    return d;
}

// Inverse standard normal CDF by bisection on erfc.
inline double normal_quantile(double p) {
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
        (cdf < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Bin = 1 + floor(k * m / n) where m is the minimum 0-based sorted position
// among equal values.
inline std::vector<int> rank_quantile_bins(const std::vector<double>& v, std::size_t k) {
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> out;
    for (double x : v) {
        const auto m = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
        out.push_back(1 + static_cast<int>((k * m) / v.size()));
    }
    return out;
}

inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<double> grid = a;
    grid.insert(grid.end(), b.begin(), b.end());
    double d = 0.0;
    for (double x : grid) {
        const double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / a.size();
        const double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
        saa += a[i] * a[i];
        sbb += b[i] * b[i];
        sab += a[i] * b[i];
    }
    return (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
}

}  // namespace oracle
