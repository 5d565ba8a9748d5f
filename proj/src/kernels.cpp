#include "fusion/kernels.hpp"

#include <cmath>
#include <limits>

#include "fusion/error.hpp"
#include "fusion/rng.hpp"

namespace fusion::kernels {

namespace {

struct MahalanobisPair {
    const RowMatrix& rec;
    const RowMatrix& don;
    const Eigen::MatrixXd& w;
    mutable std::vector<double> diff;

    double operator()(Eigen::Index i, Eigen::Index j) const {
        const auto m = rec.cols();
        const double* a = rec.data() + i * m;
        const double* b = don.data() + j * m;
        for (Eigen::Index k = 0; k < m; ++k) diff[static_cast<std::size_t>(k)] = a[k] - b[k];
        double d = 0.0;
        for (Eigen::Index r = 0; r < m; ++r) {
            double row = 0.0;
            for (Eigen::Index c = 0; c < m; ++c) row += w(r, c) * diff[static_cast<std::size_t>(c)];
            d += diff[static_cast<std::size_t>(r)] * row;
        }
        return d;
    }
};

struct GowerPair {
    const GowerInput& in;

    double operator()(Eigen::Index i, Eigen::Index j) const {
        const auto p = in.recipients.cols();
        const double* a = in.recipients.data() + i * p;
        const double* b = in.donors.data() + j * p;
        double sum = 0.0;
        for (Eigen::Index k = 0; k < p; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            if (in.categorical[ku]) {
                sum += a[k] != b[k] ? 1.0 : 0.0;
            } else if (in.range[ku] > 0.0) {
                sum += std::abs(a[k] - b[k]) / in.range[ku];
            }
        }
        return sum / static_cast<double>(p);
    }
};

// Scores every donor for recipient i, then draws among the tie set.
template <class Pair>
void scan(Eigen::Index i, Eigen::Index n_don, const Pair& pair, std::vector<double>& buffer, double eps,
          std::uint64_t seed, Nearest& out) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n_don; ++j) {
        const double d = pair(i, j);
        buffer[static_cast<std::size_t>(j)] = d;
        if (d < best) best = d;
    }
    std::size_t n_ties = 0;
    for (Eigen::Index j = 0; j < n_don; ++j) {
        if (buffer[static_cast<std::size_t>(j)] <= best + eps) ++n_ties;
    }
    std::size_t pick = tie_break(seed, static_cast<std::size_t>(i), n_ties);
    for (Eigen::Index j = 0; j < n_don; ++j) {
        if (buffer[static_cast<std::size_t>(j)] <= best + eps) {
            if (pick == 0) {
                const auto iu = static_cast<std::size_t>(i);
                out.donor[iu] = static_cast<std::size_t>(j);
                out.distance[iu] = buffer[static_cast<std::size_t>(j)];
                out.ties[iu] = n_ties;
                return;
            }
            --pick;
        }
    }
}

Nearest make_result(Eigen::Index n_rec) {
    const auto n = static_cast<std::size_t>(n_rec);
    return Nearest{std::vector<std::size_t>(n), std::vector<double>(n), std::vector<std::size_t>(n)};
}

void check_common(Eigen::Index rec_cols, Eigen::Index don_cols, Eigen::Index n_don, double eps) {
    if (rec_cols != don_cols) throw_data("nearest-donor search: recipient and donor dimensions differ");
    if (n_don == 0) throw_data("nearest-donor search: no donors");
    if (!(eps >= 0.0)) throw_data("nearest-donor search: tie epsilon must be non-negative");
}

void check_mahalanobis(const RowMatrix& rec, const RowMatrix& don, const Eigen::MatrixXd& w, double eps) {
    check_common(rec.cols(), don.cols(), don.rows(), eps);
    if (w.rows() != rec.cols() || w.cols() != rec.cols()) throw_data("mahalanobis: weight matrix has the wrong size");
}

void check_gower(const GowerInput& in, double eps) {
    check_common(in.recipients.cols(), in.donors.cols(), in.donors.rows(), eps);
    const auto p = static_cast<std::size_t>(in.recipients.cols());
    if (p == 0) throw_data("gower: no variables");
    if (in.categorical.size() != p || in.range.size() != p) throw_data("gower: per-variable metadata has the wrong size");
}

}  // namespace

Nearest mahalanobis_serial(const RowMatrix& recipients, const RowMatrix& donors, const Eigen::MatrixXd& weight,
                           double tie_epsilon, std::uint64_t seed) {
    check_mahalanobis(recipients, donors, weight, tie_epsilon);
    Nearest out = make_result(recipients.rows());
    MahalanobisPair pair{recipients, donors, weight, std::vector<double>(static_cast<std::size_t>(recipients.cols()))};
    std::vector<double> buffer(static_cast<std::size_t>(donors.rows()));
    for (Eigen::Index i = 0; i < recipients.rows(); ++i) {
        scan(i, donors.rows(), pair, buffer, tie_epsilon, seed, out);
    }
    return out;
}

Nearest mahalanobis_parallel(const RowMatrix& recipients, const RowMatrix& donors, const Eigen::MatrixXd& weight,
                             double tie_epsilon, std::uint64_t seed) {
    check_mahalanobis(recipients, donors, weight, tie_epsilon);
    Nearest out = make_result(recipients.rows());
    const Eigen::Index n_rec = recipients.rows();
#pragma omp parallel
    {
        MahalanobisPair pair{recipients, donors, weight, std::vector<double>(static_cast<std::size_t>(recipients.cols()))};
        std::vector<double> buffer(static_cast<std::size_t>(donors.rows()));
#pragma omp for schedule(static)
        for (Eigen::Index i = 0; i < n_rec; ++i) {
            scan(i, donors.rows(), pair, buffer, tie_epsilon, seed, out);
        }
    }
    return out;
}

Nearest gower_serial(const GowerInput& input, double tie_epsilon, std::uint64_t seed) {
    check_gower(input, tie_epsilon);
    Nearest out = make_result(input.recipients.rows());
    GowerPair pair{input};
    std::vector<double> buffer(static_cast<std::size_t>(input.donors.rows()));
    for (Eigen::Index i = 0; i < input.recipients.rows(); ++i) {
        scan(i, input.donors.rows(), pair, buffer, tie_epsilon, seed, out);
    }
    return out;
}

Nearest gower_parallel(const GowerInput& input, double tie_epsilon, std::uint64_t seed) {
    check_gower(input, tie_epsilon);
    Nearest out = make_result(input.recipients.rows());
    const Eigen::Index n_rec = input.recipients.rows();
#pragma omp parallel
    {
        GowerPair pair{input};
        std::vector<double> buffer(static_cast<std::size_t>(input.donors.rows()));
#pragma omp for schedule(static)
        for (Eigen::Index i = 0; i < n_rec; ++i) {
            scan(i, input.donors.rows(), pair, buffer, tie_epsilon, seed, out);
        }
    }
    return out;
}

}  // namespace fusion::kernels
