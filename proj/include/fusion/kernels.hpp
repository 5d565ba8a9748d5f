#pragma once

// Nearest-donor search kernels. Each kernel has a plain serial reference
// and an OpenMP version; both evaluate the same per-pair arithmetic in the
// same order and apply the same tie-break protocol, so their outputs are
// bit-identical.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace fusion::kernels {

/// Rows are observations.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Nearest {
    std::vector<std::size_t> donor;     ///< chosen donor per recipient (donor-block index)
    std::vector<double> distance;       ///< its distance
    std::vector<std::size_t> ties;      ///< size of the tie set it was drawn from
};

/// Donors within `tie_epsilon` of the minimum are tied; the choice among
/// them is fusion::tie_break(seed, recipient, n_ties) over donor order.

/// D_ij = (r_i - d_j)' W (r_i - d_j).
Nearest mahalanobis_serial(const RowMatrix& recipients, const RowMatrix& donors, const Eigen::MatrixXd& weight,
                           double tie_epsilon, std::uint64_t seed);
Nearest mahalanobis_parallel(const RowMatrix& recipients, const RowMatrix& donors, const Eigen::MatrixXd& weight,
                             double tie_epsilon, std::uint64_t seed);

struct GowerInput {
    RowMatrix recipients;            ///< n_rec x p
    RowMatrix donors;                ///< n_don x p
    std::vector<char> categorical;   ///< per variable
    std::vector<double> range;       ///< per metric variable; 0 means "contributes nothing"
};

/// Mean over variables of: categorical mismatch indicator, or
/// |a - b| / range for metric variables.
Nearest gower_serial(const GowerInput& input, double tie_epsilon, std::uint64_t seed);
Nearest gower_parallel(const GowerInput& input, double tie_epsilon, std::uint64_t seed);

}  // namespace fusion::kernels
