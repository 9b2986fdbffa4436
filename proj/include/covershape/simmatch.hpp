#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace covershape {

using BitMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Mutual fraction-kappa nearest-neighbor mask over a cross-similarity
/// matrix. bits(i,j) = 1 iff entry (i,j) ranks within the smallest
/// max(1, round(kappa*M)) of row i and max(1, round(kappa*N)) of column j.
struct BinaryCsm {
    BitMatrix bits;
    double kappa = 0.0;
};

/// Cross-similarity matrix: entry (i,j) is the Frobenius norm of
/// ssms_a[i] - ssms_b[j]. Swapping the arguments transposes the result
/// exactly.
Eigen::MatrixXd compute_csm(const std::vector<Eigen::MatrixXd>& ssms_a,
                            const std::vector<Eigen::MatrixXd>& ssms_b);

/// Rank-based binarization; ties rank by smaller index so the result is
/// deterministic and transpose-dual.
BinaryCsm binarize_mutual_knn(const Eigen::MatrixXd& csm, double kappa);

}  // namespace covershape
