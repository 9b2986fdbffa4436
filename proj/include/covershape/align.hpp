#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "covershape/simmatch.hpp"

namespace covershape {

/// Result of the constrained local alignment. best_cell indexes the
/// (N+1) x (M+1) score table; cell (i, j) scores the match at bit
/// (i-1, j-1). path, when requested, lists table cells from the start of
/// the winning run to best_cell.
struct AlignmentResult {
    double score = 0.0;
    Eigen::Index best_i = 0;
    Eigen::Index best_j = 0;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> path;
};

/// Smith-Waterman restricted to the moves (i-1,j-1), (i-2,j-1) and
/// (i-1,j-2), with +1 for a match, -1 for a mismatch and the gap term
/// 0 / -0.5 / -0.7 depending on the previous and current bits. The score
/// is the maximum table entry. table, when given, receives the full
/// (N+1) x (M+1) score table.
AlignmentResult smith_waterman_constrained(const BinaryCsm& csm, bool want_path = false,
                                           Eigen::MatrixXd* table = nullptr);

/// Optional length normalization; raw scores are used by default.
inline double length_normalized_score(double score, Eigen::Index n, Eigen::Index m) {
    return score / std::sqrt(double(n) * double(m));
}

}  // namespace covershape
