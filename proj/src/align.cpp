#include "covershape/align.hpp"

#include <algorithm>
#include <stdexcept>

namespace covershape {

AlignmentResult smith_waterman_constrained(const BinaryCsm& csm, bool want_path,
                                           Eigen::MatrixXd* table) {
    const BitMatrix& bits = csm.bits;
    const Eigen::Index n = bits.rows();
    const Eigen::Index m = bits.cols();
    if (n == 0 || m == 0) throw std::invalid_argument("empty matrix");

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + 1, m + 1);
    Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> moves;
    if (want_path) moves = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n + 1, m + 1);

    const auto bit = [&](Eigen::Index i, Eigen::Index j) -> int {
        return (i >= 0 && j >= 0 && i < n && j < m) ? int(bits(i, j)) : 0;
    };
    const auto dval = [&](Eigen::Index i, Eigen::Index j) -> double {
        return (i >= 0 && j >= 0) ? d(i, j) : 0.0;
    };

    AlignmentResult res;
    for (Eigen::Index i = 1; i <= n; ++i) {
        for (Eigen::Index j = 1; j <= m; ++j) {
            const int b = bit(i - 1, j - 1);
            const double match = b ? 1.0 : -1.0;
            const auto gap = [b](int a) { return b ? 0.0 : (a ? -0.5 : -0.7); };

            const double c1 = dval(i - 1, j - 1) + match + gap(bit(i - 2, j - 2));
            const double c2 = dval(i - 2, j - 1) + match + gap(bit(i - 3, j - 2));
            const double c3 = dval(i - 1, j - 2) + match + gap(bit(i - 2, j - 3));

            double best = 0.0;
            int move = 0;
            if (c1 > best) { best = c1; move = 1; }
            if (c2 > best) { best = c2; move = 2; }
            if (c3 > best) { best = c3; move = 3; }
            d(i, j) = best;
            if (want_path) moves(i, j) = std::int8_t(move);
            if (best > res.score) {
                res.score = best;
                res.best_i = i;
                res.best_j = j;
            }
        }
    }

    if (want_path && res.score > 0.0) {
        Eigen::Index i = res.best_i, j = res.best_j;
        while (i >= 1 && j >= 1 && d(i, j) > 0.0) {
            res.path.emplace_back(i, j);
            const int move = moves(i, j);
            if (move == 1) { i -= 1; j -= 1; }
            else if (move == 2) { i -= 2; j -= 1; }
            else { i -= 1; j -= 2; }
        }
        std::reverse(res.path.begin(), res.path.end());
    }
    if (table) *table = std::move(d);
    return res;
}

}  // namespace covershape
