#include "covershape/simmatch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace covershape {

Eigen::MatrixXd compute_csm(const std::vector<Eigen::MatrixXd>& ssms_a,
                            const std::vector<Eigen::MatrixXd>& ssms_b) {
    if (ssms_a.empty() || ssms_b.empty()) throw std::invalid_argument("empty SSM list");
    const Eigen::Index d = ssms_a.front().rows();
    for (const auto* list : {&ssms_a, &ssms_b})
        for (const auto& s : *list)
            if (s.rows() != d || s.cols() != d)
                throw std::invalid_argument("SSM dimension mismatch");

    Eigen::MatrixXd csm(Eigen::Index(ssms_a.size()), Eigen::Index(ssms_b.size()));
    for (Eigen::Index i = 0; i < csm.rows(); ++i)
        for (Eigen::Index j = 0; j < csm.cols(); ++j)
            csm(i, j) = (ssms_a[size_t(i)] - ssms_b[size_t(j)]).norm();
    return csm;
}

namespace {

// Marks, per line (row or column), the r entries that rank smallest by
// (value, index).
void mark_smallest(const Eigen::MatrixXd& csm, Eigen::Index r, bool rows, BitMatrix* pass) {
    const Eigen::Index lines = rows ? csm.rows() : csm.cols();
    const Eigen::Index len = rows ? csm.cols() : csm.rows();
    std::vector<Eigen::Index> order(static_cast<size_t>(len));
    for (Eigen::Index l = 0; l < lines; ++l) {
        std::iota(order.begin(), order.end(), Eigen::Index(0));
        const auto value = [&](Eigen::Index i) { return rows ? csm(l, i) : csm(i, l); };
        std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            const double va = value(a), vb = value(b);
            return va < vb || (va == vb && a < b);
        });
        for (Eigen::Index k = 0; k < std::min(r, len); ++k) {
            const Eigen::Index i = order[size_t(k)];
            if (rows) (*pass)(l, i) = 1;
            else (*pass)(i, l) = 1;
        }
    }
}

}  // namespace

BinaryCsm binarize_mutual_knn(const Eigen::MatrixXd& csm, double kappa) {
    if (!(kappa > 0.0 && kappa <= 1.0))
        throw std::invalid_argument("kappa must be in (0, 1]");
    const Eigen::Index n = csm.rows();
    const Eigen::Index m = csm.cols();
    if (n == 0 || m == 0) throw std::invalid_argument("empty matrix");

    const auto row_r = std::max<Eigen::Index>(1, Eigen::Index(std::llround(kappa * double(m))));
    const auto col_r = std::max<Eigen::Index>(1, Eigen::Index(std::llround(kappa * double(n))));

    BinaryCsm out;
    out.kappa = kappa;
    BitMatrix row_pass = BitMatrix::Zero(n, m);
    BitMatrix col_pass = BitMatrix::Zero(n, m);
    mark_smallest(csm, row_r, true, &row_pass);
    mark_smallest(csm, col_r, false, &col_pass);
    out.bits = row_pass.cwiseProduct(col_pass);
    return out;
}

}  // namespace covershape
