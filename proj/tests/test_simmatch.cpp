#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "covershape/simmatch.hpp"
#include "helpers.hpp"

using namespace covershape;

namespace {

std::vector<Eigen::MatrixXd> random_stack(std::mt19937& rng, int count, int dim) {
    std::normal_distribution<double> gauss;
    std::vector<Eigen::MatrixXd> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        Eigen::MatrixXd m(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) m(i, j) = gauss(rng);
        out.push_back(std::move(m));
    }
    return out;
}

// coarse grid so order and ties survive affine maps exactly
Eigen::MatrixXd coarse_random(std::mt19937& rng, int n, int m) {
    std::uniform_int_distribution<int> pick(0, 4095);
    Eigen::MatrixXd out(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out(i, j) = pick(rng) / 64.0;
    return out;
}

}  // namespace

TEST_CASE("csm equals elementwise Frobenius distances") {
    std::mt19937 rng(21);
    const auto a = random_stack(rng, 5, 9);
    const auto b = random_stack(rng, 7, 9);

    const Eigen::MatrixXd csm = compute_csm(a, b);
    REQUIRE(csm.rows() == 5);
    REQUIRE(csm.cols() == 7);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j) {
            double sq = 0.0;
            for (int r = 0; r < 9; ++r)
                for (int c = 0; c < 9; ++c) {
                    const double d = a[i](r, c) - b[j](r, c);
                    sq += d * d;
                }
            CHECK(std::abs(csm(i, j) - std::sqrt(sq)) < 1e-12);
        }

    // swapping the stacks transposes the matrix bitwise
    const Eigen::MatrixXd flipped = compute_csm(b, a);
    CHECK((flipped.transpose() - csm).cwiseAbs().maxCoeff() == 0.0);

    // a stack against itself has an exactly zero diagonal
    const Eigen::MatrixXd self = compute_csm(a, a);
    CHECK(self.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK((self - self.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("csm input validation") {
    std::mt19937 rng(22);
    const auto a = random_stack(rng, 2, 4);
    auto b = random_stack(rng, 2, 4);
    CHECK_THROWS_WITH_AS(compute_csm({}, b), "empty SSM list", std::invalid_argument);
    CHECK_THROWS_WITH_AS(compute_csm(a, {}), "empty SSM list", std::invalid_argument);
    b.push_back(Eigen::MatrixXd::Zero(5, 5));
    CHECK_THROWS_WITH_AS(compute_csm(a, b), "SSM dimension mismatch", std::invalid_argument);
}

TEST_CASE("binarize small cases") {
    Eigen::MatrixXd csm(2, 2);
    csm << 1.0, 2.0, 3.0, 4.0;

    const BinaryCsm half = binarize_mutual_knn(csm, 0.5);
    CHECK(half.kappa == 0.5);
    REQUIRE(half.bits.rows() == 2);
    REQUIRE(half.bits.cols() == 2);
    CHECK(half.bits(0, 0) == 1);
    CHECK(half.bits(0, 1) == 0);
    CHECK(half.bits(1, 0) == 0);
    CHECK(half.bits(1, 1) == 0);

    const BinaryCsm full = binarize_mutual_knn(csm, 1.0);
    CHECK(int(full.bits.minCoeff()) == 1);

    // ties settle on the smaller index
    const BinaryCsm tied = binarize_mutual_knn(Eigen::MatrixXd::Constant(3, 3, 2.0), 0.1);
    CHECK(tied.bits(0, 0) == 1);
    CHECK(int(tied.bits.cast<int>().sum()) == 1);
}

TEST_CASE("binarize invariants on random matrices") {
    std::mt19937 rng(23);
    std::uniform_int_distribution<int> dim(1, 40);

    for (int trial = 0; trial < 60; ++trial) {
        const int n = dim(rng);
        const int m = dim(rng);
        const Eigen::MatrixXd csm = coarse_random(rng, n, m);

        const double kappas[] = {0.05, 0.1, 0.3, 0.7, 1.0};
        BitMatrix prev;
        for (const double kappa : kappas) {
            const BinaryCsm bin = binarize_mutual_knn(csm, kappa);

            // row and column budgets
            const long r_row = std::max<long>(1, std::llround(kappa * m));
            const long r_col = std::max<long>(1, std::llround(kappa * n));
            for (int i = 0; i < n; ++i)
                CHECK(long(bin.bits.row(i).cast<int>().sum()) <= r_row);
            for (int j = 0; j < m; ++j)
                CHECK(long(bin.bits.col(j).cast<int>().sum()) <= r_col);

            // growing kappa only adds ones
            if (prev.size() > 0)
                CHECK(((prev.cast<int>() - bin.bits.cast<int>()).array() <= 0).all());
            prev = bin.bits;

            // transpose duality
            const BinaryCsm dual = binarize_mutual_knn(csm.transpose(), kappa);
            CHECK((dual.bits.transpose().array() == bin.bits.array()).all());

            // rank-only: shifts and positive scales change nothing
            const BinaryCsm shifted = binarize_mutual_knn((csm.array() + 3.7).matrix(), kappa);
            CHECK((shifted.bits.array() == bin.bits.array()).all());
            const BinaryCsm scaled = binarize_mutual_knn(csm * 2.0, kappa);
            CHECK((scaled.bits.array() == bin.bits.array()).all());
        }
    }
}

TEST_CASE("binarize input validation") {
    const Eigen::MatrixXd csm = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_WITH_AS(binarize_mutual_knn(csm, 0.0), "kappa must be in (0, 1]",
                         std::invalid_argument);
    CHECK_THROWS_AS(binarize_mutual_knn(csm, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(binarize_mutual_knn(csm, -0.2), std::invalid_argument);
    CHECK_THROWS_WITH_AS(binarize_mutual_knn(Eigen::MatrixXd(), 0.5), "empty matrix",
                         std::invalid_argument);
}
