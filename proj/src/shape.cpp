#include "covershape/shape.hpp"

#include <algorithm>
#include <cmath>

#include "covershape/errors.hpp"

namespace covershape {

namespace {

struct ResizeAxis {
    std::vector<Eigen::Index> lo, hi;
    std::vector<double> frac;
};

ResizeAxis make_axis(Eigen::Index src, Eigen::Index dst) {
    ResizeAxis axis;
    axis.lo.resize(size_t(dst));
    axis.hi.resize(size_t(dst));
    axis.frac.resize(size_t(dst));
    for (Eigen::Index r = 0; r < dst; ++r) {
        const double y = double(r) * double(src - 1) / double(dst - 1);
        const auto y0 = Eigen::Index(std::floor(y));
        axis.lo[size_t(r)] = y0;
        axis.hi[size_t(r)] = std::min(y0 + 1, src - 1);
        axis.frac[size_t(r)] = y - double(y0);
    }
    return axis;
}

inline double lerp(double a, double b, double f) { return a + f * (b - a); }

// Shared by the naive and fused paths so both produce identical bits.
template <typename Lookup>
Eigen::MatrixXd bilinear_sample(const ResizeAxis& axis, Eigen::Index d, Lookup&& raw) {
    Eigen::MatrixXd out(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        const Eigen::Index y0 = axis.lo[size_t(r)];
        const Eigen::Index y1 = axis.hi[size_t(r)];
        const double fy = axis.frac[size_t(r)];
        for (Eigen::Index c = 0; c < d; ++c) {
            const Eigen::Index x0 = axis.lo[size_t(c)];
            const Eigen::Index x1 = axis.hi[size_t(c)];
            const double a = lerp(raw(y0, x0), raw(y1, x0), fy);
            const double b = lerp(raw(y0, x1), raw(y1, x1), fy);
            out(r, c) = lerp(a, b, axis.frac[size_t(c)]);
        }
    }
    return out;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points,
                                   const std::vector<Eigen::Index>& idx) {
    const auto n = Eigen::Index(idx.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b) {
            const double v =
                (points.row(idx[size_t(a)]) - points.row(idx[size_t(b)])).norm();
            d(a, b) = v;
            d(b, a) = v;
        }
    return d;
}

}  // namespace

TimeOrderedPointCloud normalize_point_cloud(const TimeOrderedPointCloud& cloud,
                                            std::vector<Eigen::Index>* zero_points) {
    const Eigen::Index k = cloud.points.rows();
    if (k < 2) throw std::invalid_argument("need at least 2 points");

    const Eigen::RowVectorXd mean = cloud.points.colwise().mean();
    Eigen::MatrixXd offsets = cloud.points.rowwise() - mean;
    const Eigen::VectorXd norms = offsets.rowwise().norm();

    // Clouds that are constant up to accumulated rounding carry no shape.
    const double scale = cloud.points.cwiseAbs().maxCoeff();
    if (norms.maxCoeff() <= 1e-9 * (1.0 + scale))
        throw DegenerateInput("degenerate block");

    for (Eigen::Index i = 0; i < k; ++i) {
        if (norms[i] == 0.0) {
            if (zero_points) zero_points->push_back(i);
        } else {
            offsets.row(i) /= norms[i];
        }
    }
    TimeOrderedPointCloud out;
    out.points = std::move(offsets);
    out.intervals = cloud.intervals;
    return out;
}

Eigen::MatrixXd compute_ssm(const TimeOrderedPointCloud& cloud) {
    const Eigen::Index k = cloud.points.rows();
    if (k < 2) throw std::invalid_argument("need at least 2 points");
    std::vector<Eigen::Index> all(static_cast<size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) all[size_t(i)] = i;
    return pairwise_distances(cloud.points, all);
}

Eigen::MatrixXd resize_ssm(const Eigen::MatrixXd& raw, int d) {
    if (raw.rows() != raw.cols() || raw.rows() < 2)
        throw std::invalid_argument("need a square matrix of size >= 2");
    if (d < 2) throw std::invalid_argument("resize dimension must be >= 2");
    const ResizeAxis axis = make_axis(raw.rows(), d);
    return bilinear_sample(axis, d, [&raw](Eigen::Index i, Eigen::Index j) {
        return raw(i, j);
    });
}

Eigen::MatrixXd resized_ssm_from_cloud(const TimeOrderedPointCloud& cloud, int d) {
    const Eigen::Index k = cloud.points.rows();
    if (k < 2) throw std::invalid_argument("need at least 2 points");
    if (d < 2) throw std::invalid_argument("resize dimension must be >= 2");
    const ResizeAxis axis = make_axis(k, d);

    // Distinct source indices the bilinear sampling will touch.
    std::vector<Eigen::Index> needed;
    needed.reserve(2 * size_t(d));
    needed.insert(needed.end(), axis.lo.begin(), axis.lo.end());
    needed.insert(needed.end(), axis.hi.begin(), axis.hi.end());
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());

    const Eigen::MatrixXd sub = pairwise_distances(cloud.points, needed);
    std::vector<Eigen::Index> pos(size_t(k), -1);
    for (size_t i = 0; i < needed.size(); ++i) pos[size_t(needed[i])] = Eigen::Index(i);

    return bilinear_sample(axis, d, [&sub, &pos](Eigen::Index i, Eigen::Index j) {
        return sub(pos[size_t(i)], pos[size_t(j)]);
    });
}

std::vector<Eigen::MatrixXd> block_ssms(const std::vector<TimeOrderedPointCloud>& clouds,
                                        int d, std::vector<int>* skipped) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(clouds.size());
    for (size_t i = 0; i < clouds.size(); ++i) {
        try {
            out.push_back(resized_ssm_from_cloud(normalize_point_cloud(clouds[i]), d));
        } catch (const DegenerateInput&) {
            if (skipped) skipped->push_back(int(i));
        }
    }
    return out;
}

}  // namespace covershape
