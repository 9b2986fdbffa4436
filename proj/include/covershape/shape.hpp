#pragma once

#include <Eigen/Dense>
#include <vector>

#include "covershape/embed.hpp"

namespace covershape {

/// Centers the cloud on its mean and scales every point to unit norm.
/// A point exactly at the mean becomes the zero vector; its index is
/// appended to zero_points when given. Throws DegenerateInput when the
/// whole cloud has no spread.
TimeOrderedPointCloud normalize_point_cloud(const TimeOrderedPointCloud& cloud,
                                            std::vector<Eigen::Index>* zero_points = nullptr);

/// Self-similarity matrix: pairwise Euclidean distances, ordered by time.
/// Exactly symmetric with an exactly zero diagonal.
Eigen::MatrixXd compute_ssm(const TimeOrderedPointCloud& cloud);

/// Bilinear resize of a square matrix to d x d, align-corners sampling.
Eigen::MatrixXd resize_ssm(const Eigen::MatrixXd& raw, int d);

/// resize_ssm(compute_ssm(cloud), d) without materializing the K x K
/// matrix; only the distance rows the resize samples are evaluated.
/// Bitwise identical to the two-step form.
Eigen::MatrixXd resized_ssm_from_cloud(const TimeOrderedPointCloud& cloud, int d);

/// normalize -> SSM -> resize for every cloud. Degenerate clouds are
/// skipped, their indices recorded in order.
std::vector<Eigen::MatrixXd> block_ssms(const std::vector<TimeOrderedPointCloud>& clouds,
                                        int d, std::vector<int>* skipped = nullptr);

}  // namespace covershape
