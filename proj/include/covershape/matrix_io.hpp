#pragma once

#include <Eigen/Dense>
#include <string>

namespace covershape {

/// Comma-separated values, full double precision, one row per line.
void save_csv(const std::string& path, const Eigen::MatrixXd& m);

/// Binary 8-bit PGM; values are mapped linearly from [lo, hi] to
/// [0, 255] and clamped.
void save_pgm(const std::string& path, const Eigen::MatrixXd& m, double lo, double hi);

}  // namespace covershape
