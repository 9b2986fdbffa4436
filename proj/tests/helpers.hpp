#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "covershape/embed.hpp"

namespace testutil {

inline std::filesystem::path fresh_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("covershape-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline covershape::TimeOrderedPointCloud random_cloud(std::mt19937& rng, int k, int dims) {
    std::normal_distribution<double> gauss;
    covershape::TimeOrderedPointCloud cloud;
    cloud.points.resize(k, dims);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < dims; ++j) cloud.points(i, j) = gauss(rng);
    cloud.intervals.reserve(size_t(k));
    for (int i = 0; i < k; ++i) cloud.intervals.emplace_back(i * 100, i * 100 + 400);
    return cloud;
}

inline Eigen::MatrixXd random_orthogonal(std::mt19937& rng, int n) {
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = gauss(rng);
    return Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
}

}  // namespace testutil
