#include "covershape/matrix_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "covershape/errors.hpp"

namespace covershape {

void save_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open file for writing: " + path);
    char buf[40];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void save_pgm(const std::string& path, const Eigen::MatrixXd& m, double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("need hi > lo");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
    std::vector<unsigned char> row(size_t(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = std::clamp((m(r, c) - lo) / (hi - lo), 0.0, 1.0);
            row[size_t(c)] = (unsigned char)(std::lround(v * 255.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace covershape
