#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "glu/graph.hpp"
#include "glu/sensing.hpp"

namespace testing {

using glu::Matrix;
using glu::Vector;

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double v : row) {
            m(r, c++) = v;
        }
        ++r;
    }
    return m;
}

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) {
        out(k++) = x;
    }
    return out;
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
    const double d = (a - b).norm();
    const double s = std::max(a.norm(), b.norm());
    return s > 0.0 ? d / s : d;
}

// Sensor n observes component n mod M (rows of the identity).
inline glu::SensingModel cyclic_model(int n, int m, double gamma0 = 0.0) {
    std::vector<Matrix> sensors;
    for (int k = 0; k < n; ++k) {
        Matrix h = Matrix::Zero(1, m);
        h(0, k % m) = 1.0;
        sensors.push_back(h);
    }
    return glu::SensingModel(m, sensors, Matrix::Identity(n, n), gamma0, glu::NoiseDist::gaussian);
}

inline glu::SensingModel scalar_model(int n, double gamma0 = 0.0) {
    std::vector<Matrix> sensors(static_cast<std::size_t>(n), Matrix::Ones(1, 1));
    return glu::SensingModel(1, sensors, Matrix::Identity(n, n), gamma0, glu::NoiseDist::gaussian);
}

} // namespace testing
