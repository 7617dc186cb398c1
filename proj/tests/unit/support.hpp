#pragma once

#include <algorithm>
#include <random>

#include <obsdyn/krylov_closure.hpp>
#include <obsdyn/linalg.hpp>

namespace testing {

using obsdyn::Matrix;
using obsdyn::Vector;

inline Matrix normal_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

inline Vector normal_vector(std::mt19937_64& rng, Eigen::Index n) { return normal_matrix(rng, n, 1).col(0); }

inline obsdyn::LinearObservableSystem random_system(std::mt19937_64& rng, int n, int m) {
    Matrix a = normal_matrix(rng, n, n);
    Matrix b = normal_matrix(rng, m, n);
    return obsdyn::LinearObservableSystem(std::move(a), std::move(b));
}

inline Matrix rotation_generator() {
    Matrix a(2, 2);
    a << 0.0, 1.0, -1.0, 0.0;
    return a;
}

inline Matrix row(std::initializer_list<double> values) {
    Matrix m(1, static_cast<Eigen::Index>(values.size()));
    Eigen::Index j = 0;
    for (const double v : values) m(0, j++) = v;
    return m;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace testing
