#pragma once

#include <Eigen/Dense>

#include <array>
#include <limits>

namespace poslab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Spatial location. Unused trailing coordinates are zero (1-D domains use x only).
using Point = std::array<double, 2>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline double max_offdiag_abs(const Matrix& m) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j) worst = std::max(worst, std::abs(m(i, j)));
    return worst;
}

/// Smallest off-diagonal entry; +inf for 1x1 matrices.
inline double min_offdiag(const Matrix& m) {
    double lowest = kInfinity;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j) lowest = std::min(lowest, m(i, j));
    return lowest;
}

inline double max_row_sum(const Matrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace poslab
