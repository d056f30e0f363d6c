#pragma once

#include <cmath>

#include "derf/linalg.hpp"

namespace derf {

// exp(709.8) is the last representable double; stay a hair below.
constexpr double kMaxExponent = 709.0;

/// Scaled softmax kernel K^(alpha)(x, y) = exp(alpha*|x|^2 + x.y + alpha*|y|^2).
/// alpha = 0 is the softmax kernel, alpha = -1/2 the Gaussian kernel.
struct KernelSpec {
    double alpha = 0.0;
};

/// A set of L points in R^d, one per row.
struct PointSet {
    Matrix points;

    Index size() const { return points.rows(); }
    Index dim() const { return points.cols(); }
};

/// Data moments consumed by every closed-form solver. One O(L) pass per
/// dataset; solvers never see raw point sets.
struct MomentStats {
    Matrix m1;     // (1/L) sum_i x x^T
    Matrix m2;     // (1/L) sum_j y y^T
    double mu3;    // d^-1 (mean x)^T (mean y)
    Vector mu4;    // mean x
    Vector mu5;    // mean y
    double sx;     // avg |x|^2
    double sy;     // avg |y|^2
    Vector diag_x; // sum_i x_l^2 per coordinate
    Vector diag_y; // sum_j y_l^2 per coordinate

    Index dim() const { return m1.rows(); }
};

inline double k_alpha(const Vector& x, const Vector& y, const KernelSpec& spec = {}) {
    if (x.size() != y.size()) throw DimensionMismatch("k_alpha: dimension mismatch");
    const double e = spec.alpha * (x.squaredNorm() + y.squaredNorm()) + x.dot(y);
    if (e > kMaxExponent) throw Overflow("k_alpha: exponent " + std::to_string(e));
    return std::exp(e);
}

/// Exact kernel matrix, entry (i, j) = K^(alpha)(x_i, y_j).
inline Matrix kernel_matrix(const PointSet& xs, const PointSet& ys, const KernelSpec& spec = {}) {
    if (xs.dim() != ys.dim()) throw DimensionMismatch("kernel_matrix: dimension mismatch");
    Matrix e = xs.points * ys.points.transpose();
    const Vector xn = spec.alpha * xs.points.rowwise().squaredNorm();
    const Vector yn = spec.alpha * ys.points.rowwise().squaredNorm();
    e.colwise() += xn;
    e.rowwise() += yn.transpose();
    if (e.maxCoeff() > kMaxExponent)
        throw Overflow("kernel_matrix: exponent " + std::to_string(e.maxCoeff()));
    return e.array().exp();
}

inline MomentStats moment_stats(const PointSet& xs, const PointSet& ys) {
    if (xs.dim() != ys.dim()) throw DimensionMismatch("moment_stats: dimension mismatch");
    const Index d = xs.dim();
    const double lx = static_cast<double>(xs.size());
    const double ly = static_cast<double>(ys.size());
    MomentStats st;
    st.m1 = (xs.points.transpose() * xs.points) / lx;
    st.m2 = (ys.points.transpose() * ys.points) / ly;
    st.m1 = 0.5 * (st.m1 + st.m1.transpose()).eval();
    st.m2 = 0.5 * (st.m2 + st.m2.transpose()).eval();
    st.mu4 = xs.points.colwise().mean();
    st.mu5 = ys.points.colwise().mean();
    st.mu3 = st.mu4.dot(st.mu5) / static_cast<double>(d);
    st.sx = st.m1.trace();
    st.sy = st.m2.trace();
    st.diag_x = xs.points.array().square().colwise().sum();
    st.diag_y = ys.points.array().square().colwise().sum();
    return st;
}

} // namespace derf
