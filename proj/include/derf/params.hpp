#pragma once

#include <cmath>

#include "derf/kernel.hpp"
#include "derf/linalg.hpp"

namespace derf {

/// Scalar exponential-feature parameters. The feature is
///   f(w, x) = exp(a*|w|^2 + b*w.x + c*|x|^2 + log_d_coeff)
/// with b, c and the normalizer tied to a so the product f(w,x)f(w,y) is an
/// unbiased softmax-kernel estimate. a = 0 reduces to plain positive features.
struct GEParams {
    double a = 0.0;
    double b = 1.0;
    double c = -0.5;
    double log_d_coeff = 0.0; // (d/4) * log(1 - 4a); normalizer kept in log space
    Index d_dim = 0;

    static GEParams from_a(double a, Index d) {
        if (!(1.0 - 8.0 * a > 0.0)) throw ConfigError("GEParams: requires 1 - 8a > 0");
        GEParams p;
        p.a = a;
        p.b = std::sqrt(1.0 - 4.0 * a);
        p.c = -0.5;
        p.log_d_coeff = 0.25 * static_cast<double>(d) * std::log(1.0 - 4.0 * a);
        p.d_dim = d;
        return p;
    }
};

/// Dense exponential-feature parameters with diagonal A:
///   f^(k)(w, x) = exp(sum_l a_l w_l^2 + w^T B^(k) x + x^T C^(k) x + log_det_d).
/// The normalizer det(I - 4A)^(1/4) is stored in log space; it overflows as a
/// plain double already at moderate d.
struct DEParams {
    Vector a_diag;
    Matrix b1, b2;
    Matrix c1, c2;
    double log_det_d = 0.0; // (1/4) sum_l log(1 - 4 a_l)

    Index dim() const { return a_diag.size(); }
};

/// Residuals of the unbiasedness constraint block for DEParams.
struct DeConstraintResiduals {
    double cross;   // |B1^T (I-4A)^-1 B2 - I|_F
    double c1_res;  // |C1 + 1/2 B1^T (I-4A)^-1 B1|_F
    double c2_res;
    double log_det; // |log_det_d - 1/4 sum log(1-4a_l)|
    double max_a;   // max_l 8 a_l (must stay < 1)

    double worst() const {
        return std::max(std::max(cross, log_det), std::max(c1_res, c2_res));
    }
};

inline DeConstraintResiduals de_constraint_residuals(const DEParams& p) {
    const Index d = p.dim();
    const Vector inv4 = (1.0 - 4.0 * p.a_diag.array()).inverse();
    DeConstraintResiduals r;
    r.cross = (p.b1.transpose() * inv4.asDiagonal() * p.b2 - Matrix::Identity(d, d)).norm();
    r.c1_res = (p.c1 + 0.5 * p.b1.transpose() * inv4.asDiagonal() * p.b1).norm();
    r.c2_res = (p.c2 + 0.5 * p.b2.transpose() * inv4.asDiagonal() * p.b2).norm();
    r.log_det =
        std::abs(p.log_det_d - 0.25 * (1.0 - 4.0 * p.a_diag.array()).log().sum());
    r.max_a = 8.0 * p.a_diag.maxCoeff();
    return r;
}

inline void validate_de_params(const DEParams& p, double tol = 1e-8) {
    if (p.b1.rows() != p.dim() || p.b1.cols() != p.dim() || p.b2.rows() != p.dim() ||
        p.b2.cols() != p.dim() || p.c1.rows() != p.dim() || p.c2.rows() != p.dim())
        throw DimensionMismatch("DEParams: inconsistent shapes");
    const auto r = de_constraint_residuals(p);
    if (!(r.max_a < 1.0)) throw ConfigError("DEParams: requires 8*max(a) < 1");
    if (r.worst() > tol)
        throw NumericError("DEParams: constraint residual " + std::to_string(r.worst()));
}

/// Builds a valid parameter bundle from (A, B1, B2), deriving C^(k) and the
/// log normalizer from the constraint block. Does not check the cross
/// condition B1^T (I-4A)^-1 B2 = I; call validate_de_params for that.
inline DEParams make_de_params(Vector a_diag, Matrix b1, Matrix b2) {
    DEParams p;
    p.a_diag = std::move(a_diag);
    if (!(8.0 * p.a_diag.maxCoeff() < 1.0)) throw ConfigError("DEParams: requires 8*max(a) < 1");
    p.b1 = std::move(b1);
    p.b2 = std::move(b2);
    const Vector inv4 = (1.0 - 4.0 * p.a_diag.array()).inverse();
    p.c1 = -0.5 * p.b1.transpose() * inv4.asDiagonal() * p.b1;
    p.c2 = -0.5 * p.b2.transpose() * inv4.asDiagonal() * p.b2;
    p.log_det_d = 0.25 * (1.0 - 4.0 * p.a_diag.array()).log().sum();
    return p;
}

/// Completes (A, B1) to a valid bundle via B2 = (I - 4A) B1^-T.
inline DEParams make_de_from_b1(const Vector& a_diag, const Matrix& b1) {
    const Matrix ident = Matrix::Identity(b1.rows(), b1.cols());
    const Matrix b1_inv_t = b1.transpose().partialPivLu().solve(ident);
    const Matrix b2 = (1.0 - 4.0 * a_diag.array()).matrix().asDiagonal() * b1_inv_t;
    return make_de_params(a_diag, b1, b2);
}

inline DEParams ge_to_de(const GEParams& g) {
    const Index d = g.d_dim;
    return make_de_params(Vector::Constant(d, g.a), g.b * Matrix::Identity(d, d),
                          g.b * Matrix::Identity(d, d));
}

/// Diagonal pre-scaling composed with scalar features:
/// f^(1)(w, x) = f_ge(w, Psi x), f^(2)(w, y) = f_ge(w, Psi^-1 y).
struct SADEParams {
    Vector psi; // strictly positive diagonal
    GEParams ge;
};

inline DEParams sade_to_de(const SADEParams& s) {
    const Index d = s.ge.d_dim;
    const Vector inv_psi = s.psi.cwiseInverse();
    return make_de_params(Vector::Constant(d, s.ge.a),
                          s.ge.b * Matrix(s.psi.asDiagonal()),
                          s.ge.b * Matrix(inv_psi.asDiagonal()));
}

} // namespace derf
