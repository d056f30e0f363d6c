#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "derf/kernel.hpp"
#include "derf/linalg.hpp"
#include "derf/params.hpp"

namespace derf {

/// What a closed-form fit produced: the scalar fed to the exponent
/// minimizer, the decomposition diagonals it was derived from, and the
/// shifted log-variance value at the optimum.
struct FitReport {
    double phi = 0.0;
    std::optional<Vector> sigma_diag; // asymmetric fit: singular values
    std::optional<Vector> lam3;       // symmetric fit: spectrum of the pair-sum matrix
    double objective_value = 0.0;
    std::string family;
};

/// Invertible change of basis x -> A x, y -> A^-T y that preserves the
/// softmax kernel.
struct ArfTransform {
    Matrix a_mat;
};

/// Minimizer of f(A) = log(1-4A) - log(1-8A)/2 + phi/(1-8A) over 8A < 1.
inline double solve_scalar_a(double phi) {
    if (!(phi >= 0.0) || !std::isfinite(phi))
        throw ConfigError("solve_scalar_a: phi must be finite and >= 0");
    return (1.0 - 2.0 * phi - std::sqrt((2.0 * phi + 1.0) * (2.0 * phi + 1.0) + 8.0 * phi)) /
           16.0;
}

namespace detail {

// Shifted log-variance value shared by the scalar-exponent families:
// d * (log(1-4a) - log(1-8a)/2 + phi/(1-8a) + 2*mu3).
inline double scalar_family_objective(double a, double phi, Index d, double mu3) {
    const double g = 1.0 - 8.0 * a;
    return static_cast<double>(d) *
           (std::log(1.0 - 4.0 * a) - 0.5 * std::log(g) + phi / g + 2.0 * mu3);
}

inline double clamp_phi(double phi, const char* where) {
    if (phi < -1e-10)
        throw NegativePhi(std::string(where) + ": phi = " + std::to_string(phi) +
                          " from inconsistent stats");
    return phi < 0.0 ? 0.0 : phi;
}

inline void check_nonsingular(const SymEig& e, double trace, Index d, const char* where) {
    if (e.lam[e.lam.size() - 1] <= 1e-10 * std::max(trace, 0.0) / static_cast<double>(d))
        throw SingularMoments(std::string(where) + ": moment matrix is singular");
}

} // namespace detail

/// Scalar-exponent fit via the homogeneity optimum: phi is the dataset
/// average of |x + y|^2 / d and the exponent coefficient solves the shifted
/// log-variance problem exactly.
inline std::pair<GEParams, FitReport> fit_gerf(const MomentStats& stats, Index d) {
    if (d != stats.dim()) throw DimensionMismatch("fit_gerf: stats dimension mismatch");
    const double phi = detail::clamp_phi(
        (stats.sx + stats.sy + 2.0 * static_cast<double>(d) * stats.mu3) / static_cast<double>(d),
        "fit_gerf");
    const double a = solve_scalar_a(phi);
    FitReport rep;
    rep.phi = phi;
    rep.objective_value = detail::scalar_family_objective(a, phi, d, stats.mu3);
    rep.family = "gerf";
    return {GEParams::from_a(a, d), rep};
}

/// Diagonal pre-scaling Psi_l = (sum_j y_l^2 / sum_i x_l^2)^(1/4), then the
/// scalar fit on the rescaled moments. Coordinates with zero x- or y-energy
/// contribute a constant, so Psi_l = 1 there preserves the plain scalar fit.
inline std::pair<SADEParams, FitReport> fit_saderf(const MomentStats& stats) {
    const Index d = stats.dim();
    Vector psi(d);
    for (Index l = 0; l < d; ++l) {
        const double dx = stats.diag_x[l];
        const double dy = stats.diag_y[l];
        psi[l] = (dx > 0.0 && dy > 0.0) ? std::pow(dy / dx, 0.25) : 1.0;
    }
    double pair_norm = 2.0 * static_cast<double>(d) * stats.mu3; // avg |Psi x + Psi^-1 y|^2
    for (Index l = 0; l < d; ++l)
        pair_norm += psi[l] * psi[l] * stats.m1(l, l) + stats.m2(l, l) / (psi[l] * psi[l]);
    const double phi = detail::clamp_phi(pair_norm / static_cast<double>(d), "fit_saderf");
    const double a = solve_scalar_a(phi);
    FitReport rep;
    rep.phi = phi;
    rep.objective_value = detail::scalar_family_objective(a, phi, d, stats.mu3);
    rep.family = "saderf";
    return {SADEParams{std::move(psi), GEParams::from_a(a, d)}, rep};
}

/// Asymmetric dense fit: whitens the x-side covariance, aligns it with the
/// y side through the SVD of the mixed square-root product, and solves the
/// remaining scalar problem. Requires nonsingular covariances; the optional
/// ridge adds eps * (trace/d) * I first (a documented relaxation of the
/// nonsingularity hypothesis).
inline std::pair<DEParams, FitReport> fit_aderf(const MomentStats& stats, bool ridge = false) {
    const Index d = stats.dim();
    Matrix m1 = stats.m1;
    Matrix m2 = stats.m2;
    if (ridge) {
        m1 += 1e-8 * (m1.trace() / static_cast<double>(d)) * Matrix::Identity(d, d);
        m2 += 1e-8 * (m2.trace() / static_cast<double>(d)) * Matrix::Identity(d, d);
    }
    const SymEig e1 = sym_eig(m1);
    const SymEig e2 = sym_eig(m2);
    detail::check_nonsingular(e1, m1.trace(), d, "fit_aderf(m1)");
    detail::check_nonsingular(e2, m2.trace(), d, "fit_aderf(m2)");
    const Vector sq1 = e1.lam.cwiseSqrt();
    const Vector sq2 = e2.lam.cwiseSqrt();
    const Matrix mid = sq1.asDiagonal() * e1.q.transpose() * e2.q * sq2.asDiagonal();
    const SvdResult sv = svd(mid);
    const Vector& sigma = sv.sigma;
    if (sigma[d - 1] < 1e-12 * sigma[0])
        throw DegenerateSigma("fit_aderf: vanishing singular value, B2 undefined");
    const double phi = detail::clamp_phi(
        2.0 * sigma.sum() / static_cast<double>(d) + 2.0 * stats.mu3, "fit_aderf");
    const double a = solve_scalar_a(phi);
    const double root = std::sqrt(1.0 - 4.0 * a);
    const Matrix left = sv.u.transpose() * sq1.cwiseInverse().asDiagonal() * e1.q.transpose();
    const Matrix right = sv.u.transpose() * sq1.asDiagonal() * e1.q.transpose();
    const Matrix b1 = root * sigma.cwiseSqrt().asDiagonal() * left;
    const Matrix b2 = root * sigma.cwiseSqrt().cwiseInverse().asDiagonal() * right;
    DEParams params = make_de_params(Vector::Constant(d, a), b1, b2);
    validate_de_params(params, 1e-8);
    FitReport rep;
    rep.phi = phi;
    rep.sigma_diag = sigma;
    rep.objective_value = detail::scalar_family_objective(a, phi, d, stats.mu3);
    rep.family = "aderf";
    return {std::move(params), rep};
}

/// Symmetric dense fit: eigendecomposition of the pair-sum matrix
/// N = M1 + mu4 mu5^T + mu5 mu4^T + M2, one scalar solve per eigenvalue,
/// exponent basis rotated into N's eigenbasis.
inline std::pair<DEParams, FitReport> fit_sderf(const MomentStats& stats) {
    const Index d = stats.dim();
    Matrix n = stats.m1 + stats.m2;
    n += stats.mu4 * stats.mu5.transpose() + stats.mu5 * stats.mu4.transpose();
    const SymEig en = sym_eig(n);
    const double tr = n.trace();
    Vector lam3 = en.lam;
    for (Index l = 0; l < d; ++l) {
        if (lam3[l] < -1e-10 * std::max(tr, 0.0))
            throw NonPsdN("fit_sderf: pair-sum matrix has eigenvalue " + std::to_string(lam3[l]));
        if (lam3[l] < 0.0) lam3[l] = 0.0;
    }
    Vector a(d);
    for (Index l = 0; l < d; ++l) a[l] = solve_scalar_a(lam3[l]);
    const Matrix b = (1.0 - 4.0 * a.array()).sqrt().matrix().asDiagonal() * en.q.transpose();
    DEParams params = make_de_params(a, b, b);
    validate_de_params(params, 1e-8);
    double obj = -stats.sx - stats.sy;
    for (Index l = 0; l < d; ++l) {
        const double g = 1.0 - 8.0 * a[l];
        obj += std::log(1.0 - 4.0 * a[l]) - 0.5 * std::log(g) + (1.0 + 1.0 / g) * lam3[l];
    }
    FitReport rep;
    rep.phi = lam3.mean(); // per-coordinate phis are lam3; report their mean
    rep.lam3 = lam3;
    rep.objective_value = obj;
    rep.family = "sderf";
    return {std::move(params), rep};
}

/// First-order relaxation of the asymmetric-transform objective:
/// A* = D^(1/2) U^T Qx^-T with M1 = Qx^T Qx, M2 = Qy^T Qy (symmetric roots)
/// and Qx Qy^T = U D V^T.
inline ArfTransform fit_arf_first_order(const Matrix& m1, const Matrix& m2) {
    if (m1.rows() != m2.rows() || m1.cols() != m2.cols() || m1.rows() != m1.cols())
        throw DimensionMismatch("fit_arf_first_order: shape mismatch");
    const Index d = m1.rows();
    const SymEig e1 = sym_eig(m1);
    const SymEig e2 = sym_eig(m2);
    detail::check_nonsingular(e1, m1.trace(), d, "fit_arf_first_order(m1)");
    detail::check_nonsingular(e2, m2.trace(), d, "fit_arf_first_order(m2)");
    const Matrix qx = e1.q * e1.lam.cwiseSqrt().asDiagonal() * e1.q.transpose();
    const Matrix qy = e2.q * e2.lam.cwiseSqrt().asDiagonal() * e2.q.transpose();
    const SvdResult sv = svd(qx * qy.transpose());
    const Matrix qx_inv = e1.q * e1.lam.cwiseSqrt().cwiseInverse().asDiagonal() * e1.q.transpose();
    ArfTransform t{sv.sigma.cwiseSqrt().asDiagonal() * sv.u.transpose() * qx_inv};
    const SvdResult check = svd(t.a_mat);
    if (check.sigma[d - 1] <= 1e-12 * check.sigma[0])
        throw SingularTransform("fit_arf_first_order: transform is singular");
    return t;
}

/// Relative residual of the asymmetric-transform stationarity equation
/// A M1 A = (A^-2)^T M2.
inline double arf_residual(const ArfTransform& t, const Matrix& m1, const Matrix& m2) {
    const Matrix& a = t.a_mat;
    if (a.rows() != m1.rows() || a.rows() != m2.rows())
        throw DimensionMismatch("arf_residual: shape mismatch");
    const SvdResult sv = svd(a);
    if (sv.sigma[sv.sigma.size() - 1] <= 1e-12 * sv.sigma[0])
        throw SingularTransform("arf_residual: transform is singular");
    const Matrix a_inv = a.partialPivLu().solve(Matrix::Identity(a.rows(), a.cols()));
    const Matrix res = a * m1 * a - (a_inv * a_inv).transpose() * m2;
    return res.norm() / (1.0 + m2.norm());
}

} // namespace derf
