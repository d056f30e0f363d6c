#pragma once

#include <cmath>
#include <string>
#include <type_traits>

#include "derf/kernel.hpp"
#include "derf/mechanisms.hpp"

namespace derf {

/// The two halves of the low-rank kernel estimate: p is L1 x M over xs,
/// s is L2 x M over ys, and p * s^T approximates the kernel matrix.
struct FeaturePair {
    Matrix p;
    Matrix s;
};

namespace detail {

inline void check_exponents(const Matrix& e, const char* where) {
    Index i = 0, m = 0;
    const double mx = e.maxCoeff(&i, &m);
    if (mx > kMaxExponent)
        throw Overflow(std::string(where) + ": exponent " + std::to_string(mx) + " at point " +
                       std::to_string(i) + ", draw " + std::to_string(m));
}

// Exponent matrix of scalar-family features on (possibly rescaled) points.
inline Matrix ge_exponents(const GEParams& g, const Matrix& omegas, const Matrix& pts) {
    Matrix e = g.b * (pts * omegas.transpose());
    const Vector quad = g.c * pts.rowwise().squaredNorm();
    const Vector aterm = g.a * omegas.rowwise().squaredNorm();
    e.colwise() += quad;
    e.rowwise() += aterm.transpose();
    e.array() += g.log_d_coeff;
    return e;
}

inline Matrix de_exponents(const DEParams& p, const Matrix& omegas, const Matrix& pts,
                           int which) {
    const Matrix& b = which == 1 ? p.b1 : p.b2;
    const Matrix& c = which == 1 ? p.c1 : p.c2;
    // Precompute B^T-projected draws and per-point quadratic forms; the
    // point-by-draw loop is then a single L x M product.
    const Matrix proj = omegas * b; // row m = (B^T w_m)^T
    Matrix e = pts * proj.transpose();
    const Vector quad = ((pts * c).cwiseProduct(pts)).rowwise().sum();
    const Vector aterm = (omegas.array().square().matrix()) * p.a_diag;
    e.colwise() += quad;
    e.rowwise() += aterm.transpose();
    e.array() += p.log_det_d;
    return e;
}

} // namespace detail

/// Log of the positive-family feature values f^(which) over a draw set and a
/// point set; L x M. Trig features are not log-representable.
inline Matrix log_features(const Mechanism& mech, const FeatureDraws& draws, const PointSet& pts,
                           int which) {
    if (which != 1 && which != 2) throw ConfigError("log_features: which must be 1 or 2");
    if (draws.omegas.cols() != pts.dim())
        throw DimensionMismatch("log_features: draw and point dimensions differ");
    if (mech.dim() >= 0 && mech.dim() != pts.dim())
        throw DimensionMismatch("log_features: parameter dimension mismatch");
    return std::visit(
        [&](const auto& fam) -> Matrix {
            using T = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<T, TrigFamily>) {
                throw TrigUnsupported("log_features: trig features take negative values");
            } else if constexpr (std::is_same_v<T, PosFamily>) {
                Matrix e = pts.points * draws.omegas.transpose();
                e.colwise() -= (0.5 * pts.points.rowwise().squaredNorm()).eval();
                return e;
            } else if constexpr (std::is_same_v<T, GEParams>) {
                return detail::ge_exponents(fam, draws.omegas, pts.points);
            } else if constexpr (std::is_same_v<T, SADEParams>) {
                const Vector scale = which == 1 ? fam.psi : fam.psi.cwiseInverse().eval();
                const Matrix scaled = pts.points * scale.asDiagonal();
                return detail::ge_exponents(fam.ge, draws.omegas, scaled);
            } else {
                return detail::de_exponents(fam, draws.omegas, pts.points, which);
            }
        },
        mech.family);
}

/// Single-feature evaluation f^(which)(w, x); the matrix path in
/// build_features must agree with this definition.
inline double eval_feature(const Mechanism& mech, const Vector& omega,
                           std::optional<double> theta, const Vector& x, int which) {
    if (which != 1 && which != 2) throw ConfigError("eval_feature: which must be 1 or 2");
    if (omega.size() != x.size()) throw DimensionMismatch("eval_feature: dimension mismatch");
    if (mech.is_trig()) {
        if (!theta) throw MissingPhase("eval_feature: trig features require a phase");
        const double half_sq = 0.5 * x.squaredNorm();
        if (half_sq > kMaxExponent) throw Overflow("eval_feature: trig prefactor overflow");
        // Trig maps are identical on both sides: cos(w.x + theta) paired with
        // cos(w.y + theta) integrates to exp(-|x-y|^2/2), which the norm
        // prefactors lift to the softmax kernel.
        return std::sqrt(2.0) * std::exp(half_sq) * std::cos(omega.dot(x) + *theta);
    }
    PointSet one{x.transpose()};
    FeatureDraws d{omega.transpose(), std::nullopt, mech.scheme};
    const double e = log_features(mech, d, one, which)(0, 0);
    if (e > kMaxExponent) throw Overflow("eval_feature: exponent " + std::to_string(e));
    return std::exp(e);
}

/// Assembles the P and S matrices: p[i,m] = M^-1/2 f^(1)(w_m, x_i) and
/// s[j,m] = M^-1/2 f^(2)(w_m, y_j).
inline FeaturePair build_features(const Mechanism& mech, const FeatureDraws& draws,
                                  const PointSet& xs, const PointSet& ys) {
    if (draws.scheme != mech.scheme)
        throw ConfigError("build_features: draw scheme does not match mechanism scheme");
    if (xs.dim() != ys.dim()) throw DimensionMismatch("build_features: point dims differ");
    const double norml = 1.0 / std::sqrt(static_cast<double>(draws.omegas.rows()));
    if (mech.is_trig()) {
        if (!draws.phases) throw MissingPhase("build_features: trig features require phases");
        auto trig_side = [&](const PointSet& pts) -> Matrix {
            Matrix angle = pts.points * draws.omegas.transpose();
            angle.rowwise() += draws.phases->transpose();
            const Vector half_sq = 0.5 * pts.points.rowwise().squaredNorm();
            if (half_sq.size() > 0 && half_sq.maxCoeff() > kMaxExponent)
                throw Overflow("build_features: trig prefactor overflow");
            const Vector pref = half_sq.array().exp();
            Matrix f = (std::sqrt(2.0) * angle.array().cos()).matrix();
            return norml * (pref.asDiagonal() * f);
        };
        return FeaturePair{trig_side(xs), trig_side(ys)};
    }
    Matrix e1 = log_features(mech, draws, xs, 1);
    Matrix e2 = log_features(mech, draws, ys, 2);
    detail::check_exponents(e1, "build_features(f1)");
    detail::check_exponents(e2, "build_features(f2)");
    return FeaturePair{(norml * e1.array().exp()).matrix(), (norml * e2.array().exp()).matrix()};
}

/// The rank-M kernel estimate P * S^T, materialized. Test- and desk-scale
/// only; production paths should use approx_apply.
inline Matrix approx_kernel(const FeaturePair& fp) {
    if (fp.p.cols() != fp.s.cols()) throw DimensionMismatch("approx_kernel: M mismatch");
    return fp.p * fp.s.transpose();
}

/// (P S^T) c without forming the L x L matrix: O(L M n).
inline Matrix approx_apply(const FeaturePair& fp, const Matrix& c) {
    if (fp.p.cols() != fp.s.cols()) throw DimensionMismatch("approx_apply: M mismatch");
    if (fp.s.rows() != c.rows()) throw DimensionMismatch("approx_apply: c has wrong row count");
    return fp.p * (fp.s.transpose() * c);
}

/// Draws for a mechanism: scheme dispatch plus phases for trig.
inline FeatureDraws draw_features(const Mechanism& mech, Index m, Index d, RngStream& rng) {
    FeatureDraws draws;
    switch (mech.scheme) {
        case Scheme::Iid: draws = sample_gaussian(m, d, rng); break;
        case Scheme::Orthogonal: draws = sample_orthogonal(m, d, rng); break;
        case Scheme::Qmc: {
            QmcCorrelation corr = *mech.qmc;
            corr.m = m;
            if (!validate_qmc(corr.psi_qmc, corr.m).valid)
                throw InvalidCorrelation("draw_features: psi invalid for this M");
            draws = sample_qmc(corr, d, rng);
            break;
        }
    }
    if (mech.is_trig()) add_trig_phases(draws, rng);
    return draws;
}

} // namespace derf
