#pragma once

#include <cmath>
#include <vector>

#include "derf/kernel.hpp"
#include "derf/params.hpp"

namespace derf {

/// Per-coordinate correlation Psi_l between any two of m joint draws. The
/// block covariance (I on the diagonal, diag(psi) off it) is PSD exactly when
/// -1/(m-1) <= Psi_l <= 1 for every coordinate.
struct QmcCorrelation {
    Vector psi_qmc;
    Index m = 2;
};

struct QmcValidation {
    bool valid = true;
    std::vector<Index> violations; // coordinates out of bounds
    Vector eig_lo;                 // 1 + (m-1) Psi_l
    Vector eig_hi;                 // 1 - Psi_l
};

inline QmcValidation validate_qmc(const Vector& psi, Index m) {
    if (m < 2) throw ConfigError("validate_qmc: m must be >= 2");
    QmcValidation v;
    v.eig_lo.resize(psi.size());
    v.eig_hi.resize(psi.size());
    const double lower = -1.0 / static_cast<double>(m - 1);
    for (Index l = 0; l < psi.size(); ++l) {
        v.eig_lo[l] = 1.0 + static_cast<double>(m - 1) * psi[l];
        v.eig_hi[l] = 1.0 - psi[l];
        if (psi[l] < lower || psi[l] > 1.0) {
            v.valid = false;
            v.violations.push_back(l);
        }
    }
    return v;
}

/// Jointly Gaussian draws: coordinates independent, and within coordinate l
/// the m values have covariance Psi_l * 11^T + (1 - Psi_l) * I. Realized via
/// the symmetric square root in the eigenbasis whose first direction is the
/// all-ones vector. Marginals stay N(0, I_d), so any estimator built on these
/// draws remains unbiased.
inline FeatureDraws sample_qmc(const QmcCorrelation& corr, Index d, RngStream& rng) {
    if (d != corr.psi_qmc.size())
        throw DimensionMismatch("sample_qmc: psi length must equal d");
    const auto v = validate_qmc(corr.psi_qmc, corr.m);
    if (!v.valid) throw InvalidCorrelation("sample_qmc: psi out of the admissible range");
    const Index m = corr.m;
    Matrix omegas(m, d);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (Index l = 0; l < d; ++l) {
        Vector g(m);
        for (Index i = 0; i < m; ++i) g[i] = rng.next_gaussian();
        const double s_lo = std::sqrt(std::max(v.eig_lo[l], 0.0));
        const double s_hi = std::sqrt(std::max(v.eig_hi[l], 0.0));
        const double shift = (s_lo - s_hi) * inv_m * g.sum();
        omegas.col(l) = s_hi * g.array() + shift;
    }
    return FeatureDraws{std::move(omegas), std::nullopt, Scheme::Qmc};
}

/// Closed-form cross moment E[Z(w1) Z(w2)] of the feature product
/// Z(w) = f^(1)(w, x) f^(2)(w, y) under a correlated pair of draws: with
/// z = B1 x + B2 y, the per-coordinate Gaussian integral gives
///   ((1-4a)^2 - 16 a^2 psi^2)^(-1/2) * exp(z^2 (1+psi) / (1 - 4a(1+psi)))
/// times D^4 exp(2 x^T C1 x + 2 y^T C2 y). At Psi = 0 this reduces to
/// K(x,y)^2 and at Psi = 1 to the plain second moment.
inline double qmc_cross_moment(const DEParams& p, const QmcCorrelation& corr, const Vector& x,
                               const Vector& y) {
    const Index d = p.dim();
    if (x.size() != d || y.size() != d || corr.psi_qmc.size() != d)
        throw DimensionMismatch("qmc_cross_moment: dimension mismatch");
    if (corr.psi_qmc.cwiseAbs().maxCoeff() > 1.0 + 1e-15)
        throw InvalidCorrelation("qmc_cross_moment: requires |Psi_l| <= 1");
    const Vector z = p.b1 * x + p.b2 * y;
    double log_e = 4.0 * p.log_det_d + 2.0 * x.dot(p.c1 * x) + 2.0 * y.dot(p.c2 * y);
    for (Index l = 0; l < d; ++l) {
        const double a = p.a_diag[l];
        const double psi = corr.psi_qmc[l];
        const double det = (1.0 - 4.0 * a) * (1.0 - 4.0 * a) - 16.0 * a * a * psi * psi;
        log_e += z[l] * z[l] * (1.0 + psi) / (1.0 - 4.0 * a * (1.0 + psi)) -
                 0.5 * std::log(det);
    }
    if (log_e > kMaxExponent)
        throw Overflow("qmc_cross_moment: exponent " + std::to_string(log_e));
    return std::exp(log_e);
}

} // namespace derf
