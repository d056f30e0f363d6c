#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "derf/errors.hpp"
#include "derf/rng.hpp"

namespace derf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Eigendecomposition of a symmetric matrix. Columns of q are eigenvectors,
/// lam holds the eigenvalues sorted non-ascending (q * diag(lam) * q^T = input).
struct SymEig {
    Matrix q;
    Vector lam;
};

/// Full SVD u * diag(sigma) * v^T with sigma >= 0 sorted non-ascending.
struct SvdResult {
    Matrix u;
    Vector sigma;
    Matrix v;
};

/// How the rows of a draw matrix were produced.
enum class Scheme { Iid, Orthogonal, Qmc };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Iid: return "iid";
        case Scheme::Orthogonal: return "orthogonal";
        case Scheme::Qmc: return "qmc";
    }
    return "?";
}

/// M x d matrix of direction draws, each row marginally N(0, I_d).
/// Phases are present only for trigonometric features.
struct FeatureDraws {
    Matrix omegas;
    std::optional<Vector> phases;
    Scheme scheme = Scheme::Iid;
};

inline SymEig sym_eig(const Matrix& s) {
    if (s.rows() != s.cols()) throw DimensionMismatch("sym_eig: matrix must be square");
    const double scale = 1.0 + s.cwiseAbs().maxCoeff();
    const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * scale)
        throw AsymmetricInput("sym_eig: input asymmetry " + std::to_string(asym / scale) +
                              " exceeds tolerance");
    const Matrix sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) throw NoConvergence("sym_eig: iteration failed");
    // Eigen sorts ascending; flip to non-ascending.
    const Index d = s.rows();
    SymEig out;
    out.q = es.eigenvectors().rowwise().reverse();
    out.lam = es.eigenvalues().reverse();
    (void)d;
    return out;
}

inline SvdResult svd(const Matrix& a) {
    if (!a.allFinite()) throw ConfigError("svd: non-finite entries");
    Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (solver.info() != Eigen::Success) throw NoConvergence("svd: iteration failed");
    return SvdResult{solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

/// Clamps tiny negative eigenvalues of a PSD matrix to zero; values below
/// -tol_scale * 1e-10 are a genuine violation and are rejected.
inline Vector clamp_psd_eigenvalues(Vector lam, double tol_scale) {
    const double floor = -1e-10 * std::max(tol_scale, 1e-300);
    for (Index l = 0; l < lam.size(); ++l) {
        if (lam[l] < floor)
            throw NumericError("expected PSD matrix has eigenvalue " + std::to_string(lam[l]));
        if (lam[l] < 0.0) lam[l] = 0.0;
    }
    return lam;
}

inline FeatureDraws sample_gaussian(Index m, Index d, RngStream& rng) {
    if (m < 1 || d < 1) throw ConfigError("sample_gaussian: m and d must be >= 1");
    Matrix omegas(m, d);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < d; ++j) omegas(i, j) = rng.next_gaussian();
    return FeatureDraws{std::move(omegas), std::nullopt, Scheme::Iid};
}

/// Blockwise-orthogonal directions with chi-distributed row norms, so every
/// row is still marginally N(0, I_d). Rows are grouped in ceil(m/d) blocks;
/// rows within a block are mutually orthogonal.
inline FeatureDraws sample_orthogonal(Index m, Index d, RngStream& rng) {
    if (m < 1 || d < 1) throw ConfigError("sample_orthogonal: m and d must be >= 1");
    Matrix omegas(m, d);
    Index row = 0;
    while (row < m) {
        Matrix g(d, d);
        for (Index i = 0; i < d; ++i)
            for (Index j = 0; j < d; ++j) g(i, j) = rng.next_gaussian();
        Eigen::HouseholderQR<Matrix> qr(g);
        Matrix q = qr.householderQ();
        // Fix the sign ambiguity so q is Haar distributed.
        const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (Index j = 0; j < d; ++j)
            if (r(j, j) < 0.0) q.col(j) = -q.col(j);
        const Index take = std::min(d, m - row);
        for (Index i = 0; i < take; ++i) {
            double norm_sq = 0.0;
            for (Index j = 0; j < d; ++j) {
                const double gg = rng.next_gaussian();
                norm_sq += gg * gg;
            }
            omegas.row(row + i) = std::sqrt(norm_sq) * q.col(i).transpose();
        }
        row += take;
    }
    return FeatureDraws{std::move(omegas), std::nullopt, Scheme::Orthogonal};
}

/// Attaches uniform phases in [0, 2*pi), required by trigonometric features.
inline void add_trig_phases(FeatureDraws& draws, RngStream& rng) {
    Vector phases(draws.omegas.rows());
    for (Index i = 0; i < phases.size(); ++i) phases[i] = 2.0 * M_PI * rng.next_uniform();
    draws.phases = std::move(phases);
}

/// sup over orthogonal Q of Trace(diag(e) * Q * N * Q^T) for any symmetric N
/// with eigenvalues lam: pair both spectra sorted non-ascending.
inline double trace_max_pairing(const Vector& e_diag, const Vector& lam) {
    if (e_diag.size() != lam.size())
        throw DimensionMismatch("trace_max_pairing: length mismatch");
    for (Index l = 0; l + 1 < lam.size(); ++l)
        if (lam[l] < lam[l + 1])
            throw ConfigError("trace_max_pairing: lam must be sorted non-ascending");
    std::vector<Index> order(static_cast<std::size_t>(e_diag.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return e_diag[a] > e_diag[b]; });
    double acc = 0.0;
    for (Index l = 0; l < lam.size(); ++l) acc += e_diag[order[static_cast<std::size_t>(l)]] * lam[l];
    return acc;
}

} // namespace derf
