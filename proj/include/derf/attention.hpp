#pragma once

#include <cmath>
#include <utility>

#include "derf/features.hpp"
#include "derf/kernel.hpp"

namespace derf {

/// Queries, keys and values of one self-attention call, L x d each.
struct AttentionBatch {
    Matrix q, k, v;

    Index length() const { return q.rows(); }
    Index dim() const { return q.cols(); }
};

inline void check_batch(const AttentionBatch& b) {
    if (b.k.rows() != b.q.rows() || b.v.rows() != b.q.rows() || b.k.cols() != b.q.cols())
        throw DimensionMismatch("attention: q, k, v must share L (and q, k share d)");
    if (!b.q.allFinite() || !b.k.allFinite() || !b.v.allFinite())
        throw ConfigError("attention: non-finite inputs");
}

/// The point sets the softmax kernel acts on: rows of Q and K scaled by
/// d^(-1/4). Fit feature parameters on these sets.
inline std::pair<PointSet, PointSet> attention_sets(const AttentionBatch& b) {
    const double scale = std::pow(static_cast<double>(b.dim()), -0.25);
    return {PointSet{scale * b.q}, PointSet{scale * b.k}};
}

/// Exact softmax self-attention, row-stabilized (per-row max subtraction is
/// exact for the normalized output). Rows are processed in blocks so the
/// working set stays one block of logits rather than the full L x L matrix.
inline Matrix exact_attention(const AttentionBatch& b) {
    check_batch(b);
    auto [xs, ys] = attention_sets(b);
    const Index l = b.length();
    constexpr Index kBlock = 64;
    Matrix out(l, b.v.cols());
    Matrix logits;
    for (Index r0 = 0; r0 < l; r0 += kBlock) {
        const Index rows = std::min(kBlock, l - r0);
        logits.noalias() = xs.points.middleRows(r0, rows) * ys.points.transpose();
        logits.colwise() -= logits.rowwise().maxCoeff().eval();
        logits = logits.array().exp();
        const Vector denom = logits.rowwise().sum();
        out.middleRows(r0, rows).noalias() = denom.cwiseInverse().asDiagonal() * (logits * b.v);
    }
    return out;
}

struct RfAttentionDiagnostics {
    double min_denominator = 0.0;
    double max_exponent = 0.0; // over both feature sides, before stabilization
    double min_exponent = 0.0;
};

struct RfAttentionResult {
    Matrix output;
    RfAttentionDiagnostics diag;
};

/// Low-rank attention through a positive feature mechanism: never forms the
/// L x L matrix. Query-side exponents are shifted per row and key-side
/// exponents globally; both shifts cancel in the normalized output.
inline RfAttentionResult rf_attention(const AttentionBatch& b, const Mechanism& mech, Index m,
                                      RngStream& rng) {
    check_batch(b);
    if (!mech.positive())
        throw TrigUnsupported("rf_attention: trig features can produce a non-positive normalizer");
    auto [xs, ys] = attention_sets(b);
    const FeatureDraws draws = draw_features(mech, m, b.dim(), rng);
    Matrix e1 = log_features(mech, draws, xs, 1);
    Matrix e2 = log_features(mech, draws, ys, 2);
    RfAttentionDiagnostics diag;
    diag.max_exponent = std::max(e1.maxCoeff(), e2.maxCoeff());
    diag.min_exponent = std::min(e1.minCoeff(), e2.minCoeff());
    e1.colwise() -= e1.rowwise().maxCoeff().eval();
    e2.array() -= e2.maxCoeff();
    const Matrix p = e1.array().exp();
    const Matrix s = e2.array().exp();
    const Matrix num = p * (s.transpose() * b.v);
    const Vector den = p * (s.transpose() * Vector::Ones(s.rows()));
    diag.min_denominator = den.minCoeff();
    if (!(diag.min_denominator > 0.0) || !den.allFinite())
        throw NumericError("rf_attention: normalizer underflowed to zero");
    return RfAttentionResult{den.cwiseInverse().asDiagonal() * num, diag};
}

/// Relative Frobenius error between two attention outputs.
inline double attention_error(const Matrix& y_exact, const Matrix& y_approx) {
    if (y_exact.rows() != y_approx.rows() || y_exact.cols() != y_approx.cols())
        throw DimensionMismatch("attention_error: shape mismatch");
    return (y_approx - y_exact).norm() / (1e-30 + y_exact.norm());
}

} // namespace derf
