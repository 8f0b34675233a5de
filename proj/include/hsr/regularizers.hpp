#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "tensor.hpp"

namespace hsr {

/// Smoothed Schatten-p function phi(X) = tr((X X^T + tau I)^{p/2}).
struct SchattenConfig {
    double p = 0.5;
    double tau = 1.0;

    void validate() const {
        if (!(p > 0.0 && p <= 1.0)) {
            throw ConfigError("Schatten p must lie in (0, 1], got " + std::to_string(p));
        }
        if (!(tau > 0.0) || !std::isfinite(tau)) {
            throw ConfigError("Schatten tau must be positive, got " + std::to_string(tau));
        }
    }
};

/// Smoothed l_q penalty sum_i (x_i^2 + epsilon)^{q/2} on image differences.
struct TvConfig {
    double q = 0.5;
    double epsilon = 1e-3;

    void validate() const {
        if (!(q > 0.0 && q <= 2.0)) {
            throw ConfigError("TV q must lie in (0, 1] (2 allowed for quadratic TV), got " +
                              std::to_string(q));
        }
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
            throw ConfigError("TV epsilon must be positive");
        }
    }
};

// ---------------------------------------------------------------------------
// Schatten-p

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Matrix> gram_eigen(const Matrix& x, double tau) {
    Matrix g = x * x.transpose();
    g.diagonal().array() += tau;
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    if (es.info() != Eigen::Success) {
        throw NumericalError("symmetric eigensolver failed");
    }
    return es;
}

} // namespace detail

inline double schatten_value(const Matrix& x, const SchattenConfig& cfg) {
    const auto es = detail::gram_eigen(x, cfg.tau);
    // eigenvalues are >= tau in exact arithmetic
    return es.eigenvalues().array().max(cfg.tau).pow(cfg.p / 2.0).sum();
}

/**
 * Reweighting matrix W = (Z Z^T + tau I)^{(p-2)/2} at anchor Z, together with
 * the quantities the majorizer and step sizes need from the same
 * eigendecomposition.
 */
struct SchattenWeight {
    Matrix W;
    double max_eigenvalue = 0.0; // sigma_max(W) = lambda_min(Z Z^T + tau I)^{(p-2)/2}
    double power_trace = 0.0;    // tr(W^{p/(p-2)}) = phi(Z)
};

inline SchattenWeight schatten_weight(const Matrix& z, const SchattenConfig& cfg) {
    const auto es = detail::gram_eigen(z, cfg.tau);
    const Vector lambda = es.eigenvalues().array().max(cfg.tau);
    const Vector w = lambda.array().pow((cfg.p - 2.0) / 2.0);
    SchattenWeight out;
    out.W = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
    out.max_eigenvalue = w.maxCoeff();
    out.power_trace = lambda.array().pow(cfg.p / 2.0).sum();
    return out;
}

/**
 * Quadratic majorizer of phi anchored where `weight` was computed:
 *
 *     (p/2) tr(W (S S^T + tau I)) + ((2-p)/2) tr(W^{p/(p-2)}).
 *
 * Equal to phi at the anchor and above it everywhere else.
 */
inline double schatten_majorizer_value(const Matrix& s, const SchattenWeight& weight,
                                       const SchattenConfig& cfg) {
    detail::require_dims(weight.W.rows() == s.rows(), "schatten_majorizer_value: W/S mismatch");
    const double quad = (s.array() * (weight.W * s).array()).sum() + cfg.tau * weight.W.trace();
    return 0.5 * cfg.p * quad + 0.5 * (2.0 - cfg.p) * weight.power_trace;
}

/// Overload for a bare weight matrix; recovers tr(W^{p/(p-2)}) from W itself.
inline double schatten_majorizer_value(const Matrix& s, const Matrix& w,
                                       const SchattenConfig& cfg) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(w, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw NumericalError("symmetric eigensolver failed");
    }
    SchattenWeight weight;
    weight.W = w;
    weight.power_trace = es.eigenvalues().array().pow(cfg.p / (cfg.p - 2.0)).sum();
    weight.max_eigenvalue = es.eigenvalues().maxCoeff();
    return schatten_majorizer_value(s, weight, cfg);
}

/// Gradient of phi at the anchor: p W S.
inline Matrix schatten_gradient(const Matrix& s, const SchattenWeight& weight,
                                const SchattenConfig& cfg) {
    return cfg.p * (weight.W * s);
}

// ---------------------------------------------------------------------------
// Circulant first differences
//
// H is n x n with H(i, i) = 1, H(i, i+1 mod n) = -1. On an I x J image S with
// q = vec(S) (column-major):
//   H_x q = (H_J kron I_I) q  ->  S(i, j) - S(i, j+1 mod J)
//   H_y q = (I_J kron H_I) q  ->  S(i, j) - S(i+1 mod I, j)

inline Matrix difference_matrix(Index n) {
    Matrix h = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        h(i, i) += 1.0;
        h(i, (i + 1) % n) -= 1.0;
    }
    return h;
}

/// sigma_max(H) = max_k 2 |sin(pi k / n)|.
inline double difference_norm(Index n) {
    double best = 0.0;
    for (Index k = 0; k < n; ++k) {
        best = std::max(best, 2.0 * std::abs(std::sin(std::numbers::pi * static_cast<double>(k) /
                                                      static_cast<double>(n))));
    }
    return best;
}

inline Matrix diff_x(const Matrix& s) {
    const Index J = s.cols();
    Matrix d(s.rows(), J);
    for (Index j = 0; j < J; ++j) {
        d.col(j) = s.col(j) - s.col((j + 1) % J);
    }
    return d;
}

inline Matrix diff_x_adjoint(const Matrix& z) {
    const Index J = z.cols();
    Matrix d(z.rows(), J);
    for (Index j = 0; j < J; ++j) {
        d.col(j) = z.col(j) - z.col((j + J - 1) % J);
    }
    return d;
}

inline Matrix diff_y(const Matrix& s) {
    const Index I = s.rows();
    Matrix d(I, s.cols());
    for (Index i = 0; i < I; ++i) {
        d.row(i) = s.row(i) - s.row((i + 1) % I);
    }
    return d;
}

inline Matrix diff_y_adjoint(const Matrix& z) {
    const Index I = z.rows();
    Matrix d(I, z.cols());
    for (Index i = 0; i < I; ++i) {
        d.row(i) = z.row(i) - z.row((i + I - 1) % I);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Smoothed l_q total variation

inline double lq_value(const Matrix& z, const TvConfig& cfg) {
    return (z.array().square() + cfg.epsilon).pow(cfg.q / 2.0).sum();
}

/// Tangent-quadratic majorizer of lq_value anchored at z0:
/// sum_i w_i z_i^2 + (2-q)/2 (2 w_i / q)^{q/(q-2)} + epsilon w_i,
/// w_i = (q/2)(z0_i^2 + epsilon)^{(q-2)/2}.
inline double lq_majorizer_value(const Matrix& z, const Matrix& z0, const TvConfig& cfg) {
    detail::require_dims(z.rows() == z0.rows() && z.cols() == z0.cols(),
                         "lq_majorizer_value: shape mismatch");
    const auto base = z0.array().square() + cfg.epsilon;
    const Eigen::ArrayXXd w = 0.5 * cfg.q * base.pow((cfg.q - 2.0) / 2.0);
    // (2 w / q)^{q/(q-2)} == (z0^2 + eps)^{q/2}
    const Eigen::ArrayXXd anchor_value = base.pow(cfg.q / 2.0);
    return (w * z.array().square() + 0.5 * (2.0 - cfg.q) * anchor_value + cfg.epsilon * w).sum();
}

/// phi(S) = lq(H_x vec S) + lq(H_y vec S).
inline double tv_value(const Matrix& s, const TvConfig& cfg) {
    return lq_value(diff_x(s), cfg) + lq_value(diff_y(s), cfg);
}

inline double tv_majorizer_value(const Matrix& s, const Matrix& anchor, const TvConfig& cfg) {
    return lq_majorizer_value(diff_x(s), diff_x(anchor), cfg) +
           lq_majorizer_value(diff_y(s), diff_y(anchor), cfg);
}

/// Diagonals of U = diag((H_x q)^2 + eps)^{(q-2)/2} and V (same for H_y),
/// stored in image shape.
struct TvWeights {
    Matrix U;
    Matrix V;

    double max_u() const { return U.maxCoeff(); }
    double max_v() const { return V.maxCoeff(); }
};

inline TvWeights tv_weights(const Matrix& s, const TvConfig& cfg) {
    const double e = (cfg.q - 2.0) / 2.0;
    TvWeights w;
    w.U = (diff_x(s).array().square() + cfg.epsilon).pow(e).matrix();
    w.V = (diff_y(s).array().square() + cfg.epsilon).pow(e).matrix();
    return w;
}

/// q (H_x^T U H_x + H_y^T V H_y) vec(S), returned in image shape.
inline Matrix tv_gradient(const Matrix& s, const TvWeights& w, const TvConfig& cfg) {
    const Matrix gx = diff_x_adjoint((w.U.array() * diff_x(s).array()).matrix());
    const Matrix gy = diff_y_adjoint((w.V.array() * diff_y(s).array()).matrix());
    return cfg.q * (gx + gy);
}

} // namespace hsr
