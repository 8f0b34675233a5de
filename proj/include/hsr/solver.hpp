#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "degradation.hpp"
#include "ll1.hpp"
#include "regularizers.hpp"
#include "tensor.hpp"

namespace hsr {

/**
 * Weights and stopping rules shared by the known-operator (SC-LL1) and
 * semi-blind (BSC-LL1) solvers. theta and eta are applied uniformly to all
 * R terms.
 */
struct SolverConfig {
    double lambda = 0.0; // ridge on C
    double theta = 0.0;  // smoothed TV weight
    double eta = 0.0;    // smoothed Schatten-p weight
    SchattenConfig schatten;
    TvConfig tv;
    int max_iters = 300;
    double rel_tol = 1e-4;
    bool accelerate = true;
    std::uint64_t seed = 0;

    static SolverConfig known_defaults() { return {}; }
    static SolverConfig blind_defaults() {
        SolverConfig c;
        c.max_iters = 600;
        return c;
    }

    void validate() const {
        if (!(lambda >= 0.0) || !(theta >= 0.0) || !(eta >= 0.0)) {
            throw ConfigError("solver weights lambda, theta, eta must be >= 0");
        }
        if (max_iters < 0) {
            throw ConfigError("max_iters must be >= 0");
        }
        if (!(rel_tol > 0.0)) {
            throw ConfigError("rel_tol must be > 0");
        }
        schatten.validate();
        tv.validate();
    }
};

struct LipschitzBounds {
    double C = 0.0;
    double S = 0.0;
    double S_tilde = 0.0; // semi-blind only
};

/// Solver output. S is N x R with column r = vec(S_r); the SRI is rebuilt
/// from (S, C) only.
struct FusionReport {
    Matrix S;
    Matrix C;
    Matrix S_tilde; // semi-blind only: HSI-resolution abundances
    Tensor3 sri;
    std::vector<double> objective_trace; // entry 0 is the initialization
    std::vector<double> elapsed_seconds;
    int iterations = 0;
    bool converged = false;
};

/// Optional warm start. Missing blocks are drawn uniform(0, 1).
struct Initialization {
    std::optional<Matrix> S;
    std::optional<Matrix> C;
    std::optional<Matrix> S_tilde;
};

/// Thrown when the objective becomes non-finite; carries the trace so far.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, std::vector<double> trace, std::vector<double> elapsed)
        : NumericalError(what), trace(std::move(trace)), elapsed(std::move(elapsed)) {}

    std::vector<double> trace;
    std::vector<double> elapsed;
};

// ---------------------------------------------------------------------------
// Primitive steps

/// x - step * grad, projected onto the nonnegative orthant when `project`.
inline Matrix apg_step(const Matrix& x, const Matrix& grad, double step, bool project) {
    if (project) {
        return (x - step * grad).cwiseMax(0.0);
    }
    return x - step * grad;
}

inline double next_momentum(double gamma) {
    return (1.0 + std::sqrt(1.0 + 4.0 * gamma * gamma)) / 2.0;
}

/// Nesterov extrapolation: returns (x_new + ((g - 1) / g') (x_new - x_old), g').
inline std::pair<Matrix, double> extrapolate(const Matrix& x_new, const Matrix& x_old,
                                             double gamma_old) {
    const double gamma_new = next_momentum(gamma_old);
    const double beta = (gamma_old - 1.0) / gamma_new;
    return {x_new + beta * (x_new - x_old), gamma_new};
}

namespace detail {

inline double sigma_max_gram(const Matrix& m) {
    // largest eigenvalue of m^T m (or m m^T, whichever is smaller)
    if (m.size() == 0) {
        return 0.0;
    }
    const Matrix g = m.cols() <= m.rows() ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw NumericalError("symmetric eigensolver failed");
    }
    return std::max(0.0, es.eigenvalues().maxCoeff());
}

// Per-term regularizer gradient and curvature terms for stacked maps S
// (N x R, column r = vec(S_r) with S_r of size rows x cols).
struct RegularizerTerms {
    Matrix grad;
    double value = 0.0;
    double max_schatten_weight = 0.0; // max_r sigma_max(W_r)
    double max_u = 0.0;               // max_r max diag(U_r)
    double max_v = 0.0;
};

inline RegularizerTerms regularize(const Matrix& S, Index rows, Index cols, double eta,
                                   double theta, const SolverConfig& cfg, bool with_tv) {
    RegularizerTerms out;
    out.grad = Matrix::Zero(S.rows(), S.cols());
    for (Index r = 0; r < S.cols(); ++r) {
        const Matrix s = S.col(r).reshaped(rows, cols);
        Matrix g = Matrix::Zero(rows, cols);
        if (eta > 0.0) {
            const auto w = schatten_weight(s, cfg.schatten);
            g += eta * schatten_gradient(s, w, cfg.schatten);
            out.value += eta * w.power_trace;
            out.max_schatten_weight = std::max(out.max_schatten_weight, w.max_eigenvalue);
        }
        if (with_tv && theta > 0.0) {
            const auto tw = tv_weights(s, cfg.tv);
            g += theta * tv_gradient(s, tw, cfg.tv);
            out.value += theta * tv_value(s, cfg.tv);
            out.max_u = std::max(out.max_u, tw.max_u());
            out.max_v = std::max(out.max_v, tw.max_v());
        }
        out.grad.col(r) = g.reshaped();
    }
    return out;
}

inline double regularizer_value(const Matrix& S, Index rows, Index cols, double eta, double theta,
                                const SolverConfig& cfg, bool with_tv) {
    double v = 0.0;
    for (Index r = 0; r < S.cols(); ++r) {
        const Matrix s = S.col(r).reshaped(rows, cols);
        if (eta > 0.0) {
            v += eta * schatten_value(s, cfg.schatten);
        }
        if (with_tv && theta > 0.0) {
            v += theta * tv_value(s, cfg.tv);
        }
    }
    return v;
}

inline Matrix uniform_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index c = 0; c < cols; ++c) {
        for (Index r = 0; r < rows; ++r) {
            m(r, c) = uni(rng);
        }
    }
    return m;
}

// 1/L; a zero bound means the block's objective is flat and the step is moot.
inline double step_size(double lipschitz) {
    return lipschitz > 0.0 ? 1.0 / lipschitz : 0.0;
}

inline bool converged(double previous, double current, double rel_tol) {
    const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
    return std::abs(current - previous) / scale < rel_tol;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Known spatial operators

/**
 * HSI/MSI pair with all three degradation operators. Holds the mode-3
 * unfoldings and the operator constants that do not change over iterations.
 */
class KnownProblem {
public:
    KnownProblem(const Tensor3& hsi, const Tensor3& msi, DegradationOps ops)
        : ops_(std::move(ops)) {
        detail::require_dims(hsi.dims() == ops_.hsi_dims(ops_.PM.cols()),
                             "fuse: HSI dims " + hsi.dims().str() + " do not match operators (" +
                                 ops_.hsi_dims(ops_.PM.cols()).str() + ")");
        detail::require_dims(msi.dims() == ops_.msi_dims(), "fuse: MSI dims " + msi.dims().str() +
                                                                " do not match operators (" +
                                                                ops_.msi_dims().str() + ")");
        yh_ = hsi.mode3();
        ym_ = msi.mode3();
        sigma_pm_ = detail::sigma_max_gram(ops_.PM);
        sigma_ph_ = detail::sigma_max_gram(ops_.P1) * detail::sigma_max_gram(ops_.P2);
        diff_norm_x_ = difference_norm(sri_cols());
        diff_norm_y_ = difference_norm(sri_rows());
    }

    const DegradationOps& ops() const { return ops_; }
    const Matrix& hsi_unfolded() const { return yh_; }
    const Matrix& msi_unfolded() const { return ym_; }

    Index sri_rows() const { return ops_.P1.cols(); }
    Index sri_cols() const { return ops_.P2.cols(); }
    Index hsi_rows() const { return ops_.P1.rows(); }
    Index hsi_cols() const { return ops_.P2.rows(); }
    Index bands() const { return ops_.PM.cols(); }
    Index msi_bands() const { return ops_.PM.rows(); }
    Index pixels() const { return sri_rows() * sri_cols(); }

    // sigma_max(PM^T PM), sigma_max(P_H^T P_H) with P_H = P2 kron P1
    double sigma_pm() const { return sigma_pm_; }
    double sigma_ph() const { return sigma_ph_; }
    // sigma_max of the difference operators along columns (H_x) and rows (H_y)
    double diff_norm_x() const { return diff_norm_x_; }
    double diff_norm_y() const { return diff_norm_y_; }

    /// P_H S: column r becomes vec(P1 S_r P2^T).
    Matrix spatial(const Matrix& S) const {
        Matrix out(hsi_rows() * hsi_cols(), S.cols());
        for (Index r = 0; r < S.cols(); ++r) {
            const Matrix s = S.col(r).reshaped(sri_rows(), sri_cols());
            out.col(r) = (ops_.P1 * s * ops_.P2.transpose()).reshaped();
        }
        return out;
    }

    /// P_H^T X: column r becomes vec(P1^T X_r P2).
    Matrix spatial_adjoint(const Matrix& X) const {
        Matrix out(pixels(), X.cols());
        for (Index r = 0; r < X.cols(); ++r) {
            const Matrix x = X.col(r).reshaped(hsi_rows(), hsi_cols());
            out.col(r) = (ops_.P1.transpose() * x * ops_.P2).reshaped();
        }
        return out;
    }

    void check_factors(const Matrix& S, const Matrix& C) const {
        detail::require_dims(S.rows() == pixels() && C.rows() == bands() && S.cols() == C.cols(),
                             "known problem: S must be (I_M*J_M) x R and C K_H x R");
    }

private:
    DegradationOps ops_;
    Matrix yh_;
    Matrix ym_;
    double sigma_pm_ = 0.0;
    double sigma_ph_ = 0.0;
    double diff_norm_x_ = 0.0;
    double diff_norm_y_ = 0.0;
};

/**
 * 1/2 ||Y_H - sum (P1 S_r P2^T) o c_r||^2 + 1/2 ||Y_M - sum S_r o (PM c_r)||^2
 *   + theta sum tv(S_r) + eta sum phi(S_r) + lambda/2 ||C||^2
 */
inline double objective_known(const Matrix& S, const Matrix& C, const KnownProblem& prob,
                              const SolverConfig& cfg) {
    prob.check_factors(S, C);
    const Matrix ps = prob.spatial(S);
    const double fit_h = (prob.hsi_unfolded() - ps * C.transpose()).squaredNorm();
    const double fit_m = (prob.msi_unfolded() - S * (prob.ops().PM * C).transpose()).squaredNorm();
    return 0.5 * fit_h + 0.5 * fit_m +
           detail::regularizer_value(S, prob.sri_rows(), prob.sri_cols(), cfg.eta, cfg.theta, cfg,
                                     true) +
           0.5 * cfg.lambda * C.squaredNorm();
}

/**
 * C (P_H S)^T (P_H S) + PM^T PM C S^T S + lambda C - Y_H^T P_H S - PM^T Y_M^T S
 */
inline Matrix grad_C_known(const Matrix& S, const Matrix& C, const KnownProblem& prob,
                           const SolverConfig& cfg) {
    prob.check_factors(S, C);
    const Matrix ps = prob.spatial(S);
    const Matrix& pm = prob.ops().PM;
    Matrix g = C * (ps.transpose() * ps);
    g.noalias() += pm.transpose() * (pm * C) * (S.transpose() * S);
    g += cfg.lambda * C;
    g.noalias() -= prob.hsi_unfolded().transpose() * ps;
    g.noalias() -= pm.transpose() * (prob.msi_unfolded().transpose() * S);
    return g;
}

/// Gradient in S at anchor S with the Schatten/TV reweighting computed at S.
inline Matrix grad_S_known(const Matrix& S, const Matrix& C, const KnownProblem& prob,
                           const SolverConfig& cfg, const detail::RegularizerTerms* reg = nullptr) {
    prob.check_factors(S, C);
    const Matrix ps = prob.spatial(S);
    const Matrix pmc = prob.ops().PM * C;
    Matrix g = prob.spatial_adjoint(ps * (C.transpose() * C) - prob.hsi_unfolded() * C);
    g.noalias() += S * (pmc.transpose() * pmc) - prob.msi_unfolded() * pmc;
    if (reg != nullptr) {
        g += reg->grad;
    } else {
        g += detail::regularize(S, prob.sri_rows(), prob.sri_cols(), cfg.eta, cfg.theta, cfg, true)
                 .grad;
    }
    return g;
}

inline double lipschitz_C_known(const Matrix& S, const KnownProblem& prob,
                                const SolverConfig& cfg) {
    return detail::sigma_max_gram(S) * (prob.sigma_ph() + prob.sigma_pm()) + cfg.lambda;
}

/**
 * Step-size bounds:
 *   L_C = sigma_max(S)^2 (sigma(P_H^T P_H) + sigma(PM^T PM)) + lambda
 *   L_S = sigma(C^T C) sigma(P_H^T P_H) + sigma(C^T PM^T PM C) + p eta max_r sigma(W_r)
 *         + q theta (sigma(H_J)^2 max_r max U_r + sigma(H_I)^2 max_r max V_r)
 * with the reweighting evaluated at S.
 */
inline LipschitzBounds lipschitz_bounds_known(const Matrix& S, const Matrix& C,
                                              const KnownProblem& prob, const SolverConfig& cfg,
                                              const detail::RegularizerTerms* reg = nullptr) {
    prob.check_factors(S, C);
    std::optional<detail::RegularizerTerms> local;
    if (reg == nullptr) {
        local =
            detail::regularize(S, prob.sri_rows(), prob.sri_cols(), cfg.eta, cfg.theta, cfg, true);
        reg = &*local;
    }
    LipschitzBounds b;
    b.C = lipschitz_C_known(S, prob, cfg);
    b.S = detail::sigma_max_gram(C) * prob.sigma_ph() + detail::sigma_max_gram(prob.ops().PM * C) +
          cfg.schatten.p * cfg.eta * reg->max_schatten_weight +
          cfg.tv.q * cfg.theta *
              (prob.diff_norm_x() * prob.diff_norm_x() * reg->max_u +
               prob.diff_norm_y() * prob.diff_norm_y() * reg->max_v);
    return b;
}

namespace detail {

template <typename Clock>
double seconds_since(typename Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

inline void record(FusionReport& rep, double f, double elapsed) {
    rep.objective_trace.push_back(f);
    rep.elapsed_seconds.push_back(elapsed);
    if (!std::isfinite(f)) {
        throw DivergenceError("objective became non-finite at iteration " +
                                  std::to_string(rep.objective_trace.size() - 1),
                              rep.objective_trace, rep.elapsed_seconds);
    }
}

} // namespace detail

/**
 * SC-LL1: accelerated alternating projected gradient on (C, S) with steps
 * 1/L_C and 1/L_S. Gradients are taken at the extrapolated points when
 * `cfg.accelerate`, at the current iterates otherwise.
 */
inline FusionReport solve_sc_ll1(const Tensor3& hsi, const Tensor3& msi, const DegradationOps& ops,
                                 Index terms, const SolverConfig& cfg,
                                 const Initialization& init = {}) {
    cfg.validate();
    detail::require_dims(terms >= 1, "solve_sc_ll1: R must be >= 1");
    const KnownProblem prob(hsi, msi, ops);
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();

    std::mt19937_64 rng(cfg.seed);
    Matrix C = init.C ? *init.C : detail::uniform_matrix(prob.bands(), terms, rng);
    Matrix S = init.S ? *init.S : detail::uniform_matrix(prob.pixels(), terms, rng);
    prob.check_factors(S, C);
    detail::require_dims(S.cols() == terms, "solve_sc_ll1: initialization has wrong R");

    FusionReport rep;
    detail::record(rep, objective_known(S, C, prob, cfg), detail::seconds_since<Clock>(start));

    Matrix C_check = C;
    Matrix S_check = S;
    double gamma_c = 1.0;
    double gamma_s = 1.0;

    for (int t = 0; t < cfg.max_iters; ++t) {
        // C block: L_C depends on S only
        const double lc = lipschitz_C_known(S, prob, cfg);
        const Matrix C_new =
            apg_step(C_check, grad_C_known(S, C_check, prob, cfg), detail::step_size(lc), true);
        if (cfg.accelerate) {
            std::tie(C_check, gamma_c) = extrapolate(C_new, C, gamma_c);
        } else {
            C_check = C_new;
        }
        C = C_new;

        // S block: reweighting and bounds at the gradient anchor
        const auto reg = detail::regularize(S_check, prob.sri_rows(), prob.sri_cols(), cfg.eta,
                                            cfg.theta, cfg, true);
        const LipschitzBounds ls = lipschitz_bounds_known(S_check, C, prob, cfg, &reg);
        const Matrix S_new = apg_step(S_check, grad_S_known(S_check, C, prob, cfg, &reg),
                                      detail::step_size(ls.S), true);
        if (cfg.accelerate) {
            std::tie(S_check, gamma_s) = extrapolate(S_new, S, gamma_s);
        } else {
            S_check = S_new;
        }
        S = S_new;

        rep.iterations = t + 1;
        detail::record(rep, objective_known(S, C, prob, cfg), detail::seconds_since<Clock>(start));
        const auto n = rep.objective_trace.size();
        if (detail::converged(rep.objective_trace[n - 2], rep.objective_trace[n - 1],
                              cfg.rel_tol)) {
            rep.converged = true;
            break;
        }
    }

    rep.sri = reconstruct(S, C, prob.sri_rows(), prob.sri_cols());
    rep.S = std::move(S);
    rep.C = std::move(C);
    return rep;
}

// ---------------------------------------------------------------------------
// Unknown spatial operators

/**
 * HSI/MSI pair with only the spectral response known. The HSI abundance
 * maps S~_r (I_H x J_H) are free variables absorbing P1 and P2.
 */
class BlindProblem {
public:
    BlindProblem(const Tensor3& hsi, const Tensor3& msi, Matrix pm) : pm_(std::move(pm)) {
        detail::require_dims(pm_.cols() == hsi.bands(), "blind-fuse: PM has " +
                                                            std::to_string(pm_.cols()) +
                                                            " columns but the HSI has " +
                                                            std::to_string(hsi.bands()) + " bands");
        detail::require_dims(pm_.rows() == msi.bands(),
                             "blind-fuse: PM has " + std::to_string(pm_.rows()) +
                                 " rows but the MSI has " + std::to_string(msi.bands()) + " bands");
        hsi_dims_ = hsi.dims();
        msi_dims_ = msi.dims();
        yh_ = hsi.mode3();
        ym_ = msi.mode3();
        sigma_pm_ = detail::sigma_max_gram(pm_);
        diff_norm_x_ = difference_norm(msi_dims_.J);
        diff_norm_y_ = difference_norm(msi_dims_.I);
    }

    const Matrix& PM() const { return pm_; }
    const Matrix& hsi_unfolded() const { return yh_; }
    const Matrix& msi_unfolded() const { return ym_; }
    Index sri_rows() const { return msi_dims_.I; }
    Index sri_cols() const { return msi_dims_.J; }
    Index hsi_rows() const { return hsi_dims_.I; }
    Index hsi_cols() const { return hsi_dims_.J; }
    Index bands() const { return hsi_dims_.K; }
    Index pixels() const { return msi_dims_.spatial(); }
    Index hsi_pixels() const { return hsi_dims_.spatial(); }
    double sigma_pm() const { return sigma_pm_; }
    double diff_norm_x() const { return diff_norm_x_; }
    double diff_norm_y() const { return diff_norm_y_; }

    void check_factors(const Matrix& S, const Matrix& St, const Matrix& C) const {
        detail::require_dims(S.rows() == pixels() && St.rows() == hsi_pixels() &&
                                 C.rows() == bands() && S.cols() == C.cols() &&
                                 St.cols() == C.cols(),
                             "blind problem: S, S~, C shapes do not conform");
    }

private:
    Matrix pm_;
    Dims3 hsi_dims_;
    Dims3 msi_dims_;
    Matrix yh_;
    Matrix ym_;
    double sigma_pm_ = 0.0;
    double diff_norm_x_ = 0.0;
    double diff_norm_y_ = 0.0;
};

/**
 * 1/2 ||Y_H - sum S~_r o c_r||^2 + 1/2 ||Y_M - sum S_r o (PM c_r)||^2
 *   + eta sum (phi(S_r) + phi(S~_r)) + theta sum tv(S_r) + lambda/2 ||C||^2
 */
inline double objective_blind(const Matrix& S, const Matrix& St, const Matrix& C,
                              const BlindProblem& prob, const SolverConfig& cfg) {
    prob.check_factors(S, St, C);
    const double fit_h = (prob.hsi_unfolded() - St * C.transpose()).squaredNorm();
    const double fit_m = (prob.msi_unfolded() - S * (prob.PM() * C).transpose()).squaredNorm();
    return 0.5 * fit_h + 0.5 * fit_m +
           detail::regularizer_value(S, prob.sri_rows(), prob.sri_cols(), cfg.eta, cfg.theta, cfg,
                                     true) +
           detail::regularizer_value(St, prob.hsi_rows(), prob.hsi_cols(), cfg.eta, 0.0, cfg,
                                     false) +
           0.5 * cfg.lambda * C.squaredNorm();
}

inline Matrix grad_C_blind(const Matrix& S, const Matrix& St, const Matrix& C,
                           const BlindProblem& prob, const SolverConfig& cfg) {
    prob.check_factors(S, St, C);
    const Matrix& pm = prob.PM();
    Matrix g = C * (St.transpose() * St);
    g.noalias() += pm.transpose() * (pm * C) * (S.transpose() * S);
    g += cfg.lambda * C;
    g.noalias() -= prob.hsi_unfolded().transpose() * St;
    g.noalias() -= pm.transpose() * (prob.msi_unfolded().transpose() * S);
    return g;
}

/// No HSI term: S only couples to the data through the MSI.
inline Matrix grad_S_blind(const Matrix& S, const Matrix& St, const Matrix& C,
                           const BlindProblem& prob, const SolverConfig& cfg,
                           const detail::RegularizerTerms* reg = nullptr) {
    prob.check_factors(S, St, C);
    const Matrix pmc = prob.PM() * C;
    Matrix g = S * (pmc.transpose() * pmc) - prob.msi_unfolded() * pmc;
    if (reg != nullptr) {
        g += reg->grad;
    } else {
        g += detail::regularize(S, prob.sri_rows(), prob.sri_cols(), cfg.eta, cfg.theta, cfg, true)
                 .grad;
    }
    return g;
}

/// (S~ C^T - Y_H) C + p eta vec(W~_r S~_r); no TV on S~.
inline Matrix grad_Stilde_blind(const Matrix& S, const Matrix& St, const Matrix& C,
                                const BlindProblem& prob, const SolverConfig& cfg,
                                const detail::RegularizerTerms* reg = nullptr) {
    prob.check_factors(S, St, C);
    Matrix g = St * (C.transpose() * C) - prob.hsi_unfolded() * C;
    if (reg != nullptr) {
        g += reg->grad;
    } else {
        g +=
            detail::regularize(St, prob.hsi_rows(), prob.hsi_cols(), cfg.eta, 0.0, cfg, false).grad;
    }
    return g;
}

/**
 *   L_C  = sigma(PM^T PM) sigma_max(S)^2 + sigma_max(S~)^2 + lambda
 *   L_S  = sigma(C^T PM^T PM C) + p eta max_r sigma(W_r)
 *          + q theta (sigma(H_J)^2 max U + sigma(H_I)^2 max V)
 *   L_S~ = sigma(C^T C) + p eta max_r sigma(W~_r)
 */
inline double lipschitz_C_blind(const Matrix& S, const Matrix& St, const BlindProblem& prob,
                                const SolverConfig& cfg) {
    return prob.sigma_pm() * detail::sigma_max_gram(S) + detail::sigma_max_gram(St) + cfg.lambda;
}

inline double lipschitz_S_blind(const Matrix& C, const BlindProblem& prob, const SolverConfig& cfg,
                                const detail::RegularizerTerms& reg) {
    return detail::sigma_max_gram(prob.PM() * C) +
           cfg.schatten.p * cfg.eta * reg.max_schatten_weight +
           cfg.tv.q * cfg.theta *
               (prob.diff_norm_x() * prob.diff_norm_x() * reg.max_u +
                prob.diff_norm_y() * prob.diff_norm_y() * reg.max_v);
}

inline double lipschitz_Stilde_blind(const Matrix& C, const SolverConfig& cfg,
                                     const detail::RegularizerTerms& reg_t) {
    return detail::sigma_max_gram(C) + cfg.schatten.p * cfg.eta * reg_t.max_schatten_weight;
}

inline LipschitzBounds lipschitz_bounds_blind(const Matrix& S, const Matrix& St, const Matrix& C,
                                              const BlindProblem& prob, const SolverConfig& cfg) {
    prob.check_factors(S, St, C);
    const auto reg =
        detail::regularize(S, prob.sri_rows(), prob.sri_cols(), cfg.eta, cfg.theta, cfg, true);
    const auto reg_t =
        detail::regularize(St, prob.hsi_rows(), prob.hsi_cols(), cfg.eta, 0.0, cfg, false);
    return {lipschitz_C_blind(S, St, prob, cfg), lipschitz_S_blind(C, prob, cfg, reg),
            lipschitz_Stilde_blind(C, cfg, reg_t)};
}

/**
 * BSC-LL1: three-block accelerated APG over C (projected), S (projected)
 * and S~ (unconstrained). Output SRI is rebuilt from (S, C).
 */
inline FusionReport solve_bsc_ll1(const Tensor3& hsi, const Tensor3& msi, const Matrix& pm,
                                  Index terms, const SolverConfig& cfg,
                                  const Initialization& init = {}) {
    cfg.validate();
    detail::require_dims(terms >= 1, "solve_bsc_ll1: R must be >= 1");
    const BlindProblem prob(hsi, msi, pm);
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();

    std::mt19937_64 rng(cfg.seed);
    Matrix C = init.C ? *init.C : detail::uniform_matrix(prob.bands(), terms, rng);
    Matrix S = init.S ? *init.S : detail::uniform_matrix(prob.pixels(), terms, rng);
    Matrix St =
        init.S_tilde ? *init.S_tilde : detail::uniform_matrix(prob.hsi_pixels(), terms, rng);
    prob.check_factors(S, St, C);
    detail::require_dims(S.cols() == terms, "solve_bsc_ll1: initialization has wrong R");

    FusionReport rep;
    detail::record(rep, objective_blind(S, St, C, prob, cfg), detail::seconds_since<Clock>(start));

    Matrix C_check = C;
    Matrix S_check = S;
    Matrix St_bar = St;
    double gamma_c = 1.0;
    double gamma_s = 1.0;
    double gamma_t = 1.0;

    for (int t = 0; t < cfg.max_iters; ++t) {
        const double lc = lipschitz_C_blind(S, St, prob, cfg);
        const Matrix C_new =
            apg_step(C_check, grad_C_blind(S, St, C_check, prob, cfg), detail::step_size(lc), true);
        if (cfg.accelerate) {
            std::tie(C_check, gamma_c) = extrapolate(C_new, C, gamma_c);
        } else {
            C_check = C_new;
        }
        C = C_new;

        const auto reg = detail::regularize(S_check, prob.sri_rows(), prob.sri_cols(), cfg.eta,
                                            cfg.theta, cfg, true);
        const double ls = lipschitz_S_blind(C, prob, cfg, reg);
        const Matrix S_new = apg_step(S_check, grad_S_blind(S_check, St, C, prob, cfg, &reg),
                                      detail::step_size(ls), true);
        if (cfg.accelerate) {
            std::tie(S_check, gamma_s) = extrapolate(S_new, S, gamma_s);
        } else {
            S_check = S_new;
        }
        S = S_new;

        const auto reg_t =
            detail::regularize(St_bar, prob.hsi_rows(), prob.hsi_cols(), cfg.eta, 0.0, cfg, false);
        const double lt = lipschitz_Stilde_blind(C, cfg, reg_t);
        const Matrix St_new = apg_step(St_bar, grad_Stilde_blind(S, St_bar, C, prob, cfg, &reg_t),
                                       detail::step_size(lt), false);
        if (cfg.accelerate) {
            std::tie(St_bar, gamma_t) = extrapolate(St_new, St, gamma_t);
        } else {
            St_bar = St_new;
        }
        St = St_new;

        rep.iterations = t + 1;
        detail::record(rep, objective_blind(S, St, C, prob, cfg),
                       detail::seconds_since<Clock>(start));
        const auto n = rep.objective_trace.size();
        if (detail::converged(rep.objective_trace[n - 2], rep.objective_trace[n - 1],
                              cfg.rel_tol)) {
            rep.converged = true;
            break;
        }
    }

    rep.sri = reconstruct(S, C, prob.sri_rows(), prob.sri_cols());
    rep.S = std::move(S);
    rep.C = std::move(C);
    rep.S_tilde = std::move(St);
    return rep;
}

} // namespace hsr
