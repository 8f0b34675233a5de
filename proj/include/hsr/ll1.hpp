#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace hsr {

/**
 * Factors of a rank-(L, L, 1) block-term decomposition
 *
 *     Y = sum_r S_r o C(:, r),   S_r = A_r B_r^T  (when A_r, B_r are known).
 *
 * S_r are the abundance maps (I x J) and the columns of C the spectral
 * signatures (K x R).
 */
struct LL1Factors {
    Index term_rank = 0;                            // L, uniform over terms
    std::vector<Matrix> abundance;                  // S_r
    Matrix spectra;                                 // C
    std::optional<std::vector<Matrix>> row_factors; // A_r (I x L)
    std::optional<std::vector<Matrix>> col_factors; // B_r (J x L)

    Index terms() const { return static_cast<Index>(abundance.size()); }

    Dims3 dims() const {
        if (abundance.empty()) {
            return {};
        }
        return {abundance.front().rows(), abundance.front().cols(), spectra.rows()};
    }

    void validate() const {
        detail::require_dims(!abundance.empty(), "LL1Factors: no terms");
        detail::require_dims(spectra.cols() == terms(),
                             "LL1Factors: C must have one column per term");
        for (const auto& s : abundance) {
            detail::require_dims(s.rows() == abundance.front().rows() &&
                                     s.cols() == abundance.front().cols(),
                                 "LL1Factors: abundance maps differ in size");
        }
    }

    bool nonnegative() const {
        if ((spectra.array() < 0.0).any()) {
            return false;
        }
        return std::all_of(abundance.begin(), abundance.end(),
                           [](const Matrix& s) { return (s.array() >= 0.0).all(); });
    }

    /// N x R matrix whose column r is vec(S_r).
    Matrix stacked_abundance() const {
        validate();
        const Index n = abundance.front().size();
        Matrix s(n, terms());
        for (Index r = 0; r < terms(); ++r) {
            s.col(r) = abundance[r].reshaped();
        }
        return s;
    }
};

/// Y(i, j, k) = sum_r S_r(i, j) C(k, r), computed as refold(S~ C^T).
inline Tensor3 reconstruct(const Matrix& stacked, const Matrix& spectra, Index I, Index J) {
    detail::require_dims(stacked.rows() == I * J && stacked.cols() == spectra.cols(),
                         "reconstruct: abundance/spectra shapes do not conform");
    Tensor3 y(I, J, spectra.rows());
    y.mode3().noalias() = stacked * spectra.transpose();
    return y;
}

inline Tensor3 reconstruct(const LL1Factors& f) {
    f.validate();
    const Dims3 d = f.dims();
    return reconstruct(f.stacked_abundance(), f.spectra, d.I, d.J);
}

/**
 * Draw random LL1 factors. A_r, B_r and C are i.i.d. uniform(0, 1) when
 * `nonneg`, standard normal otherwise; S_r = A_r B_r^T.
 */
inline LL1Factors random_ll1(Dims3 dims, Index terms, Index term_rank, std::uint64_t seed,
                             bool nonneg) {
    detail::require_dims(dims.I > 0 && dims.J > 0 && dims.K > 0 && terms > 0 && term_rank > 0,
                         "random_ll1: sizes must be positive");
    detail::require_dims(term_rank <= std::min(dims.I, dims.J),
                         "random_ll1: L=" + std::to_string(term_rank) +
                             " exceeds min(I, J) for dims " + dims.str());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto fill = [&](Matrix& m) {
        for (Index c = 0; c < m.cols(); ++c) {
            for (Index r = 0; r < m.rows(); ++r) {
                m(r, c) = nonneg ? uni(rng) : gauss(rng);
            }
        }
    };

    LL1Factors f;
    f.term_rank = term_rank;
    f.row_factors.emplace();
    f.col_factors.emplace();
    for (Index r = 0; r < terms; ++r) {
        Matrix a(dims.I, term_rank);
        Matrix b(dims.J, term_rank);
        fill(a);
        fill(b);
        f.abundance.push_back(a * b.transpose());
        f.row_factors->push_back(std::move(a));
        f.col_factors->push_back(std::move(b));
    }
    f.spectra.resize(dims.K, terms);
    fill(f.spectra);
    return f;
}

struct RecoverabilityQuery {
    Index msi_rows = 0;  // I_M
    Index msi_cols = 0;  // J_M
    Index hsi_rows = 0;  // I_H
    Index hsi_cols = 0;  // J_H
    Index msi_bands = 0; // K_M
    Index term_rank = 0; // L
    Index terms = 0;     // R
    bool blind = false;
};

struct RecoverabilityResult {
    bool satisfied = false;
    std::vector<std::string> failed_conditions;
};

/**
 * Sufficient conditions for unique SRI recovery with generic LL1 factors.
 *
 * Known spatial operators:
 *   I_M J_M >= L^2 R,  I_H J_H >= L R,
 *   min(floor(I_M/L), R) + min(floor(J_M/L), R) + min(K_M, R) >= 2R + 2.
 * Unknown spatial operators (blind):
 *   K_M >= 2,  I_H J_H >= L^2 R,
 *   min(floor(I_H/L), R) + min(floor(J_H/L), R) + min(K_M, R) >= 2R + 2.
 *
 * Every violated condition is reported by name.
 */
inline RecoverabilityResult check_recoverability(const RecoverabilityQuery& q) {
    const Index L = q.term_rank;
    const Index R = q.terms;
    RecoverabilityResult out;
    auto need = [&](bool ok, const char* name) {
        if (!ok) {
            out.failed_conditions.emplace_back(name);
        }
    };
    if (L <= 0 || R <= 0 || q.msi_rows <= 0 || q.msi_cols <= 0 || q.hsi_rows <= 0 ||
        q.hsi_cols <= 0 || q.msi_bands <= 0) {
        out.failed_conditions.emplace_back("all sizes positive");
        return out;
    }

    auto kruskal_sum = [&](Index rows, Index cols) {
        return std::min(rows / L, R) + std::min(cols / L, R) + std::min(q.msi_bands, R);
    };

    if (!q.blind) {
        need(q.msi_rows * q.msi_cols >= L * L * R, "I_M*J_M >= L^2*R");
        need(q.hsi_rows * q.hsi_cols >= L * R, "I_H*J_H >= L*R");
        need(kruskal_sum(q.msi_rows, q.msi_cols) >= 2 * R + 2,
             "min(floor(I_M/L),R) + min(floor(J_M/L),R) + min(K_M,R) >= 2R+2");
    } else {
        need(q.msi_bands >= 2, "K_M >= 2");
        need(q.hsi_rows * q.hsi_cols >= L * L * R, "I_H*J_H >= L^2*R");
        need(kruskal_sum(q.hsi_rows, q.hsi_cols) >= 2 * R + 2,
             "min(floor(I_H/L),R) + min(floor(J_H/L),R) + min(K_M,R) >= 2R+2");
    }
    out.satisfied = out.failed_conditions.empty();
    return out;
}

} // namespace hsr
