#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "tensor.hpp"

namespace hsr {

enum class Boundary { circular, reflect };

/// 1-D Gaussian blur followed by decimation. The 2-D blur is separable: the
/// same kernel is applied along rows (P1) and columns (P2).
struct BlurSpec {
    Index kernel_width = 9;
    double sigma = 2.0;
    Index ratio = 4;
    Boundary boundary = Boundary::circular;
    Index offset = 0; // sampling phase within each block of `ratio` pixels

    void validate() const {
        if (kernel_width < 1 || kernel_width % 2 == 0) {
            throw ConfigError("BlurSpec: kernel width must be odd and positive, got " +
                              std::to_string(kernel_width));
        }
        if (!(sigma > 0.0) || !std::isfinite(sigma)) {
            throw ConfigError("BlurSpec: sigma must be positive");
        }
        if (ratio < 1) {
            throw ConfigError("BlurSpec: ratio must be >= 1");
        }
        if (offset < 0 || offset >= ratio) {
            throw ConfigError("BlurSpec: offset must lie in [0, ratio)");
        }
    }

    /// Normalized taps g(-h..h), h = (width - 1) / 2.
    std::vector<double> kernel() const {
        const Index h = (kernel_width - 1) / 2;
        std::vector<double> taps(static_cast<std::size_t>(kernel_width));
        double sum = 0.0;
        for (Index t = -h; t <= h; ++t) {
            const double v = std::exp(-static_cast<double>(t * t) / (2.0 * sigma * sigma));
            taps[static_cast<std::size_t>(t + h)] = v;
            sum += v;
        }
        for (auto& v : taps) {
            v /= sum;
        }
        return taps;
    }
};

namespace detail {

inline Index boundary_index(Index c, Index n, Boundary b) {
    if (b == Boundary::circular) {
        return ((c % n) + n) % n;
    }
    // half-sample symmetric: -1 -> 0, n -> n-1
    const Index period = 2 * n;
    Index m = ((c % period) + period) % period;
    return m < n ? m : period - 1 - m;
}

inline double smallest_singular_value(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    return s.size() == 0 ? 0.0 : s[s.size() - 1];
}

} // namespace detail

/**
 * Blur-and-decimate operator of size ceil((n - offset) / ratio) x n. Row i is
 * the normalized Gaussian kernel centred on column offset + i * ratio, with
 * taps that fall outside [0, n) wrapped or reflected per `spec.boundary`.
 */
inline Matrix build_spatial_op(Index n, const BlurSpec& spec) {
    spec.validate();
    if (n < spec.kernel_width) {
        throw DimensionError("build_spatial_op: n=" + std::to_string(n) +
                             " is smaller than the kernel width " +
                             std::to_string(spec.kernel_width));
    }
    const auto taps = spec.kernel();
    const Index h = (spec.kernel_width - 1) / 2;
    const Index rows = (n - spec.offset + spec.ratio - 1) / spec.ratio;
    Matrix p = Matrix::Zero(rows, n);
    for (Index i = 0; i < rows; ++i) {
        const Index centre = spec.offset + i * spec.ratio;
        for (Index t = -h; t <= h; ++t) {
            p(i, detail::boundary_index(centre + t, n, spec.boundary)) +=
                taps[static_cast<std::size_t>(t + h)];
        }
    }
    return p;
}

/// Inclusive band range [first, last].
using BandRange = std::pair<Index, Index>;

/// Row m averages the SRI bands in ranges[m] with equal weights.
inline Matrix build_spectral_op(const std::vector<BandRange>& ranges, Index bands) {
    if (ranges.empty()) {
        throw ConfigError("build_spectral_op: no band ranges");
    }
    Matrix pm = Matrix::Zero(static_cast<Index>(ranges.size()), bands);
    for (std::size_t m = 0; m < ranges.size(); ++m) {
        const auto [first, last] = ranges[m];
        if (first < 0 || last >= bands || first > last) {
            throw ConfigError("build_spectral_op: range [" + std::to_string(first) + "," +
                              std::to_string(last) + "] invalid for " + std::to_string(bands) +
                              " bands");
        }
        const double w = 1.0 / static_cast<double>(last - first + 1);
        pm.row(static_cast<Index>(m)).segment(first, last - first + 1).setConstant(w);
    }
    return pm;
}

/// Spatial operators P1 (I_H x I_M), P2 (J_H x J_M) and the spectral response
/// PM (K_M x K_H). All three must have full row rank.
struct DegradationOps {
    Matrix P1;
    Matrix P2;
    Matrix PM;

    DegradationOps() = default;
    DegradationOps(Matrix p1, Matrix p2, Matrix pm)
        : P1(std::move(p1)), P2(std::move(p2)), PM(std::move(pm)) {
        validate();
    }

    static constexpr double rank_tolerance = 1e-10;

    void validate() const {
        auto check = [](const Matrix& m, const char* name) {
            detail::require_dims(m.rows() > 0 && m.rows() <= m.cols(),
                                 std::string(name) + " must be wide (rows <= cols)");
            if (!(detail::smallest_singular_value(m) > rank_tolerance)) {
                throw NumericalError(std::string(name) + " is not of full row rank");
            }
        };
        check(P1, "P1");
        check(P2, "P2");
        check(PM, "PM");
    }

    Dims3 hsi_dims(Index bands) const { return {P1.rows(), P2.rows(), bands}; }
    Dims3 msi_dims() const { return {P1.cols(), P2.cols(), PM.rows()}; }
    Dims3 sri_dims() const { return {P1.cols(), P2.cols(), PM.cols()}; }
};

/// HSI slabs: Y_H(:, :, k) = P1 Y_S(:, :, k) P2^T.
inline Tensor3 degrade_spatial(const Tensor3& sri, const Matrix& P1, const Matrix& P2) {
    detail::require_dims(P1.cols() == sri.rows() && P2.cols() == sri.cols(),
                         "degrade_spatial: operators do not match SRI " + sri.dims().str());
    Tensor3 hsi(P1.rows(), P2.rows(), sri.bands());
    for (Index k = 0; k < sri.bands(); ++k) {
        hsi.slab(k).noalias() = P1 * sri.slab(k) * P2.transpose();
    }
    return hsi;
}

inline Tensor3 degrade_spatial(const Tensor3& sri, const DegradationOps& ops) {
    return degrade_spatial(sri, ops.P1, ops.P2);
}

/// MSI fibers: Y_M(i, j, :) = PM Y_S(i, j, :).
inline Tensor3 degrade_spectral(const Tensor3& sri, const Matrix& PM) {
    detail::require_dims(PM.cols() == sri.bands(),
                         "degrade_spectral: PM has " + std::to_string(PM.cols()) +
                             " columns, SRI has " + std::to_string(sri.bands()) + " bands");
    Tensor3 msi(sri.rows(), sri.cols(), PM.rows());
    msi.mode3().noalias() = sri.mode3() * PM.transpose();
    return msi;
}

inline Tensor3 degrade_spectral(const Tensor3& sri, const DegradationOps& ops) {
    return degrade_spectral(sri, ops.PM);
}

/// Pass as snr_db to leave the tensor untouched.
inline constexpr double noiseless = std::numeric_limits<double>::infinity();

/**
 * Add i.i.d. Gaussian noise scaled so that the realized SNR,
 * 10 log10(||t||^2 / ||n||^2), equals snr_db.
 */
inline Tensor3 add_noise(const Tensor3& t, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0) {
        return t;
    }
    if (!std::isfinite(snr_db)) {
        throw ConfigError("add_noise: SNR must be finite or +inf");
    }
    const double signal = frobenius_norm(t);
    if (!(signal > 0.0)) {
        throw NumericalError("add_noise: zero-signal tensor");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector noise(t.size());
    for (Index i = 0; i < noise.size(); ++i) {
        noise[i] = gauss(rng);
    }
    noise *= signal / (noise.norm() * std::pow(10.0, snr_db / 20.0));
    return Tensor3(t.dims(), t.data() + noise);
}

} // namespace hsr
