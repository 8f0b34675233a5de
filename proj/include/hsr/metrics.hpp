#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "tensor.hpp"

namespace hsr {

/**
 * Quality of an SRI estimate against a reference.
 *
 *   rsnr_db  10 log10(||ref||^2 / ||ref - est||^2), +inf for a perfect estimate
 *   rmse     ||ref - est||_F / sqrt(IJK)
 *   sam_rad  mean spectral angle over pixels with nonzero fibers
 *   ergas    100 / ratio * sqrt(mean_k rmse_k^2 / mu_k^2)
 *   cc       mean per-band Pearson correlation
 *   ssim     mean per-band SSIM, 8x8 uniform windows, c1 = (0.01 D)^2,
 *            c2 = (0.03 D)^2 with D the reference dynamic range
 *   uiqi     mean per-band Q index over 10x10 windows
 */
struct MetricReport {
    double rsnr_db = 0.0;
    double ssim = 0.0;
    double cc = 0.0;
    double uiqi = 0.0;
    double rmse = 0.0;
    double ergas = 0.0;
    double sam_rad = 0.0;
    Index sam_skipped_pixels = 0;
};

struct BandMetrics {
    double rsnr_db = 0.0;
    double ssim = 0.0;
    double uiqi = 0.0;
    double rmse = 0.0;
};

inline constexpr Index ssim_window = 8;
inline constexpr Index uiqi_window = 10;

namespace detail {

struct WindowStats {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double var_x = 0.0;
    double var_y = 0.0;
    double cov = 0.0;
};

inline WindowStats window_stats(const Eigen::Ref<const Matrix>& x,
                                const Eigen::Ref<const Matrix>& y) {
    const double n = static_cast<double>(x.size());
    WindowStats s;
    s.mean_x = x.mean();
    s.mean_y = y.mean();
    const auto dx = x.array() - s.mean_x;
    const auto dy = y.array() - s.mean_y;
    s.var_x = dx.square().sum() / n;
    s.var_y = dy.square().sum() / n;
    s.cov = (dx * dy).sum() / n;
    return s;
}

inline double band_ssim(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                        double dynamic_range) {
    const double c1 = std::pow(0.01 * dynamic_range, 2);
    const double c2 = std::pow(0.03 * dynamic_range, 2);
    const Index wi = std::min(ssim_window, x.rows());
    const Index wj = std::min(ssim_window, x.cols());
    double total = 0.0;
    Index count = 0;
    for (Index j = 0; j + wj <= x.cols(); ++j) {
        for (Index i = 0; i + wi <= x.rows(); ++i) {
            const auto s = window_stats(x.block(i, j, wi, wj), y.block(i, j, wi, wj));
            const double num = (2 * s.mean_x * s.mean_y + c1) * (2 * s.cov + c2);
            const double den =
                (s.mean_x * s.mean_x + s.mean_y * s.mean_y + c1) * (s.var_x + s.var_y + c2);
            if (den > 0.0) {
                total += num / den;
                ++count;
            } else if (x.block(i, j, wi, wj) == y.block(i, j, wi, wj)) {
                // zero dynamic range and identical windows
                total += 1.0;
                ++count;
            }
        }
    }
    return count > 0 ? total / static_cast<double>(count) : 1.0;
}

// Q = 4 cov mu_x mu_y / ((var_x + var_y)(mu_x^2 + mu_y^2)). Windows with a
// vanishing denominator are skipped; returns NaN if every window is skipped.
inline double band_uiqi(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) {
    const Index wi = std::min(uiqi_window, x.rows());
    const Index wj = std::min(uiqi_window, x.cols());
    double total = 0.0;
    Index count = 0;
    for (Index j = 0; j + wj <= x.cols(); ++j) {
        for (Index i = 0; i + wi <= x.rows(); ++i) {
            const auto s = window_stats(x.block(i, j, wi, wj), y.block(i, j, wi, wj));
            const double den = (s.var_x + s.var_y) * (s.mean_x * s.mean_x + s.mean_y * s.mean_y);
            if (den > 0.0) {
                total += 4.0 * s.cov * s.mean_x * s.mean_y / den;
                ++count;
            }
        }
    }
    return count > 0 ? total / static_cast<double>(count)
                     : std::numeric_limits<double>::quiet_NaN();
}

inline double band_correlation(const Eigen::Ref<const Matrix>& x,
                               const Eigen::Ref<const Matrix>& y) {
    const auto s = window_stats(x, y);
    const double den = std::sqrt(s.var_x * s.var_y);
    return den > 0.0 ? s.cov / den : std::numeric_limits<double>::quiet_NaN();
}

// Mean of the finite entries; `fallback` when there are none (all bands
// degenerate, e.g. constant images).
inline double finite_mean(const std::vector<double>& v, double fallback) {
    double sum = 0.0;
    Index n = 0;
    for (double x : v) {
        if (std::isfinite(x)) {
            sum += x;
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : fallback;
}

// Angle between two nonzero vectors, accurate near 0 and pi.
inline double vector_angle(const Vector& a, const Vector& b) {
    const Vector ua = a / a.norm();
    const Vector ub = b / b.norm();
    return 2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm());
}

inline double rsnr(double signal_energy, double error_energy) {
    if (error_energy == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(signal_energy / error_energy);
}

inline void check_pair(const Tensor3& reference, const Tensor3& estimate) {
    require_dims(reference.dims() == estimate.dims(), "metrics: reference " +
                                                          reference.dims().str() + " vs estimate " +
                                                          estimate.dims().str());
}

} // namespace detail

/// One row per spectral band.
inline std::vector<BandMetrics> per_band_curves(const Tensor3& reference, const Tensor3& estimate) {
    detail::check_pair(reference, estimate);
    const double range = reference.data().maxCoeff() - reference.data().minCoeff();
    std::vector<BandMetrics> rows;
    rows.reserve(static_cast<std::size_t>(reference.bands()));
    for (Index k = 0; k < reference.bands(); ++k) {
        const auto x = reference.slab(k);
        const auto y = estimate.slab(k);
        const double err = (x - y).squaredNorm();
        BandMetrics b;
        b.rsnr_db = detail::rsnr(x.squaredNorm(), err);
        b.rmse = std::sqrt(err / static_cast<double>(x.size()));
        b.ssim = detail::band_ssim(x, y, range);
        b.uiqi = detail::band_uiqi(x, y);
        if (!std::isfinite(b.uiqi)) {
            b.uiqi = (x == y) ? 1.0 : 0.0;
        }
        rows.push_back(b);
    }
    return rows;
}

inline MetricReport evaluate(const Tensor3& reference, const Tensor3& estimate, Index ratio) {
    detail::check_pair(reference, estimate);
    detail::require_dims(ratio >= 1, "metrics: ratio must be >= 1");
    const double signal = reference.data().squaredNorm();
    if (!(signal > 0.0)) {
        throw NumericalError("metrics: reference tensor has zero norm");
    }
    const double err = (reference.data() - estimate.data()).squaredNorm();
    const Index I = reference.rows();
    const Index J = reference.cols();
    const Index K = reference.bands();

    MetricReport m;
    m.rsnr_db = detail::rsnr(signal, err);
    m.rmse = std::sqrt(err / static_cast<double>(reference.size()));

    // SAM
    double angle_sum = 0.0;
    Index pixels = 0;
    const auto ref3 = reference.mode3();
    const auto est3 = estimate.mode3();
    for (Index l = 0; l < I * J; ++l) {
        const Vector a = ref3.row(l).transpose();
        const Vector b = est3.row(l).transpose();
        if (a.norm() == 0.0 || b.norm() == 0.0) {
            ++m.sam_skipped_pixels;
            continue;
        }
        angle_sum += detail::vector_angle(a, b);
        ++pixels;
    }
    m.sam_rad = pixels > 0 ? angle_sum / static_cast<double>(pixels) : 0.0;

    // ERGAS, bands with zero reference mean are left out
    double ergas_sum = 0.0;
    Index ergas_bands = 0;
    std::vector<double> cc(static_cast<std::size_t>(K));
    std::vector<double> ssim(static_cast<std::size_t>(K));
    std::vector<double> uiqi(static_cast<std::size_t>(K));
    const double range = reference.data().maxCoeff() - reference.data().minCoeff();
    for (Index k = 0; k < K; ++k) {
        const auto x = reference.slab(k);
        const auto y = estimate.slab(k);
        const double mu = x.mean();
        const double band_mse = (x - y).squaredNorm() / static_cast<double>(I * J);
        if (mu != 0.0) {
            ergas_sum += band_mse / (mu * mu);
            ++ergas_bands;
        }
        const auto kk = static_cast<std::size_t>(k);
        cc[kk] = detail::band_correlation(x, y);
        ssim[kk] = detail::band_ssim(x, y, range);
        uiqi[kk] = detail::band_uiqi(x, y);
    }
    m.ergas = ergas_bands > 0 ? 100.0 / static_cast<double>(ratio) *
                                    std::sqrt(ergas_sum / static_cast<double>(ergas_bands))
                              : 0.0;
    const double degenerate = err == 0.0 ? 1.0 : 0.0;
    m.cc = detail::finite_mean(cc, degenerate);
    m.ssim = detail::finite_mean(ssim, degenerate);
    m.uiqi = detail::finite_mean(uiqi, degenerate);
    return m;
}

} // namespace hsr
