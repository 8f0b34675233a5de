#include <gtest/gtest.h>

#include <numbers>

#include "test_support.hpp"

using namespace hsr;
using hsr::testing::Gen;

namespace {

void check_ranges(const MetricReport& m) {
    EXPECT_GE(m.rmse, 0.0);
    EXPECT_GE(m.ergas, 0.0);
    EXPECT_GE(m.sam_rad, 0.0);
    EXPECT_LE(m.sam_rad, std::numbers::pi);
    for (double v : {m.ssim, m.cc, m.uiqi}) {
        EXPECT_GE(v, -1.0 - 1e-12);
        EXPECT_LE(v, 1.0 + 1e-12);
    }
    EXPECT_TRUE(std::isfinite(m.rsnr_db));
}

} // namespace

TEST(Evaluate, IdenticalTensorsArePerfect) {
    Gen g(1);
    const Tensor3 ref = g.positive_tensor({12, 11, 5});
    const auto m = evaluate(ref, ref, 4);
    EXPECT_EQ(m.rmse, 0.0);
    EXPECT_EQ(m.sam_rad, 0.0);
    EXPECT_EQ(m.ergas, 0.0);
    EXPECT_DOUBLE_EQ(m.cc, 1.0);
    EXPECT_DOUBLE_EQ(m.ssim, 1.0);
    EXPECT_DOUBLE_EQ(m.uiqi, 1.0);
    EXPECT_TRUE(std::isinf(m.rsnr_db) && m.rsnr_db > 0);
}

TEST(Evaluate, RsnrInvertsNoiseCalibration) {
    Gen g(2);
    for (double snr : {5.0, 20.0, 35.0}) {
        const Tensor3 ref = g.tensor({9, 8, 6});
        EXPECT_NEAR(evaluate(ref, add_noise(ref, snr, 7), 1).rsnr_db, snr, 1e-9);
    }
}

TEST(Evaluate, HandEnumeratedTwoByTwoByTwo) {
    // fibers (ref -> est): (1,1)->(1,0), (2,0)->(2,0), (3,0)->(0,3), (4,4)->(4,4)
    Tensor3 ref(2, 2, 2), est(2, 2, 2);
    auto set = [](Tensor3& t, Index i, Index j, double a, double b) {
        t(i, j, 0) = a;
        t(i, j, 1) = b;
    };
    set(ref, 0, 0, 1, 1);
    set(est, 0, 0, 1, 0);
    set(ref, 1, 0, 2, 0);
    set(est, 1, 0, 2, 0);
    set(ref, 0, 1, 3, 0);
    set(est, 0, 1, 0, 3);
    set(ref, 1, 1, 4, 4);
    set(est, 1, 1, 4, 4);
    const auto m = evaluate(ref, est, 1);
    // squared errors 1 + 0 + 18 + 0 over 8 entries
    EXPECT_NEAR(m.rmse, std::sqrt(19.0 / 8.0), 1e-15);
    // angles pi/4, 0, pi/2, 0
    EXPECT_NEAR(m.sam_rad, 3.0 * std::numbers::pi / 16.0, 1e-15);
    EXPECT_EQ(m.sam_skipped_pixels, 0);
    // ||ref||^2 = 2 + 4 + 9 + 32 = 47
    EXPECT_NEAR(m.rsnr_db, 10.0 * std::log10(47.0 / 19.0), 1e-12);
    // band means 2.5 and 1.25; band squared errors 9 and 10
    const double ergas = 100.0 * std::sqrt(0.5 * ((9.0 / 4) / 6.25 + (10.0 / 4) / 1.5625));
    EXPECT_NEAR(m.ergas, ergas, 1e-12);
}

TEST(Evaluate, SamSkipsZeroFibersAndIgnoresScaling) {
    Gen g(3);
    Tensor3 ref = g.positive_tensor({5, 4, 6});
    Tensor3 est = g.positive_tensor({5, 4, 6});
    const double base = evaluate(ref, est, 1).sam_rad;
    Tensor3 scaled = est;
    for (Index j = 0; j < 4; ++j) {
        for (Index i = 0; i < 5; ++i) {
            const double s = g.uniform(0.1, 10.0);
            for (Index k = 0; k < 6; ++k) {
                scaled(i, j, k) *= s;
            }
        }
    }
    EXPECT_NEAR(evaluate(ref, scaled, 1).sam_rad, base, 1e-12);

    for (Index k = 0; k < 6; ++k) {
        ref(2, 3, k) = 0.0;
    }
    EXPECT_EQ(evaluate(ref, est, 1).sam_skipped_pixels, 1);
}

TEST(Evaluate, ErrorScalingIncreasesRmseAndErgas) {
    Gen g(4);
    const Tensor3 ref = g.positive_tensor({8, 8, 4});
    const Tensor3 err = g.tensor({8, 8, 4});
    double prev_rmse = 0.0, prev_ergas = 0.0;
    for (double s : {0.01, 0.1, 0.5, 2.0}) {
        const Tensor3 est(ref.dims(), ref.data() + s * err.data());
        const auto m = evaluate(ref, est, 4);
        EXPECT_GT(m.rmse, prev_rmse);
        EXPECT_GT(m.ergas, prev_ergas);
        prev_rmse = m.rmse;
        prev_ergas = m.ergas;
    }
}

TEST(Evaluate, RangesOnRandomPairs) {
    Gen g(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Dims3 d{g.integer(2, 14), g.integer(2, 14), g.integer(1, 5)};
        const Tensor3 ref = trial % 2 ? g.tensor(d) : g.positive_tensor(d);
        const Tensor3 est = g.tensor(d);
        check_ranges(evaluate(ref, est, 2));
    }
}

TEST(Evaluate, ConstantBandsStayFinite) {
    Tensor3 ref(10, 10, 2);
    ref.data().setConstant(3.0);
    Tensor3 est = ref;
    est(0, 0, 0) = 2.0;
    const auto m = evaluate(ref, est, 1);
    check_ranges(m);
}

TEST(Evaluate, Errors) {
    EXPECT_THROW(evaluate(Tensor3(2, 2, 2), Tensor3(2, 2, 3), 1), DimensionError);
    EXPECT_THROW(evaluate(Tensor3(2, 2, 2), Tensor3(2, 2, 2), 1), NumericalError);
    Gen g(6);
    const Tensor3 t = g.tensor({2, 2, 2});
    EXPECT_THROW(evaluate(t, t, 0), DimensionError);
}

TEST(PerBandCurves, ConstantDifferenceGivesIdenticalRows) {
    Gen g(7);
    const Matrix slab = g.positive(9, 9);
    Tensor3 ref(9, 9, 4);
    for (Index k = 0; k < 4; ++k) {
        ref.slab(k) = slab;
    }
    Tensor3 est = ref;
    est.data().array() += 0.1;
    const auto rows = per_band_curves(ref, est);
    ASSERT_EQ(rows.size(), 4u);
    for (const auto& r : rows) {
        EXPECT_DOUBLE_EQ(r.rmse, rows[0].rmse);
        EXPECT_DOUBLE_EQ(r.rsnr_db, rows[0].rsnr_db);
        EXPECT_DOUBLE_EQ(r.ssim, rows[0].ssim);
        EXPECT_DOUBLE_EQ(r.uiqi, rows[0].uiqi);
    }
    EXPECT_NEAR(rows[0].rmse, 0.1, 1e-12);
}

TEST(PerBandCurves, SingleCorruptedBand) {
    Gen g(8);
    const Tensor3 ref = g.positive_tensor({12, 12, 5});
    Tensor3 est = ref;
    est.slab(2) += 0.2 * g.matrix(12, 12);
    const auto rows = per_band_curves(ref, est);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (k == 2) {
            EXPECT_GT(rows[k].rmse, 0.0);
            EXPECT_LT(rows[k].ssim, 1.0);
            EXPECT_TRUE(std::isfinite(rows[k].rsnr_db));
        } else {
            EXPECT_EQ(rows[k].rmse, 0.0);
            EXPECT_DOUBLE_EQ(rows[k].ssim, 1.0);
            EXPECT_TRUE(std::isinf(rows[k].rsnr_db));
        }
    }
}

TEST(PerBandCurves, RmseEnergyAdditivity) {
    Gen g(9);
    const Tensor3 ref = g.tensor({7, 6, 5});
    const Tensor3 est = g.tensor({7, 6, 5});
    const auto rows = per_band_curves(ref, est);
    double mean_sq = 0.0;
    for (const auto& r : rows) {
        mean_sq += r.rmse * r.rmse / static_cast<double>(rows.size());
    }
    EXPECT_NEAR(mean_sq, std::pow(evaluate(ref, est, 1).rmse, 2), 1e-12);
    EXPECT_THROW(per_band_curves(ref, Tensor3(7, 6, 4)), DimensionError);
}
