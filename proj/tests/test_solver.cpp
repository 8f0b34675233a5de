#include <gtest/gtest.h>

#include "solver_oracles.hpp"

using namespace hsr;
using hsr::testing::Gen;
using hsr::testing::numeric_gradient;
using hsr::testing::rel_err;

namespace {

struct KnownCase {
    hsr::testing::SmallInstance data;
    Matrix S;
    Matrix C;
};

KnownCase known_case(Gen& g, Index R = 2) {
    KnownCase k{hsr::testing::small_instance(g), {}, {}};
    k.S = g.positive(k.data.sri.I * k.data.sri.J, R);
    k.C = g.positive(k.data.sri.K, R);
    return k;
}

// exact LL1 data: HSI/MSI generated from (S, C) itself
struct ExactFit {
    DegradationOps ops;
    Tensor3 hsi, msi;
    Matrix S, C;
};

ExactFit exact_fit(Gen& g) {
    const Dims3 d{6, 5, 4};
    ExactFit e{
        hsr::testing::random_ops(g, d, 3, 3, 2), {}, {}, g.positive(30, 2), g.positive(4, 2)};
    const Tensor3 sri = reconstruct(e.S, e.C, d.I, d.J);
    e.hsi = degrade_spatial(sri, e.ops);
    e.msi = degrade_spectral(sri, e.ops);
    return e;
}

SolverConfig plain(int iters) {
    SolverConfig c;
    c.max_iters = iters;
    c.rel_tol = 1e-300;
    return c;
}

} // namespace

// ---------------------------------------------------------------------------
// primitives

TEST(ApgStep, Examples) {
    Gen g(1);
    const Matrix x = g.matrix(3, 4);
    EXPECT_EQ(apg_step(x, Matrix::Zero(3, 4), 0.5, false), x);
    EXPECT_EQ(apg_step(Matrix::Zero(3, 4), Matrix::Ones(3, 4), 0.5, true), Matrix::Zero(3, 4));
    const Matrix once = apg_step(x, Matrix::Zero(3, 4), 1.0, true);
    EXPECT_EQ(apg_step(once, Matrix::Zero(3, 4), 1.0, true), once);
    EXPECT_GE(once.minCoeff(), 0.0);
    const Matrix grad = g.matrix(3, 4);
    EXPECT_EQ(apg_step(x, grad, 0.25, false), x - 0.25 * grad);
}

TEST(Extrapolate, Examples) {
    Gen g(2);
    const Matrix a = g.matrix(2, 3), b = g.matrix(2, 3);
    const auto [same, gamma] = extrapolate(a, a, 1.0);
    EXPECT_EQ(same, a);
    EXPECT_NEAR(gamma, 1.6180339887498949, 1e-15);
    // gamma_old = 1 gives zero momentum
    EXPECT_EQ(extrapolate(a, b, 1.0).first, a);
    const auto [x, g2] = extrapolate(a, b, 2.0);
    const double beta = (2.0 - 1.0) / g2;
    EXPECT_LT((x - (a + beta * (a - b))).norm(), 1e-15);
}

TEST(Extrapolate, MomentumCoefficientInUnitInterval) {
    double gamma = 1.0;
    for (int t = 0; t < 10000; ++t) {
        const double next = next_momentum(gamma);
        const double beta = (gamma - 1.0) / next;
        ASSERT_GE(beta, 0.0);
        ASSERT_LT(beta, 1.0);
        ASSERT_GT(next, gamma);
        gamma = next;
    }
}

// ---------------------------------------------------------------------------
// known-operator objective and gradients

TEST(ObjectiveKnown, ExactFitIsZero) {
    Gen g(3);
    const auto e = exact_fit(g);
    const KnownProblem prob(e.hsi, e.msi, e.ops);
    EXPECT_LT(objective_known(e.S, e.C, prob, SolverConfig{}), 1e-20);
}

TEST(ObjectiveKnown, ZeroFactors) {
    Gen g(4);
    const auto k = known_case(g);
    const KnownProblem prob(k.data.hsi, k.data.msi, k.data.ops);
    const double expected =
        0.5 * k.data.hsi.data().squaredNorm() + 0.5 * k.data.msi.data().squaredNorm();
    EXPECT_NEAR(objective_known(Matrix::Zero(30, 2), Matrix::Zero(4, 2), prob, SolverConfig{}),
                expected, 1e-12 * expected);
}

TEST(ObjectiveKnown, MatchesLoopOracle) {
    Gen g(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto k = known_case(g, 3);
        const auto cfg = hsr::testing::weighted_config(g);
        const KnownProblem prob(k.data.hsi, k.data.msi, k.data.ops);
        const double oracle =
            hsr::testing::objective_known_loop(k.S, k.C, k.data.hsi, k.data.msi, k.data.ops, cfg);
        ASSERT_NEAR(objective_known(k.S, k.C, prob, cfg), oracle, 1e-10 * oracle);
    }
}

TEST(ObjectiveKnown, RejectsMismatch) {
    Gen g(6);
    const auto k = known_case(g);
    const KnownProblem prob(k.data.hsi, k.data.msi, k.data.ops);
    EXPECT_THROW(objective_known(Matrix::Zero(29, 2), k.C, prob, SolverConfig{}), DimensionError);
    EXPECT_THROW(KnownProblem(k.data.msi, k.data.msi, k.data.ops), DimensionError);
}

TEST(GradCKnown, MatchesFiniteDifferences) {
    Gen g(7);
    for (int trial = 0; trial < 5; ++trial) {
        const auto k = known_case(g);
        const auto cfg = hsr::testing::weighted_config(g);
        const KnownProblem prob(k.data.hsi, k.data.msi, k.data.ops);
        const Matrix fd = numeric_gradient(
            [&](const Matrix& c) { return objective_known(k.S, c, prob, cfg); }, k.C);
        ASSERT_LT(rel_err(grad_C_known(k.S, k.C, prob, cfg), fd), 1e-5);
    }
}

TEST(GradCKnown, ZeroAtExactFitAndRidgeOnly) {
    Gen g(8);
    const auto e = exact_fit(g);
    const KnownProblem prob(e.hsi, e.msi, e.ops);
    EXPECT_LT(grad_C_known(e.S, e.C, prob, SolverConfig{}).norm(), 1e-10);

    Tensor3 zh = e.hsi, zm = e.msi;
    zh.data().setZero();
    zm.data().setZero();
    const KnownProblem zero(zh, zm, e.ops);
    SolverConfig cfg;
    cfg.lambda = 0.3;
    EXPECT_LT((grad_C_known(Matrix::Zero(30, 2), e.C, zero, cfg) - 0.3 * e.C).norm(), 1e-15);
}

TEST(GradSKnown, MatchesFiniteDifferences) {
    Gen g(9);
    for (int trial = 0; trial < 5; ++trial) {
        const auto k = known_case(g);
        const auto cfg = hsr::testing::weighted_config(g);
        const KnownProblem prob(k.data.hsi, k.data.msi, k.data.ops);
        const Matrix fd = numeric_gradient(
            [&](const Matrix& s) { return objective_known(s, k.C, prob, cfg); }, k.S);
        ASSERT_LT(rel_err(grad_S_known(k.S, k.C, prob, cfg), fd), 1e-5);
    }
}

TEST(GradSKnown, ZeroAtExactFit) {
    Gen g(10);
    const auto e = exact_fit(g);
    const KnownProblem prob(e.hsi, e.msi, e.ops);
    EXPECT_LT(grad_S_known(e.S, e.C, prob, SolverConfig{}).norm(), 1e-10);
}

TEST(GradSKnown, SchattenOnlyColumn) {
    Gen g(11);
    const auto e = exact_fit(g);
    const KnownProblem prob(e.hsi, e.msi, e.ops);
    SolverConfig cfg;
    cfg.eta = 0.7;
    const Matrix grad = grad_S_known(e.S, e.C, prob, cfg);
    for (Index r = 0; r < 2; ++r) {
        const Matrix s = e.S.col(r).reshaped(6, 5);
        const Matrix expected = cfg.schatten.p * cfg.eta * (schatten_weight(s, cfg.schatten).W * s);
        EXPECT_LT(rel_err(grad.col(r), expected.reshaped()), 1e-10);
    }
}

// ---------------------------------------------------------------------------
// known-operator step sizes

TEST(LipschitzKnown, ZeroAbundanceGivesRidge) {
    Gen g(12);
    const auto k = known_case(g);
    const KnownProblem prob(k.data.hsi, k.data.msi, k.data.ops);
    SolverConfig cfg;
    cfg.lambda = 0.25;
    EXPECT_NEAR(lipschitz_bounds_known(Matrix::Zero(30, 2), k.C, prob, cfg).C, 0.25, 1e-15);
}

TEST(LipschitzKnown, DominatesDenseCurvature) {
    Gen g(13);
    for (int trial = 0; trial < 20; ++trial) {
        const auto k = known_case(g);
        const auto cfg = hsr::testing::weighted_config(g);
        const KnownProblem prob(k.data.hsi, k.data.msi, k.data.ops);
        const auto b = lipschitz_bounds_known(k.S, k.C, prob, cfg);
        const auto exact = hsr::testing::exact_curvature_known(k.S, k.C, k.data.ops, cfg);
        ASSERT_GE(b.C, exact.C * (1 - 1e-12));
        ASSERT_GE(b.S, exact.S * (1 - 1e-12));
    }
}

TEST(LipschitzKnown, QuadraticTvCurvatureIsExact) {
    // q = 2 makes every U, V entry one; the TV Hessian is then
    // q theta (H_x^T H_x + H_y^T H_y), whose top eigenvalue is
    // q theta (sigma(H_J)^2 + sigma(H_I)^2) since both share Fourier modes
    Gen g(14);
    const auto k = known_case(g);
    const KnownProblem prob(k.data.hsi, k.data.msi, k.data.ops);
    SolverConfig cfg;
    cfg.theta = 0.4;
    cfg.tv.q = 2.0;
    const Matrix zeroC = Matrix::Zero(4, 2);
    const auto b = lipschitz_bounds_known(k.S, zeroC, prob, cfg);
    const double dense =
        hsr::testing::max_eig(hsr::testing::regularizer_hessian(k.S, 6, 5, cfg, true));
    EXPECT_NEAR(b.S, dense, 1e-10 * dense);
    EXPECT_NEAR(b.S,
                2.0 * 0.4 * (std::pow(difference_norm(5), 2) + std::pow(difference_norm(6), 2)),
                1e-12);
}

// ---------------------------------------------------------------------------
// SC-LL1

TEST(SolveScLL1, RecoversSmallNoiselessScene) {
    const auto f = random_ll1({12, 12, 8}, 2, 2, 3, true);
    const Tensor3 sri = reconstruct(f);
    BlurSpec blur;
    blur.kernel_width = 3;
    blur.sigma = 1.0;
    blur.ratio = 2;
    const DegradationOps ops(build_spatial_op(12, blur), build_spatial_op(12, blur),
                             build_spectral_op({{0, 1}, {2, 3}, {4, 5}, {6, 7}}, 8));
    SolverConfig cfg;
    cfg.lambda = 1e-6;
    cfg.max_iters = 3000;
    cfg.rel_tol = 1e-14;
    cfg.seed = 1;
    const auto rep =
        solve_sc_ll1(degrade_spatial(sri, ops), degrade_spectral(sri, ops), ops, 2, cfg);
    EXPECT_GE(evaluate(sri, rep.sri, 2).rsnr_db, 40.0);
}

TEST(SolveScLL1, PlainRunDescendsAndStaysNonnegative) {
    Gen g(15);
    for (int trial = 0; trial < 3; ++trial) {
        const auto k = known_case(g, 2);
        auto cfg = hsr::testing::weighted_config(g);
        cfg.max_iters = 200;
        cfg.rel_tol = 1e-300;
        cfg.accelerate = false;
        const auto rep = solve_sc_ll1(k.data.hsi, k.data.msi, k.data.ops, 2, cfg);
        const auto& tr = rep.objective_trace;
        ASSERT_EQ(tr.size(), 201u);
        for (std::size_t t = 1; t < tr.size(); ++t) {
            ASSERT_LE(tr[t], tr[t - 1] + 1e-12 * std::abs(tr[t - 1])) << "iteration " << t;
        }
        EXPECT_GE(rep.S.minCoeff(), 0.0);
        EXPECT_GE(rep.C.minCoeff(), 0.0);
    }
}

TEST(SolveScLL1, DeterministicForSeed) {
    Gen g(16);
    const auto k = known_case(g);
    auto cfg = plain(50);
    cfg.seed = 9;
    const auto a = solve_sc_ll1(k.data.hsi, k.data.msi, k.data.ops, 2, cfg);
    const auto b = solve_sc_ll1(k.data.hsi, k.data.msi, k.data.ops, 2, cfg);
    EXPECT_EQ(a.objective_trace, b.objective_trace);
    EXPECT_EQ(a.sri, b.sri);
}

TEST(SolveScLL1, StopsOnRelativeChange) {
    Gen g(17);
    const auto k = known_case(g);
    SolverConfig cfg;
    cfg.max_iters = 5000;
    cfg.rel_tol = 1e-3;
    const auto rep = solve_sc_ll1(k.data.hsi, k.data.msi, k.data.ops, 2, cfg);
    EXPECT_TRUE(rep.converged);
    EXPECT_LT(rep.iterations, 5000);
    const auto n = rep.objective_trace.size();
    EXPECT_EQ(n, static_cast<std::size_t>(rep.iterations) + 1);
    EXPECT_LT(std::abs(rep.objective_trace[n - 1] - rep.objective_trace[n - 2]),
              1e-3 * std::abs(rep.objective_trace[n - 2]));
}

TEST(SolveScLL1, WarmStartAndValidation) {
    Gen g(18);
    const auto k = known_case(g);
    Initialization init;
    init.S = k.S;
    init.C = k.C;
    const auto rep = solve_sc_ll1(k.data.hsi, k.data.msi, k.data.ops, 2, plain(0), init);
    EXPECT_EQ(rep.S, k.S);
    EXPECT_EQ(rep.C, k.C);
    EXPECT_EQ(rep.objective_trace.size(), 1u);
    EXPECT_THROW(solve_sc_ll1(k.data.hsi, k.data.msi, k.data.ops, 3, plain(1), init),
                 DimensionError);
    EXPECT_THROW(solve_sc_ll1(k.data.hsi, k.data.msi, k.data.ops, 0, plain(1)), DimensionError);
    SolverConfig bad;
    bad.lambda = -1.0;
    EXPECT_THROW(solve_sc_ll1(k.data.hsi, k.data.msi, k.data.ops, 2, bad), ConfigError);
}

TEST(SolveScLL1, HomogeneousInDataScale) {
    Gen g(19);
    const auto k = known_case(g);
    const double s = 3.0;
    SolverConfig cfg = plain(40);
    cfg.lambda = 0.2;
    Initialization init;
    init.S = k.S;
    init.C = k.C;
    const auto base = solve_sc_ll1(k.data.hsi, k.data.msi, k.data.ops, 2, cfg, init);

    Tensor3 hs = k.data.hsi, ms = k.data.msi;
    hs.data() *= s;
    ms.data() *= s;
    SolverConfig scaled = cfg;
    scaled.lambda = cfg.lambda * s * s;
    Initialization init2;
    init2.S = s * k.S;
    init2.C = k.C;
    const auto big = solve_sc_ll1(hs, ms, k.data.ops, 2, scaled, init2);
    ASSERT_EQ(base.objective_trace.size(), big.objective_trace.size());
    for (std::size_t t = 0; t < base.objective_trace.size(); ++t) {
        ASSERT_NEAR(big.objective_trace[t], s * s * base.objective_trace[t],
                    1e-9 * s * s * base.objective_trace[t]);
    }
}

TEST(SolveScLL1, NonFiniteObjectiveCarriesTrace) {
    Gen g(20);
    const auto k = known_case(g);
    Initialization init;
    init.S = k.S;
    init.C = k.C;
    init.C->coeffRef(0, 0) = std::numeric_limits<double>::infinity();
    try {
        solve_sc_ll1(k.data.hsi, k.data.msi, k.data.ops, 2, plain(5), init);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.trace.size(), 1u);
    }
}

// ---------------------------------------------------------------------------
// semi-blind

namespace {

struct BlindCase {
    Tensor3 hsi, msi;
    Matrix pm, S, St, C;
};

BlindCase blind_case(Gen& g) {
    const auto d = hsr::testing::small_instance(g);
    return {d.hsi, d.msi, d.ops.PM, g.positive(30, 2), g.matrix(9, 2), g.positive(4, 2)};
}

} // namespace

TEST(BlindProblem, RejectsMismatch) {
    Gen g(21);
    const auto b = blind_case(g);
    EXPECT_THROW(BlindProblem(b.hsi, b.msi, Matrix::Ones(2, 3)), DimensionError);
    EXPECT_THROW(BlindProblem(b.hsi, b.msi, Matrix::Ones(3, 4)), DimensionError);
}

TEST(GradBlind, MatchFiniteDifferences) {
    Gen g(22);
    for (int trial = 0; trial < 5; ++trial) {
        const auto b = blind_case(g);
        const auto cfg = hsr::testing::weighted_config(g);
        const BlindProblem prob(b.hsi, b.msi, b.pm);
        const Matrix fc = numeric_gradient(
            [&](const Matrix& c) { return objective_blind(b.S, b.St, c, prob, cfg); }, b.C);
        ASSERT_LT(rel_err(grad_C_blind(b.S, b.St, b.C, prob, cfg), fc), 1e-5);
        const Matrix fs = numeric_gradient(
            [&](const Matrix& s) { return objective_blind(s, b.St, b.C, prob, cfg); }, b.S);
        ASSERT_LT(rel_err(grad_S_blind(b.S, b.St, b.C, prob, cfg), fs), 1e-5);
        const Matrix ft = numeric_gradient(
            [&](const Matrix& t) { return objective_blind(b.S, t, b.C, prob, cfg); }, b.St);
        ASSERT_LT(rel_err(grad_Stilde_blind(b.S, b.St, b.C, prob, cfg), ft), 1e-5);
    }
}

TEST(GradBlind, IdentityPmWithConsistentStilde) {
    Gen g(23);
    const Tensor3 hsi = g.tensor({3, 3, 4});
    const Tensor3 msi = g.tensor({6, 5, 4});
    const Matrix St = g.matrix(9, 2);
    const Matrix S = g.positive(30, 2), C = g.positive(4, 2);
    SolverConfig cfg;
    cfg.lambda = 0.1;
    const BlindProblem prob(hsi, msi, Matrix::Identity(4, 4));
    const Matrix fd =
        numeric_gradient([&](const Matrix& c) { return objective_blind(S, St, c, prob, cfg); }, C);
    EXPECT_LT(rel_err(grad_C_blind(S, St, C, prob, cfg), fd), 1e-5);
}

TEST(GradBlind, ZeroAtExactFit) {
    Gen g(24);
    const auto e = exact_fit(g);
    const Matrix St = unfold_mode3(degrade_spatial(reconstruct(e.S, e.C, 6, 5), e.ops));
    // S~ C^T equals the HSI unfolding when S~ = P_H S
    const KnownProblem kp(e.hsi, e.msi, e.ops);
    const Matrix st = kp.spatial(e.S);
    EXPECT_LT((st * e.C.transpose() - St).norm(), 1e-12);
    const BlindProblem prob(e.hsi, e.msi, e.ops.PM);
    const SolverConfig cfg;
    EXPECT_LT(grad_C_blind(e.S, st, e.C, prob, cfg).norm(), 1e-10);
    EXPECT_LT(grad_S_blind(e.S, st, e.C, prob, cfg).norm(), 1e-10);
    EXPECT_LT(grad_Stilde_blind(e.S, st, e.C, prob, cfg).norm(), 1e-10);
}

TEST(GradBlind, StildeWithoutSchatten) {
    Gen g(25);
    const auto b = blind_case(g);
    const BlindProblem prob(b.hsi, b.msi, b.pm);
    SolverConfig cfg;
    cfg.theta = 0.5; // TV never touches S~
    const Matrix expected = (b.St * b.C.transpose() - unfold_mode3(b.hsi)) * b.C;
    EXPECT_LT(rel_err(grad_Stilde_blind(b.S, b.St, b.C, prob, cfg), expected), 1e-14);
}

TEST(LipschitzBlind, DominatesDenseCurvature) {
    Gen g(26);
    for (int trial = 0; trial < 20; ++trial) {
        const auto b = blind_case(g);
        const auto cfg = hsr::testing::weighted_config(g);
        const BlindProblem prob(b.hsi, b.msi, b.pm);
        const auto bound = lipschitz_bounds_blind(b.S, b.St, b.C, prob, cfg);
        const auto exact =
            hsr::testing::exact_curvature_blind(b.S, b.St, b.C, b.pm, {6, 5, 4}, 3, 3, cfg);
        ASSERT_GE(bound.C, exact.C * (1 - 1e-12));
        ASSERT_GE(bound.S, exact.S * (1 - 1e-12));
        ASSERT_GE(bound.S_tilde, exact.S_tilde * (1 - 1e-12));
    }
}

TEST(SolveBscLL1, ZeroIterationsReturnsInitialization) {
    Gen g(27);
    const auto b = blind_case(g);
    Initialization init;
    init.S = b.S;
    init.C = b.C;
    init.S_tilde = b.St;
    const auto rep = solve_bsc_ll1(b.hsi, b.msi, b.pm, 2, plain(0), init);
    EXPECT_EQ(rep.S, b.S);
    EXPECT_EQ(rep.C, b.C);
    EXPECT_EQ(rep.iterations, 0);
    EXPECT_EQ(rep.objective_trace.size(), 1u);
    EXPECT_EQ(rep.sri, reconstruct(b.S, b.C, 6, 5));
}

TEST(SolveBscLL1, TraceLengthBoundedAndDescends) {
    Gen g(28);
    for (int trial = 0; trial < 3; ++trial) {
        const auto b = blind_case(g);
        auto cfg = hsr::testing::weighted_config(g);
        cfg.max_iters = 150;
        cfg.accelerate = false;
        cfg.rel_tol = 1e-300;
        const auto rep = solve_bsc_ll1(b.hsi, b.msi, b.pm, 2, cfg);
        const auto& tr = rep.objective_trace;
        ASSERT_LE(tr.size(), 151u);
        for (std::size_t t = 1; t < tr.size(); ++t) {
            ASSERT_LE(tr[t], tr[t - 1] + 1e-12 * std::abs(tr[t - 1])) << "iteration " << t;
        }
        EXPECT_GE(rep.S.minCoeff(), 0.0);
        EXPECT_GE(rep.C.minCoeff(), 0.0);
    }
}

TEST(SolveBscLL1, DeterministicForSeed) {
    Gen g(29);
    const auto b = blind_case(g);
    auto cfg = plain(30);
    cfg.seed = 4;
    const auto x = solve_bsc_ll1(b.hsi, b.msi, b.pm, 2, cfg);
    const auto y = solve_bsc_ll1(b.hsi, b.msi, b.pm, 2, cfg);
    EXPECT_EQ(x.objective_trace, y.objective_trace);
    EXPECT_EQ(x.sri, y.sri);
}
