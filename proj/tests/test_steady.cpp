#include <bcpatch/steady.hpp>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bcpatch;
constexpr double pi = std::numbers::pi;

namespace {

// Dense sine-matrix inverse Laplacian on interior nodes; shares no code with
// the FFTW path.
Eigen::MatrixXd dense_inverse_laplacian(const Eigen::MatrixXd& F, int n) {
    const int m = n - 1;
    Eigen::MatrixXd S(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) S(a, b) = std::sin(pi * (a + 1) * (b + 1) / n);
    Eigen::MatrixXd C = (4.0 / (double(n) * n)) * (S * F * S);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) C(a, b) /= -4.0 * pi * pi * ((a + 1.0) * (a + 1.0) + (b + 1.0) * (b + 1.0));
    return S * C * S;
}

struct Deviation {
    double oracle = 0.0;
    double library = 0.0;
    double agreement = 0.0;
};

Deviation map_deviation(int n, double eps) {
    QuarterGrid g(n);
    const auto psi0 = compute_psi0(n, g);
    const Nonlinearity nl{eps, 0.5};
    const auto T = fixed_point_map(psi0, nl, psi0);
    Eigen::MatrixXd F(n - 1, n - 1);
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) F(i - 1, j - 1) = g_eps(nl, psi0.at(i, j)) + 1.0;
    const auto U = dense_inverse_laplacian(F, n);
    Deviation d;
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) {
            const double o = U(i - 1, j - 1), l = T.at(i, j) - psi0.at(i, j);
            d.oracle = std::max(d.oracle, std::abs(o));
            d.library = std::max(d.library, std::abs(l));
            d.agreement = std::max(d.agreement, std::abs(o - l));
        }
    return d;
}

SolveReport solve(double eps, int n, double omega, InitKind init) {
    SolveConfig c;
    c.eps = eps;
    c.n = n;
    c.omega = omega;
    c.init = init;
    return solve_steady(c);
}

// One solve shared by several tests.
const SolveReport& reference_solve() {
    static const SolveReport rep = solve(1e-3, 1024, 0.5, InitKind::Psi0);
    return rep;
}

}  // namespace

TEST(Nonlinearity, Branches) {
    const Nonlinearity nl{0.1, 0.5};
    EXPECT_DOUBLE_EQ(g_eps(nl, 0.1), -1.0);
    EXPECT_DOUBLE_EQ(g_eps(nl, 0.7), -1.0);
    EXPECT_NEAR(g_eps(nl, 0.025), -2.0, 1e-15);
    EXPECT_NEAR(g_eps(nl, -0.025), 2.0, 1e-15);
    EXPECT_EQ(g_eps(nl, 0.0), 0.0);
}

TEST(Nonlinearity, OddAndBelowMinusOne) {
    const Nonlinearity nl{1e-3, 0.3};
    for (double v : {1e-9, 1e-6, 5e-4, 9.99e-4, 1e-3, 0.2}) {
        EXPECT_EQ(g_eps(nl, -v), -g_eps(nl, v));
        EXPECT_LE(g_eps(nl, v), -1.0);
    }
    EXPECT_NEAR(g_eps(nl, std::nextafter(1e-3, 0.0)), -1.0, 1e-12);
}

TEST(FixedPointMap, PsiZeroDeviationMatchesOracle) {
    // No interior node has psi0 < 1e-6 at n = 512, so the map fixes psi0.
    const auto d6 = map_deviation(512, 1e-6);
    EXPECT_EQ(d6.oracle, 0.0);
    EXPECT_EQ(d6.library, 0.0);

    const auto d4 = map_deviation(512, 1e-4);
    EXPECT_LT(d4.agreement, 1e-12 * d4.oracle);
    EXPECT_NEAR(d4.library, 4.73464362094512e-06, 1e-9 * 4.73464362094512e-06);
}

TEST(FixedPointMap, DeviationSupportedNearCorners) {
    // All four corners of the quarter are stagnation points of psi0.
    const int n = 512;
    QuarterGrid g(n);
    const auto psi0 = compute_psi0(n, g);
    const Nonlinearity nl{1e-4, 0.5};
    const auto T = fixed_point_map(psi0, nl, psi0);
    auto corner_distance = [&](int i, int j) {
        const double x = g.x(i), y = g.x(j);
        return std::min({std::hypot(x, y), std::hypot(0.5 - x, y), std::hypot(x, 0.5 - y), std::hypot(0.5 - x, 0.5 - y)});
    };
    double source_reach = 0.0, all = 0.0, far = 0.0;
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) {
            const double dc = corner_distance(i, j);
            if (g_eps(nl, psi0.at(i, j)) != -1.0) source_reach = std::max(source_reach, dc);
            const double d = std::abs(T.at(i, j) - psi0.at(i, j));
            all = std::max(all, d);
            if (dc >= 0.1) far = std::max(far, d);
        }
    EXPECT_LT(source_reach, 0.07);
    EXPECT_LT(far, 0.02 * all);
}

TEST(FixedPointMap, AntitoneOnOrderedPairs) {
    const int n = 256;
    QuarterGrid g(n);
    const auto psi0 = compute_psi0(n, g);
    const Nonlinearity nl{1e-3, 0.5};
    for (int t = 0; t < 10; ++t) {
        Rng rng(7, t);
        std::vector<double> a(g.size()), b(g.size());
        for (int j = 1; j < n; ++j)
            for (int i = 1; i < n; ++i) {
                const double lo = psi0.at(i, j) * rng.uniform(0.0, 1.0);
                a[g.index(i, j)] = lo;
                b[g.index(i, j)] = lo + rng.uniform(0.0, 0.01);
            }
        const auto A = SymmetricField(g, a).symmetrized();
        const auto B = SymmetricField(g, b).symmetrized();
        const auto TA = fixed_point_map(A, nl, psi0), TB = fixed_point_map(B, nl, psi0);
        for (int j = 1; j < n; ++j)
            for (int i = 1; i < n; ++i) {
                ASSERT_GE(TA.at(i, j), TB.at(i, j)) << i << "," << j;
                ASSERT_GT(TB.at(i, j), 0.0);
            }
    }
}

TEST(FixedPointMap, RejectsNegativeInput) {
    QuarterGrid g(32);
    std::vector<double> v(g.size(), 0.0);
    v[g.index(3, 5)] = -1e-3;
    EXPECT_THROW(fixed_point_map(SymmetricField(g, v), Nonlinearity{}), DomainError);
}

TEST(Residual, LinearConsistency) {
    const int n = 1024;
    QuarterGrid g(n);
    SineSpectrum f(n);
    f(1, 1) = 1.0;
    f(1, 2) = -0.4;
    f(2, 1) = 0.3;
    f(2, 2) = 0.7;
    const auto rhs = transform_inverse(f);
    const auto phi = transform_inverse(invert_laplacian(f));
    const double r = fd_residual(phi.nodes(), [&](int i, int j, double) { return rhs.at(i, j); });
    EXPECT_LT(r, 1e-10);
}

TEST(Residual, PsiZeroIsNotTheSolution) {
    const int n = 512;
    const auto psi0 = compute_psi0(n, QuarterGrid(n));
    const double r = residual(psi0, Nonlinearity{1e-3, 0.5});
    EXPECT_GT(r, 0.1);
    EXPECT_LT(r, 10.0);
}

TEST(Steadiness, SingleModeIsSteady) {
    // Roundoff in grad(omega) grows like n^3; keep the grid moderate.
    QuarterGrid g(128);
    auto phi = SymmetricField::sample(g, [](double x, double y) { return std::sin(2 * pi * x) * std::sin(4 * pi * y); });
    EXPECT_LT(steadiness_check(phi), 1e-10);
}

TEST(Steadiness, PsiZeroRegression) {
    const double v = steadiness_check(compute_psi0(1024, QuarterGrid(1024)));
    EXPECT_GT(v, 0.0);
    EXPECT_NEAR(v, 1.1077177559897832e-09, 1e-6 * 1.1077177559897832e-09);
}

TEST(Steadiness, SolutionImprovesWithRefinement) {
    double prev = 1.0;
    for (int n : {256, 512}) {
        const double v = steadiness_check(solve(1e-3, n, 0.5, InitKind::Psi0).phi);
        EXPECT_LT(v, prev);
        prev = v;
    }
    const double v1024 = steadiness_check(reference_solve().phi);
    EXPECT_LT(v1024, prev);
    EXPECT_NEAR(v1024, 0.00497905, 1e-7);
}

TEST(Solve, ConvergesAndStaysAbovePsiZero) {
    const auto& rep = reference_solve();
    EXPECT_LE(rep.final_residual, rep.config.tol);
    EXPECT_EQ(rep.iterations + 1, static_cast<int>(rep.residual_history.size()));
    EXPECT_GE(rep.psi0_margin, -1e-10);
    EXPECT_EQ(rep.clamped_nodes, 0);
    EXPECT_TRUE(rep.small_eps_regime);
    EXPECT_FALSE(rep.resolved);
    for (double v : rep.phi.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Solve, FiniteDifferenceResidualRegression) {
    // The fourth-order stencil sees the kink of G(phi) at {phi = eps}.
    EXPECT_NEAR(reference_solve().fd_residual, 0.03821, 5e-5);
}

TEST(Solve, DiagonalSymmetricAndOddOdd) {
    const auto& phi = reference_solve().phi;
    const int n = phi.n();
    const double scale = sup_norm(phi.values());
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            EXPECT_NEAR(phi.at(i, j), phi.at(j, i), 1e-12 * scale);
            if (i == 0 || j == 0 || i == n || j == n) {
                EXPECT_EQ(phi.at(i, j), 0.0);
            }
        }
}

TEST(Solve, InitIndependent) {
    const auto& a = reference_solve();
    const auto b = solve(1e-3, 1024, 0.5, InitKind::BarrierBlend);
    double d = 0.0;
    for (std::size_t k = 0; k < a.phi.values().size(); ++k) d = std::max(d, std::abs(a.phi.values()[k] - b.phi.values()[k]));
    EXPECT_LE(d, 10.0 * a.config.tol);
}

TEST(Solve, UndampedIterationBrackets) {
    const auto rep = solve(1e-3, 1024, 1.0, InitKind::Psi0);
    ASSERT_TRUE(rep.bracketing_ok.has_value());
    EXPECT_TRUE(*rep.bracketing_ok);
    EXPECT_LE(rep.final_residual, rep.config.tol);
}

TEST(Solve, BitStable) {
    const auto b = solve(1e-3, 1024, 0.5, InitKind::Psi0);
    EXPECT_EQ(b.phi.values(), reference_solve().phi.values());
    EXPECT_EQ(b.residual_history, reference_solve().residual_history);
}

TEST(Solve, FlagsLargeEps) {
    const auto rep = solve(0.2, 256, 0.5, InitKind::Psi0);
    EXPECT_FALSE(rep.small_eps_regime);
    bool flagged = false;
    for (const auto& w : rep.warnings) flagged |= w.find("small-eps") != std::string::npos;
    EXPECT_TRUE(flagged);
}

TEST(Solve, MaxIterCarriesHistory) {
    SolveConfig c;
    c.n = 256;
    c.max_iter = 3;
    try {
        solve_steady(c);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.history().size(), 4u);
        EXPECT_GT(e.history().back(), c.tol);
    }
}

TEST(Solve, InvalidConfig) {
    SolveConfig c;
    c.omega = 1.5;
    EXPECT_THROW(solve_steady(c), DomainError);
    c = SolveConfig{};
    c.tol = 0.0;
    EXPECT_THROW(solve_steady(c), DomainError);
    c = SolveConfig{};
    c.init = InitKind::File;
    EXPECT_THROW(solve_steady(c), DomainError);
}
