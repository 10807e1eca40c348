#include <bcpatch/poisson.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bcpatch;
constexpr double pi = std::numbers::pi;

static SineSpectrum random_spectrum(int n, int band, std::uint64_t seed) {
    Rng rng(seed);
    SineSpectrum s(n);
    for (int m = 1; m <= band; ++m)
        for (int k = 1; k <= band; ++k) s(m, k) = rng.uniform(-1, 1);
    return s;
}

TEST(Transform, SingleModeForward) {
    QuarterGrid g(32);
    auto f = SymmetricField::sample(g, [](double x, double y) { return std::sin(2 * pi * x) * std::sin(2 * pi * y); });
    auto s = transform_forward(f);
    for (int m = 1; m < 32; ++m)
        for (int k = 1; k < 32; ++k) EXPECT_NEAR(s(m, k), (m == 1 && k == 1) ? 1.0 : 0.0, 1e-12);
}

TEST(Transform, ZeroField) {
    auto s = transform_forward(SymmetricField(QuarterGrid(16)));
    EXPECT_EQ(sup_norm(s.data()), 0.0);
}

TEST(Transform, BandLimitedRoundTrip) {
    for (int n : {16, 128, 512}) {
        auto s = random_spectrum(n, n / 2, 11 + n);
        auto f = transform_inverse(s);
        auto s2 = transform_forward(f);
        double err = 0.0;
        for (std::size_t i = 0; i < s.data().size(); ++i) err = std::max(err, std::abs(s.data()[i] - s2.data()[i]));
        EXPECT_LT(err, 1e-12 * sup_norm(s.data()));
        auto f2 = transform_inverse(s2);
        double ferr = 0.0;
        for (std::size_t i = 0; i < f.values().size(); ++i) ferr = std::max(ferr, std::abs(f.values()[i] - f2.values()[i]));
        EXPECT_LT(ferr, 1e-12 * sup_norm(f.values()));
    }
}

TEST(Transform, InverseMatchesDirectSum) {
    const int n = 16;
    auto s = random_spectrum(n, n - 1, 5);
    auto f = transform_inverse(s);
    QuarterGrid g(n);
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) {
            double v = 0.0;
            for (int m = 1; m < n; ++m)
                for (int k = 1; k < n; ++k) v += s(m, k) * std::sin(2 * pi * m * g.x(i)) * std::sin(2 * pi * k * g.x(j));
            EXPECT_NEAR(f.at(i, j), v, 1e-12);
        }
}

TEST(InvertLaplacian, Eigenvalues) {
    SineSpectrum s(16);
    s(1, 1) = 1.0;
    s(1, 2) = 2.0;
    auto t = invert_laplacian(s);
    EXPECT_NEAR(t(1, 1), -1.0 / (8 * pi * pi), 1e-16);
    EXPECT_NEAR(t(1, 2), -1.0 / (10 * pi * pi), 1e-16);
    EXPECT_EQ(sup_norm(invert_laplacian(SineSpectrum(16)).data()), 0.0);
}

TEST(InvertLaplacian, IdentityOnRandomSpectra) {
    auto s = random_spectrum(256, 255, 9);
    auto back = apply_laplacian(invert_laplacian(s));
    for (std::size_t i = 0; i < s.data().size(); ++i)
        EXPECT_NEAR(back.data()[i], s.data()[i], 1e-12 * std::abs(s.data()[i]));
}

TEST(Psi0, CoefficientAndSymmetry) {
    EXPECT_NEAR(psi0_coefficient(1, 1), 2.0 / std::pow(pi, 4), 1e-15);
    EXPECT_EQ(psi0_coefficient(2, 1), 0.0);
    QuarterGrid g(256);
    auto p = compute_psi0(256, g);
    for (int k = 0; k <= 256; ++k) {
        EXPECT_EQ(p.at(0, k), 0.0);
        EXPECT_EQ(p.at(k, 0), 0.0);
    }
    for (int j = 1; j < 256; ++j)
        for (int i = 1; i < 256; ++i) {
            EXPECT_EQ(p.at(i, j), p.at(j, i));
            ASSERT_GT(p.at(i, j), 0.0);
        }
}

TEST(Psi0, FoldingMatchesDirectSumAtNodes) {
    // M > n folds aliases; compare to the direct truncated sum at nodes.
    const int n = 16, M = 64;
    QuarterGrid g(n);
    auto p = compute_psi0(M, g);
    for (int j = 1; j < n; j += 3)
        for (int i = 1; i < n; i += 2) {
            double v = 0.0;
            for (int m = 1; m <= M; m += 2)
                for (int k = 1; k <= M; k += 2) v += psi0_coefficient(m, k) * std::sin(2 * pi * m * g.x(i)) * std::sin(2 * pi * k * g.x(j));
            EXPECT_NEAR(p.at(i, j), v, 1e-14);
        }
}

TEST(Psi0, RefinementAtSharedNodes) {
    // |psi0_n - psi0_2n| <= C n^-2 ln n with C stable across n
    std::vector<double> cs;
    for (int n : {64, 128, 256}) {
        auto a = compute_psi0(n, QuarterGrid(n));
        auto b = compute_psi0(2 * n, QuarterGrid(2 * n));
        double d = 0.0;
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) d = std::max(d, std::abs(a.at(i, j) - b.at(2 * i, 2 * j)));
        cs.push_back(d * n * n / std::log(n));
    }
    for (double c : cs) EXPECT_LT(c, 0.1);
    EXPECT_LT(cs.back(), 2 * cs.front());
}

TEST(Psi0, PolarAsymptoticsNearOrigin) {
    QuarterGrid g(2048);
    auto p = compute_psi0(2048, g);
    double lo = 1e300, hi = 0;
    for (double r : {4e-3, 6e-3, 1e-2, 2e-2}) {
        const double q = sample_polar(p, r, pi / 4) / (-r * r * std::log(r));
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    EXPECT_GT(lo, 0.0);
    EXPECT_LT(hi / lo, 2.0);
}

TEST(Green, SymmetryAndSplit) {
    std::array<double, 2> x{0.13, 0.31}, y{0.77, 0.52};
    auto a = torus_green(x, y), b = torus_green(y, x);
    EXPECT_NEAR(a.total, b.total, 1e-12);
    EXPECT_EQ(a.total, a.log_part + a.regular_part);
    EXPECT_THROW(torus_green(x, x), DomainError);
    // each coordinate ordering of the closed form gives the same function
    EXPECT_NEAR(detail::green_half(0.2, 0.35, 24), detail::green_half(0.35, 0.2, 24), 1e-13);
    EXPECT_NEAR(detail::green_half(0.01, 0.4, 24), detail::green_half(0.4, 0.01, 24), 1e-13);
}

TEST(Green, MatchesSlowLatticeSeries) {
    // independent form: sum over k of cos(2 pi k b) cosh(pi k (1 - 2a)) / (k sinh(pi k))
    for (auto [a, b] : {std::pair{0.1, 0.2}, {0.37, 0.05}, {0.25, 0.5}}) {
        double s = 0.0;
        for (int k = 1; k < 200; ++k) s += std::cos(2 * pi * k * b) * std::cosh(pi * k * (1 - 2 * a)) / (k * std::sinh(pi * k));
        const double ref = -0.5 * (a * a - a + 1.0 / 6) - s / (2 * pi);
        EXPECT_NEAR(torus_green({0, 0}, {a, b}).total, ref, 1e-12);
    }
}

TEST(Green, MeanZero) {
    const int N = 200;
    double acc = 0.0;
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) acc += torus_green({0, 0}, {(i + 0.5) / N, (j + 0.5) / N}).total;
    EXPECT_NEAR(acc / (N * N), 0.0, 1e-4);
}

TEST(Green, RegularPartSmoothNearDiagonal) {
    std::vector<double> reg;
    for (int k = 0; k < 10; ++k) {
        const double d = std::pow(10.0, -4 + 2.0 * k / 9);
        reg.push_back(torus_green({0.2, 0.2}, {0.2 + d / std::sqrt(2.0), 0.2 + d / std::sqrt(2.0)}).regular_part);
    }
    double mean = 0;
    for (double v : reg) mean += v / 10;
    double var = 0;
    for (double v : reg) var += (v - mean) * (v - mean) / 9;
    EXPECT_LE(var, 1e-3);
    EXPECT_LE(var, 1e-8);
}

TEST(Green, ConvolutionReproducesPsi0) {
    // psi0(x) = int G(x - y) (-sgn y1 sgn y2) dy by midpoint quadrature
    const int n = 512;
    QuarterGrid g(n);
    auto p = compute_psi0(n, g);
    const int Q = 512;  // cells aligned with the sign discontinuities
    // even node indices, so no quadrature midpoint coincides with x
    const std::vector<std::pair<int, int>> pts = {{40, 40}, {100, 300}, {256, 256}, {18, 450}, {400, 120},
                                                  {334, 78}, {500, 500}, {60, 200}, {210, 20}, {150, 150}};
    for (auto [i, j] : pts) {
        const double x1 = g.x(i), x2 = g.x(j);
        double acc = 0.0;
        for (int b = 0; b < Q; ++b) {
            const double y2 = -0.5 + (b + 0.5) / Q;
            for (int a = 0; a < Q; ++a) {
                const double y1 = -0.5 + (a + 0.5) / Q;
                const double sg = ((y1 > 0) == (y2 > 0)) ? -1.0 : 1.0;
                acc += sg * torus_green({x1, x2}, {y1, y2}, 8).total;
            }
        }
        EXPECT_NEAR(acc / (double(Q) * Q), p.at(i, j), 1e-4);
    }
}
