#include <bcpatch/analysis.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bcpatch;
constexpr double pi = std::numbers::pi;

namespace {

const AngularProfile& profile() {
    static const AngularProfile P = solve_profile(0.5, 1024);
    return P;
}

SymmetricField scaled(const SymmetricField& f, double c) { return detail::combine(f, c, f, 0.0); }

// Converged field at eps = 1e-2, n = 1024, shared across tests.
const SolveReport& converged() {
    static const SolveReport rep = [] {
        SolveConfig c;
        c.eps = 1e-2;
        c.n = 1024;
        return solve_steady(c);
    }();
    return rep;
}

// |x1 - 1/4|^{1.3}: the gradient is 0.3-Holder across the line x1 = 1/4 with
// seminorm 2.6 * 2^{-0.3} (attained by pairs placed symmetrically across it).
C1Field line_cap(const QuarterGrid& g) {
    return {g, [](double x, double) {
                const double t = x - 0.25;
                return GradSample{std::pow(std::abs(t), 1.3), std::copysign(1.3 * std::pow(std::abs(t), 0.3), t), 0.0};
            }};
}

}  // namespace

// ---------------------------------------------------------------- sandwich

TEST(Sandwich, BarrierItselfPasses) {
    QuarterGrid g(1024);
    const auto rep = sandwich_check(barrier_field(profile(), 1e-2, g), profile(), 1e-2);
    EXPECT_TRUE(rep.pass());
    EXPECT_EQ(rep.lower_margin, 0.0);
    EXPECT_GT(rep.upper_margin, 0.0);
    EXPECT_GT(rep.nodes, 1000u);
}

TEST(Sandwich, HalfBarrierFailsLowerBound) {
    QuarterGrid g(1024);
    const auto rep = sandwich_check(scaled(barrier_field(profile(), 1e-2, g), 0.5), profile(), 1e-2);
    EXPECT_FALSE(rep.lower_ok);
    EXPECT_TRUE(rep.upper_ok);
}

TEST(Sandwich, LargeFieldFailsUpperBound) {
    QuarterGrid g(1024);
    const auto rep = sandwich_check(scaled(compute_psi0(1024, g), 40.0), profile(), 1e-2);
    EXPECT_TRUE(rep.lower_ok);
    EXPECT_FALSE(rep.upper_ok);
    EXPECT_NEAR(std::hypot(rep.upper_at[0], rep.upper_at[1]), rep.radius, 2.0 * g.h());
}

TEST(Sandwich, PsiZeroFallsBelowBarrierNearOrigin) {
    QuarterGrid g(1024);
    const auto rep = sandwich_check(compute_psi0(1024, g), profile(), 1e-2);
    EXPECT_FALSE(rep.lower_ok);
}

TEST(Sandwich, UnresolvedGridThrows) {
    QuarterGrid g(512);
    EXPECT_THROW(sandwich_check(compute_psi0(512, g), profile(), 1e-3), ResolutionError);
}

TEST(Sandwich, ConvergedRegression) {
    // The converged field dips below the barrier by 3.3e-5 (a relative 1-4%)
    // inside the region at eps = 1e-2; recorded, not a solver defect.
    const auto rep = sandwich_check(converged().phi, profile(), 1e-2);
    EXPECT_TRUE(rep.upper_ok);
    EXPECT_NEAR(rep.lower_margin, -3.26016e-05, 1e-9);
}

// ------------------------------------------------------------------- ratio

TEST(Ratio, BarrierGivesZero) {
    QuarterGrid g(256);
    const auto W = ratio_field(barrier_field(profile(), 1e-2, g), profile(), 1e-2, 4.0 * g.h());
    for (int j = 0; j <= g.n(); ++j)
        for (int i = 0; i <= g.n(); ++i)
            if (!W.masked(i, j)) {
                EXPECT_NEAR(W.at(i, j), 0.0, 1e-14);
            }
}

TEST(Ratio, DoubleBarrierGivesOne) {
    QuarterGrid g(256);
    const auto W = ratio_field(scaled(barrier_field(profile(), 1e-2, g), 2.0), profile(), 1e-2, 4.0 * g.h());
    std::size_t active = 0;
    for (int j = 0; j <= g.n(); ++j)
        for (int i = 0; i <= g.n(); ++i)
            if (!W.masked(i, j)) {
                EXPECT_NEAR(W.at(i, j), 1.0, 1e-14);
                ++active;
            }
    EXPECT_GT(active, 60000u);
    EXPECT_NEAR(W.sample(0.1, 0.2), 1.0, 1e-3);
}

TEST(Ratio, MasksAxesLinesAndCore) {
    QuarterGrid g(64);
    const auto W = ratio_field(barrier_field(profile(), 1e-2, g), profile(), 1e-2, 4.0 * g.h());
    EXPECT_TRUE(W.masked(0, 10));
    EXPECT_TRUE(W.masked(10, 0));
    EXPECT_TRUE(W.masked(64, 10));
    EXPECT_TRUE(W.masked(2, 2));
    EXPECT_FALSE(W.masked(3, 3));
    EXPECT_THROW(ratio_field(barrier_field(profile(), 1e-2, g), profile(), 1e-2, 2.0 * g.h()), DomainError);
}

// -------------------------------------------------------------- holder fit

TEST(Holder, PowerLawExact) {
    QuarterGrid g(1024);
    const auto W = ratio_from_nodes(sample_nodes(g, [](double x, double y) { return std::pow(std::hypot(x, y), 0.3); }), 0.0);
    const auto fit = origin_holder_fit(W, log_radii(8.0 * g.h(), 0.1, 32));
    EXPECT_NEAR(fit.exponent, 0.3, 0.02);
    EXPECT_GE(fit.r_squared, 0.999);
    EXPECT_EQ(fit.n_samples, 32);
}

TEST(Holder, ConstantField) {
    QuarterGrid g(256);
    const auto W = ratio_from_nodes(sample_nodes(g, [](double, double) { return 0.7; }), 0.0);
    const auto fit = origin_holder_fit(W, log_radii(8.0 * g.h(), 0.2, 24));
    EXPECT_NEAR(fit.exponent, 0.0, 0.02);
    EXPECT_NEAR(std::exp(fit.log_constant), 0.7, 1e-9);
}

TEST(Holder, CalibrationSuite) {
    for (int n : {1024, 4096}) {
        QuarterGrid g(n);
        const auto radii = log_radii(8.0 * g.h(), sandwich_radius(1e-3), 32);
        for (const auto& c : holder_calibration(g, {0.1, 0.3, 0.5}, radii, 4.0 * g.h())) {
            EXPECT_LE(c.error(), 0.02) << "n=" << n << " target=" << c.target;
            EXPECT_GE(c.fit.r_squared, 0.999);
        }
    }
}

TEST(Holder, TooFewRadiiIsAFitError) {
    QuarterGrid g(256);
    const auto W = ratio_from_nodes(sample_nodes(g, [](double x, double y) { return std::hypot(x, y); }), 0.0);
    EXPECT_THROW(origin_holder_fit(W, log_radii(8.0 * g.h(), 0.2, 10)), FitError);
    EXPECT_THROW(origin_holder_fit(W, {4.0 * g.h()}), DomainError);
}

TEST(Holder, NonPositiveRatioHasNoUsableRadii) {
    // At eps = 1e-2 the converged ratio is negative throughout the region.
    const auto& phi = converged().phi;
    const auto W = ratio_field(phi, profile(), 1e-2, 4.0 * phi.grid().h());
    EXPECT_THROW(origin_holder_fit(W, log_radii(8.0 * phi.grid().h(), sandwich_radius(1e-2), 32)), FitError);
    EXPECT_FALSE(estimate_sigma(phi, profile(), 1e-2).has_value());
}

// ------------------------------------------------------ C^{1,alpha} norms

TEST(C1Alpha, SmoothFieldSaturates) {
    QuarterGrid g(256);
    const auto f = spectral_c1(SymmetricField::sample(g, [](double x, double y) { return std::sin(2 * pi * x) * std::sin(2 * pi * y); }));
    const double a = c1alpha_seminorm(f, {0.5}, 10000, 1).seminorms[0];
    const double b = c1alpha_seminorm(f, {0.5}, 20000, 1).seminorms[0];
    EXPECT_TRUE(std::isfinite(a));
    EXPECT_GT(a, 0.0);
    EXPECT_LE(std::abs(b - a), 0.1 * a);
}

TEST(C1Alpha, LineCapAtCriticalExponent) {
    const double exact = 2.6 * std::pow(2.0, -0.3);
    for (int n : {256, 2048}) {
        const double v = c1alpha_seminorm(line_cap(QuarterGrid(n)), {0.3}, 20000, 5).seminorms[0];
        EXPECT_LE(v, exact * (1.0 + 1e-12));
        EXPECT_GE(v, 0.995 * exact);
    }
}

TEST(C1Alpha, LineCapAboveCriticalGrowsWithRefinement) {
    // sup is attained at the smallest sampled distance 8h, so going from
    // n = 256 to n = 2048 scales it by about 8^{0.05}
    std::vector<double> v;
    for (int n : {256, 512, 1024, 2048}) v.push_back(c1alpha_seminorm(line_cap(QuarterGrid(n)), {0.35}, 20000, 5).seminorms[0]);
    for (std::size_t k = 1; k < v.size(); ++k) EXPECT_GT(v[k], v[k - 1]);
    EXPECT_NEAR(v.back() / v.front(), std::pow(8.0, 0.05), 0.02);
}

TEST(C1Alpha, MonotoneInAlphaAndDeterministic) {
    QuarterGrid g(512);
    const auto f = spectral_c1(compute_psi0(512, g));
    const auto a = c1alpha_seminorm(f, {0.2, 0.33, 0.5}, 5000, 9);
    EXPECT_LE(a.seminorms[0], a.seminorms[1]);
    EXPECT_LE(a.seminorms[1], a.seminorms[2]);
    const auto b = c1alpha_seminorm(f, {0.2, 0.33, 0.5}, 5000, 9);
    EXPECT_EQ(a.seminorms, b.seminorms);
    EXPECT_THROW(c1alpha_seminorm(f, {1.0}, 10, 0), DomainError);
}

TEST(C1Alpha, BarrierGradientMatchesSpectral) {
    QuarterGrid g(1024);
    const auto a = barrier_c1(profile(), 1e-2, g).eval(0.2, 0.13);
    const double d = 1e-6;
    const double fd = (eval_barrier(profile(), 1e-2, 0.2 + d, 0.13) - eval_barrier(profile(), 1e-2, 0.2 - d, 0.13)) / (2 * d);
    EXPECT_NEAR(a.d1, fd, 1e-7 * std::abs(fd) + 1e-12);
}

// ------------------------------------------------------------ ratio L2

TEST(RatioL2, BarrierGivesQuarterArea) {
    QuarterGrid g(512);
    EXPECT_NEAR(ratio_l2_check(barrier_nodes(profile(), 1e-3, g), profile(), 1e-3), 0.25, 0.02 * 0.25);
}

TEST(RatioL2, PsiZeroStableUnderRefinement) {
    double prev = 0.0;
    for (int n : {256, 512, 1024}) {
        const double v = ratio_l2_check(compute_psi0(n, QuarterGrid(n)).nodes(), profile(), 1e-3);
        EXPECT_TRUE(std::isfinite(v));
        if (prev > 0.0) {
            EXPECT_NEAR(v, prev, 0.05 * prev);
        }
        prev = v;
    }
    EXPECT_NEAR(prev, 0.2210081667, 1e-8);
}

TEST(RatioL2, ConvergedRegression) {
    EXPECT_NEAR(ratio_l2_check(converged().phi.nodes(), profile(), 1e-2), 0.0610094, 1e-6);
}

// ------------------------------------------------------ degenerate equation

TEST(Degenerate, FunctionValues) {
    EXPECT_DOUBLE_EQ(degenerate_f(0.0, 0.5), 1.5);
    EXPECT_DOUBLE_EQ(degenerate_f(1e-13, 0.5), 1.5);
    EXPECT_NEAR(degenerate_f(1e-9, 0.5), 1.5, 1e-8);
    EXPECT_NEAR(degenerate_f(1.0, 0.5), (std::pow(2.0, 1.5) - 1.0) / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(degenerate_f(1.0, 0.5), 1.29289, 1e-5);
    for (double w = 0.0; w <= 50.0; w += 0.01) EXPECT_GE(degenerate_f(w, 0.5), 1.0);
    for (double s : {0.1, 0.9})
        for (double w : {1e-6, 0.3, 10.0, 1e4}) EXPECT_GE(degenerate_f(w, s), 1.0);
}

TEST(Degenerate, ConvergedResidualRegression) {
    const auto rep = degenerate_residual(converged().phi, profile(), 1e-2, sandwich_radius(1e-2));
    EXPECT_GT(rep.nodes, 1000u);
    EXPECT_LE(rep.residual, 1e-2);
    EXPECT_NEAR(rep.residual, 0.001612, 1e-6);
}

// ------------------------------------------------------ scaling invariance

// The x-stencil of w and the y-stencil of w(R .) visit the same points, so the
// mismatch is pure rounding for any w.
TEST(Scaling, BarrierMultiple) {
    auto w = [](double x, double y) { return 3.0 * eval_barrier(profile(), 1.0, x, y); };
    EXPECT_LE(scaling_invariance_check(w, profile(), 0.5, 1.0 / 1024, 0.05, 0.4, 0.02).mismatch, 1e-6);
}

TEST(Scaling, PowerLaw) {
    auto w = [](double x, double y) { return std::pow(std::hypot(x, y), 0.3); };
    for (double h : {1.0 / 512, 1.0 / 2048}) EXPECT_LE(scaling_invariance_check(w, profile(), 0.5, h, 0.05, 0.4, 0.02).mismatch, h);
}

TEST(Scaling, QuotientMatchesClosedForm) {
    // w = psi1^k, with derivatives of psi1 from plain central differences.
    const auto& P = profile();
    const double k = 0.5, x = 0.2, y = 0.11, d = 1e-4;
    auto b = [&](double a, double c) { return eval_barrier(P, 1.0, a, c); };
    auto w = [&](double a, double c) { return std::pow(b(a, c), k); };
    const double bx = (b(x + d, y) - b(x - d, y)) / (2 * d), by = (b(x, y + d) - b(x, y - d)) / (2 * d);
    const double lap = (b(x + d, y) + b(x - d, y) + b(x, y + d) + b(x, y - d) - 4 * b(x, y)) / (d * d);
    const double B = b(x, y);
    // div(B^2 grad B^k) = k B^{k+1} Lap B + k (k+1) B^k |grad B|^2
    const double expected = (k * std::pow(B, k + 1) * lap + k * (k + 1) * std::pow(B, k) * (bx * bx + by * by)) /
                            (std::pow(B, 1.0 - P.s) * std::pow(B, k));
    EXPECT_NEAR(degenerate_quotient(w, P, x, y, 1e-3), expected, 1e-4 * std::abs(expected));
}

TEST(Scaling, ConvergedRatio) {
    const auto& phi = converged().phi;
    const double h = phi.grid().h();
    auto nodes = std::make_shared<NodeField>(phi.nodes());
    auto w = [nodes](double x, double y) { return interpolate(*nodes, x, y) / eval_barrier(profile(), 1e-2, x, y) - 1.0; };
    const auto rep = scaling_invariance_check(w, profile(), 0.5, h, 64.0 * h, sandwich_radius(1e-2), 8.0 * h);
    EXPECT_EQ(rep.points, 144u);
    EXPECT_LE(rep.mismatch, 1e-2);
}

// ------------------------------------------------------------------ sweep

TEST(Sweep, SingleEntryHasNoContinuityColumn) {
    SweepConfig cfg;
    cfg.eps = {1e-2};
    cfg.n = 256;
    cfg.pairs = 2000;
    const auto rows = convergence_sweep(cfg);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_FALSE(rows[0].continuity_diff.has_value());
    EXPECT_FALSE(rows[0].resolved);
    EXPECT_DOUBLE_EQ(rows[0].sigma_used, 0.005);
    EXPECT_GT(rows[0].barrier_c1alpha, 0.0);
}

TEST(Sweep, RejectsUnorderedList) {
    SweepConfig cfg;
    cfg.eps = {1e-3, 1e-2};
    EXPECT_THROW(convergence_sweep(cfg), DomainError);
    cfg.eps = {};
    EXPECT_THROW(convergence_sweep(cfg), DomainError);
}

TEST(Sweep, InjectedSolverAndContinuity) {
    // With every eps mapped to the same field the continuity column vanishes.
    SweepConfig cfg;
    cfg.eps = {1e-2, 1e-3};
    cfg.n = 128;
    cfg.pairs = 1000;
    const QuarterGrid g(128);
    const auto psi0 = compute_psi0(128, g);
    const auto rows = convergence_sweep(cfg, [&](double) {
        SolveConfig sc;
        sc.n = 128;
        return SolveReport(psi0, sc);
    });
    ASSERT_EQ(rows.size(), 2u);
    ASSERT_TRUE(rows[0].continuity_diff.has_value());
    EXPECT_EQ(*rows[0].continuity_diff, 0.0);
    EXPECT_EQ(rows[0].c1_norm_diff, 0.0);
    EXPECT_FALSE(rows[1].continuity_diff.has_value());
}

TEST(Sweep, LogLogSlope) {
    std::vector<double> x{1e-2, 1e-3, 1e-4}, y;
    for (double e : x) y.push_back(3.0 * std::pow(e, 1.0 / 3.0));
    EXPECT_NEAR(loglog_slope(x, y), 1.0 / 3.0, 1e-12);
}
