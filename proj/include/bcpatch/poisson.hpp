#pragma once

#include <bcpatch/core.hpp>
#include <bcpatch/grid.hpp>
#include <bcpatch/spectral.hpp>

#include <array>
#include <cmath>
#include <numbers>

namespace bcpatch {

inline SineSpectrum invert_laplacian(const SineSpectrum& s) {
    SineSpectrum out(s);
    for (int m = 1; m < s.n(); ++m)
        for (int k = 1; k < s.n(); ++k) out(m, k) /= SineSpectrum::eigenvalue(m, k);
    return out;
}

// Closed-form sine coefficient of psi0 for odd m, k (zero otherwise).
inline double psi0_coefficient(int m, int k) {
    if (m % 2 == 0 || k % 2 == 0) return 0.0;
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    const double md = m, kd = k;
    return 16.0 / (pi2 * md * kd) / (4.0 * pi2 * (md * md + kd * kd));
}

// Coefficients of modes 1..M folded onto the modes resolved by an n-cell grid.
// At the nodes, mode m acts like mode m mod 2n, and like -(2n - m mod 2n)
// above n.
inline SineSpectrum psi0_spectrum(int M, int n) {
    if (M < 1 || (M & (M - 1)) != 0) throw DomainError("mode count must be a power of two");
    SineSpectrum s(n);
    auto fold = [n](int m, int& sign) {
        const int r = m % (2 * n);
        if (r == 0 || r == n) return 0;
        if (r < n) {
            sign = 1;
            return r;
        }
        sign = -1;
        return 2 * n - r;
    };
    for (int m = 1; m <= M; m += 2) {
        int sm = 1;
        const int fm = fold(m, sm);
        if (fm == 0) continue;
        for (int k = 1; k <= M; k += 2) {
            int sk = 1;
            const int fk = fold(k, sk);
            if (fk == 0) continue;
            s(fm, fk) += sm * sk * psi0_coefficient(m, k);
        }
    }
    return s;
}

inline SymmetricField compute_psi0(int M, const QuarterGrid& g) {
    return transform_inverse(psi0_spectrum(M, g.n())).symmetrized();
}

struct GreenSplit {
    std::array<double, 2> x{};
    std::array<double, 2> y{};
    double distance = 0.0;
    double total = 0.0;
    double log_part = 0.0;
    double regular_part = 0.0;
};

namespace detail {

inline double periodic_offset(double d) { return std::abs(d - std::nearbyint(d)); }

// Mean-zero torus Green's function from the partial Fourier sum in x2,
// with the nearest-image logarithm summed in closed form. a is in [0,1/2].
inline double green_half(double a, double b, int terms) {
    constexpr double pi = std::numbers::pi;
    const double e = std::exp(-2.0 * pi * a);
    const double em = std::expm1(-2.0 * pi * a);
    const double sb = std::sin(pi * b);
    const double mod2 = em * em + 4.0 * e * sb * sb;  // |1 - exp(-2 pi (a - i b))|^2
    double g = -0.5 * (a * a - a + 1.0 / 6.0) + std::log(mod2) / (4.0 * pi);
    double tail = 0.0;
    for (int k = 1; k <= terms; ++k) {
        const double q = std::exp(-2.0 * pi * k);
        const double rk = (std::exp(-2.0 * pi * k * (1.0 - a)) + std::exp(-2.0 * pi * k * (1.0 + a))) / (1.0 - q);
        tail += std::cos(2.0 * pi * k * b) * rk / k;
    }
    return g - tail / (2.0 * pi);
}

}  // namespace detail

// Mean-zero Green's function of the Laplacian on the unit torus, symmetrized
// over the two coordinate orderings. terms: number of remainder modes.
inline GreenSplit torus_green(std::array<double, 2> x, std::array<double, 2> y, int terms = 24) {
    const double a = detail::periodic_offset(x[0] - y[0]);
    const double b = detail::periodic_offset(x[1] - y[1]);
    const double d = std::hypot(a, b);
    if (d == 0.0) throw DomainError("torus_green: coincident points");
    GreenSplit out;
    out.x = x;
    out.y = y;
    out.distance = d;
    const double raw = 0.5 * (detail::green_half(a, b, terms) + detail::green_half(b, a, terms));
    out.log_part = std::log(d) / (2.0 * std::numbers::pi);
    out.regular_part = raw - out.log_part;
    out.total = out.log_part + out.regular_part;
    return out;
}

}  // namespace bcpatch
