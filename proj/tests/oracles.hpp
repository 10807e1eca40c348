#pragma once

#include <cmath>
#include <numbers>

namespace oracle {

// Independent oracle: classic RK4 with 1e6 fixed steps in theta, started at
// theta = h from the two-term endpoint expansion, bisection on g'(0) so that
// g'(pi/4) = 0. Returns g(pi/4).
inline double profile_midpoint_rk4(double s) {
    constexpr double pi = std::numbers::pi;
    const double beta = 2.0 / (1.0 + s);
    const int N = 1000000;
    const double h = 0.25 * pi / N;
    auto run = [&](double a, double& gmid) {
        double th = h;
        double g = a * th - std::pow(a, -s) * std::pow(th, 2 - s) / ((2 - s) * (1 - s));
        double p = a - std::pow(a, -s) * std::pow(th, 1 - s) / (1 - s);
        auto f = [&](double gg) { return -beta * beta * gg - std::pow(gg, -s); };
        for (int k = 1; k < N; ++k) {
            const double k1g = p, k1p = f(g);
            const double k2g = p + 0.5 * h * k1p, k2p = f(g + 0.5 * h * k1g);
            const double k3g = p + 0.5 * h * k2p, k3p = f(g + 0.5 * h * k2g);
            const double k4g = p + h * k3p, k4p = f(g + h * k3g);
            g += h / 6 * (k1g + 2 * k2g + 2 * k3g + k4g);
            p += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
            if (g <= 0) {
                gmid = g;
                return -1.0;
            }
        }
        gmid = g;
        return p;  // g'(pi/4)
    };
    double lo = 0.5, hi = 10.0, gm = 0.0;
    while (hi - lo > 1e-11 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (run(mid, gm) < 0) lo = mid;
        else hi = mid;
    }
    run(0.5 * (lo + hi), gm);
    return gm;
}

}  // namespace oracle
