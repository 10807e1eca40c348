#pragma once

#include <bcpatch/core.hpp>
#include <bcpatch/grid.hpp>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace bcpatch {

// Angular profile g of the self-similar barrier r^beta g(theta):
//   g'' + beta^2 g + g^{-s} = 0 on (0, pi/2),  g(0) = g(pi/2) = 0.
// Nodes follow theta(xi) = (pi/4)(1 + tanh(lambda xi)/tanh(lambda)), xi uniform
// on [-1, 1], which clusters them at both endpoints.
struct AngularProfile {
    double s = 0.5;
    double beta = 4.0 / 3.0;
    double a = 0.0;        // g'(0)
    double center = 0.0;   // g(pi/4)
    double energy = 0.0;   // p^2/2 + V(g), conserved
    double lambda = 4.0;
    double theta_cut = 1e-3;
    std::array<double, 2> bracket{};  // final bisection bracket on g(pi/4)
    int bisection_steps = 0;
    std::vector<double> theta;
    std::vector<double> g;
    std::vector<double> dg;  // g'

    int K() const { return static_cast<int>(theta.size()) - 1; }

    double potential(double u) const { return 0.5 * beta * beta * u * u + std::pow(u, 1.0 - s) / (1.0 - s); }
    double force(double u) const { return -beta * beta * u - std::pow(u, -s); }  // g''

    double theta_of_xi(double xi) const {
        return 0.25 * std::numbers::pi * (1.0 + std::tanh(lambda * xi) / std::tanh(lambda));
    }
    double dtheta(double xi) const {
        const double c = 1.0 / std::cosh(lambda * xi);
        return 0.25 * std::numbers::pi * lambda * c * c / std::tanh(lambda);
    }
    double d2theta(double xi) const {
        const double c = 1.0 / std::cosh(lambda * xi);
        return -0.5 * std::numbers::pi * lambda * lambda * c * c * std::tanh(lambda * xi) / std::tanh(lambda);
    }
    double xi_of_theta(double th) const {
        return std::atanh((th / (0.25 * std::numbers::pi) - 1.0) * std::tanh(lambda)) / lambda;
    }

    // V(c) - V(c - t) without cancellation.
    double potential_drop(double c, double t) const {
        const double q = 0.5 * beta * beta * t * (2.0 * c - t);
        return q - std::pow(c, 1.0 - s) * std::expm1((1.0 - s) * std::log1p(-t / c)) / (1.0 - s);
    }

    // Quarter period of the level through the turning point c.
    double time_map(double c) const {
        boost::math::quadrature::tanh_sinh<double> q;
        const double E = potential(c);
        auto lower = [&](double u) { return 1.0 / std::sqrt(2.0 * (E - potential(u))); };
        auto upper = [&](double t) { return 1.0 / std::sqrt(2.0 * potential_drop(c, t)); };
        return q.integrate(lower, 0.0, 0.5 * c) + q.integrate(upper, 0.0, 0.5 * c);
    }

    // Time needed to go from 0 to height u along the energy level.
    double layer_time(double u) const {
        if (u <= 0.0) return 0.0;
        boost::math::quadrature::tanh_sinh<double> q;
        auto f = [this](double v) { return 1.0 / std::sqrt(2.0 * (energy - potential(v))); };
        return q.integrate(f, 0.0, u);
    }

    // Inverts layer_time on [0, umax].
    double layer_height(double t, double umax) const {
        if (t <= 0.0) return 0.0;
        auto f = [&](double u) { return layer_time(u) - t; };
        boost::math::tools::eps_tolerance<double> tol(50);
        std::uintmax_t it = 200;
        auto r = boost::math::tools::toms748_solve(f, 0.0, umax, -t, layer_time(umax) - t, tol, it);
        return 0.5 * (r.first + r.second);
    }

    double value(double th) const { return interp(th, false); }
    double derivative(double th) const { return interp(th, true); }

    // Sup over [cut, pi/2 - cut] of |g'' + beta^2 g + g^{-s}| and |g' - p|,
    // where g' and g'' = p' come from sixth-order differences of the stored
    // nodes in xi. First differences keep roundoff small in the graded layer.
    double ode_residual(double cut) const {
        const int k = K();
        const double dxi = 2.0 / k;
        static constexpr double d6[7] = {-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60};
        double worst = 0.0;
        for (int i = 3; i <= k - 3; ++i) {
            if (theta[i] < cut || theta[i] > 0.5 * std::numbers::pi - cut) continue;
            double gx = 0.0, px = 0.0;
            for (int q = 0; q < 7; ++q) {
                gx += d6[q] * g[i - 3 + q];
                px += d6[q] * dg[i - 3 + q];
            }
            const double t1 = dtheta(-1.0 + i * dxi) * dxi;
            const double eq = px / t1 + beta * beta * g[i] + std::pow(g[i], -s);
            const double slope = gx / t1 - dg[i];
            worst = std::max({worst, std::abs(eq), std::abs(slope)});
        }
        return worst;
    }

private:
    double interp(double th, bool deriv) const {
        const double q = 0.25 * std::numbers::pi;
        double sign = 1.0;
        if (th > q) {
            th = 2.0 * q - th;
            sign = -1.0;
        }
        if (th <= 0.0) return deriv ? sign * a : 0.0;
        if (deriv && th < theta_cut) {  // slope from the energy level
            const double u = interp(th, false);
            return sign * std::sqrt(2.0 * (energy - potential(u)));
        }
        const int k = K();
        const double dxi = 2.0 / k;
        const double xi = std::max(-1.0, xi_of_theta(th));
        int i = static_cast<int>(std::floor((xi + 1.0) / dxi));
        i = std::clamp(i, 0, k / 2 - 1);
        if (i == 0) {  // first cell: invert the energy integral directly
            const double u = layer_height(th, g[1] * 1.5);
            return deriv ? sign * std::sqrt(2.0 * (energy - potential(u))) : u;
        }
        const double xa = -1.0 + i * dxi;
        const double xb = xa + dxi;
        const double t = (xi - xa) / dxi;
        auto node = [&](int j, double x, double out[3]) {
            const double t1 = dtheta(x), t2 = d2theta(x);
            const double gv = g[j], pv = dg[j];
            const double g2 = force(gv);
            if (!deriv) {
                out[0] = gv;
                out[1] = t1 * pv;
                out[2] = t2 * pv + t1 * t1 * g2;
            } else {
                const double g3 = -beta * beta * pv + s * std::pow(gv, -s - 1.0) * pv;
                out[0] = pv;
                out[1] = t1 * g2;
                out[2] = t2 * g2 + t1 * t1 * g3;
            }
        };
        double A[3], B[3];
        node(i, xa, A);
        node(i + 1, xb, B);
        const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
        const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
        const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
        const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
        const double h3 = 0.5 * (t3 - 2 * t4 + t5);
        const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
        const double h5 = 10 * t3 - 15 * t4 + 6 * t5;
        const double v = A[0] * h0 + A[1] * dxi * h1 + A[2] * dxi * dxi * h2 + B[2] * dxi * dxi * h3 +
                         B[1] * dxi * h4 + B[0] * h5;
        return deriv ? sign * v : v;
    }
};

namespace detail {

struct ShootResult {
    double theta_zero;  // where g reaches 0 (the target is 0)
    std::vector<double> g, dg;  // nodes from the cut to the center, only when record
    int cut_index = 0;
};

// Integrates from the center down to the last node above the cut, then
// crosses the layer with the energy integral.
inline ShootResult shoot(AngularProfile& P, double c, bool record) {
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 2>;
    const int K = P.K();
    const int half = K / 2;
    const double dxi = 2.0 / K;
    ShootResult res;

    int cut = half;
    while (cut > 0 && P.theta[cut - 1] >= P.theta_cut) --cut;
    res.cut_index = cut;

    // Exact time map screens trajectories that vanish above the cut.
    if (!record) {
        const double tz = 0.25 * std::numbers::pi - P.time_map(c);
        if (tz > 0.5 * P.theta[cut]) {
            res.theta_zero = tz;
            return res;
        }
    }

    auto rhs = [&P](const State& y, State& dy, double xi) {
        const double t1 = P.dtheta(xi);
        dy[0] = t1 * y[1];
        dy[1] = t1 * P.force(y[0]);
    };
    State y{c, 0.0};
    if (record) {
        res.g.assign(half + 1, 0.0);
        res.dg.assign(half + 1, 0.0);
        res.g[half] = c;
    }
    auto stepper = ode::make_controlled(1e-15, 1e-15, ode::runge_kutta_fehlberg78<State>());
    for (int i = half; i > cut; --i) {
        const double xa = -1.0 + i * dxi, xb = -1.0 + (i - 1) * dxi;
        ode::integrate_adaptive(stepper, rhs, y, xa, xb, -dxi / 8);
        if (!(y[0] > 0.0)) throw ConvergenceError("barrier profile: trajectory left positivity");
        if (record) {
            res.g[i - 1] = y[0];
            res.dg[i - 1] = y[1];
        }
    }
    P.energy = 0.5 * y[1] * y[1] + P.potential(y[0]);
    res.theta_zero = P.theta[cut] - P.layer_time(y[0]);
    return res;
}

}  // namespace detail

inline AngularProfile solve_profile(double s, int K = 1024, double tol = 1e-13) {
    if (!(s > 0.05 && s < 0.95)) throw DomainError("solve_profile: s must lie in (0.05, 0.95)");
    if (K < 512 || K % 2 != 0) throw DomainError("solve_profile: K must be even and >= 512");
    AngularProfile P;
    P.s = s;
    P.beta = 2.0 / (1.0 + s);
    P.theta.resize(K + 1);
    for (int i = 0; i <= K; ++i) P.theta[i] = P.theta_of_xi(-1.0 + 2.0 * i / K);
    P.theta[0] = 0.0;
    P.theta[K / 2] = 0.25 * std::numbers::pi;
    P.theta[K] = 0.5 * std::numbers::pi;

    auto F = [&](double c) { return detail::shoot(P, c, false).theta_zero; };

    // g(pi/4) is bracketed by a vanishing trajectory (F > 0) and one that
    // stays positive past theta = 0 (F < 0).
    double lo = 1e-3, hi = 1.0;
    double flo = F(lo), fhi = F(hi);
    for (int t = 0; t < 60 && flo <= 0.0; ++t) flo = F(lo *= 0.5);
    for (int t = 0; t < 60 && fhi >= 0.0; ++t) fhi = F(hi *= 2.0);
    if (!(flo > 0.0 && fhi < 0.0)) {
        std::ostringstream os;
        os << "barrier profile: no sign change in bracket [" << lo << ", " << hi << "]";
        throw ConvergenceError(os.str());
    }
    int steps = 0;
    while (hi - lo > tol * hi && steps < 200) {
        const double mid = 0.5 * (lo + hi);
        const double fm = F(mid);
        if (fm > 0.0) lo = mid;
        else if (fm < 0.0) hi = mid;
        else lo = hi = mid;
        ++steps;
    }
    if (hi - lo > tol * hi) {
        std::ostringstream os;
        os.precision(17);
        os << "barrier profile: bisection did not converge, bracket [" << lo << ", " << hi << "]";
        throw ConvergenceError(os.str());
    }
    P.bracket = {lo, hi};
    P.bisection_steps = steps;
    P.center = 0.5 * (lo + hi);

    auto shot = detail::shoot(P, P.center, true);
    const int half = K / 2;
    P.g.assign(K + 1, 0.0);
    P.dg.assign(K + 1, 0.0);
    for (int i = shot.cut_index; i <= half; ++i) {
        P.g[i] = shot.g[i];
        P.dg[i] = shot.dg[i];
    }
    const double tz = shot.theta_zero;
    for (int i = 1; i < shot.cut_index; ++i) {
        P.g[i] = P.layer_height(P.theta[i] - tz, P.g[shot.cut_index]);
        P.dg[i] = std::sqrt(2.0 * (P.energy - P.potential(P.g[i])));
    }
    P.a = std::sqrt(2.0 * P.energy);
    P.g[0] = 0.0;
    P.dg[0] = P.a;
    P.dg[half] = 0.0;
    for (int i = 0; i < half; ++i) {
        P.g[K - i] = P.g[i];
        P.dg[K - i] = -P.dg[i];
    }
    return P;
}

// Self-similar barrier eps^{s/(1+s)} r^{2/(1+s)} g(theta).
inline double eval_barrier(const AngularProfile& P, double eps, double x1, double x2) {
    if (x1 <= 0.0 || x2 <= 0.0) return 0.0;
    const double r = std::hypot(x1, x2);
    return std::pow(eps, P.s / (1.0 + P.s)) * std::pow(r, P.beta) * P.value(std::atan2(x2, x1));
}

inline std::array<double, 2> eval_barrier_gradient(const AngularProfile& P, double eps, double x1, double x2) {
    const double r = std::hypot(x1, x2);
    if (r == 0.0) return {0.0, 0.0};
    const double th = std::atan2(x2, x1);
    const double c = std::cos(th), sn = std::sin(th);
    const double g = P.value(th), dg = P.derivative(th);
    const double k = std::pow(eps, P.s / (1.0 + P.s)) * std::pow(r, P.beta - 1.0);
    return {k * (P.beta * g * c - dg * sn), k * (P.beta * g * sn + dg * c)};
}

// Samples the barrier at every node. It is a local object near the origin,
// so the lines x = 1/2 and y = 1/2 are pinned to zero like every
// SymmetricField.
inline SymmetricField barrier_field(const AngularProfile& P, double eps, const QuarterGrid& grid) {
    return SymmetricField::sample(grid, [&](double x, double y) { return eval_barrier(P, eps, x, y); });
}

// Unpinned node samples, for diagnostics that need values up to x = 1/2.
inline NodeField barrier_nodes(const AngularProfile& P, double eps, const QuarterGrid& grid) {
    return sample_nodes(grid, [&](double x, double y) { return eval_barrier(P, eps, x, y); }, Parity::Odd,
                        Parity::Odd);
}

}  // namespace bcpatch
