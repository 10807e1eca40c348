#pragma once

#include <bcpatch/barrier.hpp>
#include <bcpatch/core.hpp>
#include <bcpatch/grid.hpp>
#include <bcpatch/poisson.hpp>
#include <bcpatch/spectral.hpp>
#include <bcpatch/steady.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

namespace bcpatch {

// ---------------------------------------------------------------- sandwich

struct SandwichReport {
    double eps = 0.0;
    double radius = 0.0;
    double tol = 0.0;
    std::size_t nodes = 0;
    double lower_margin = 0.0;  // min of phi - barrier
    std::array<double, 2> lower_at{};
    double upper_margin = 0.0;  // min of eps - phi
    std::array<double, 2> upper_at{};
    bool lower_ok = false;
    bool upper_ok = false;
    bool pass() const { return lower_ok && upper_ok; }
};

// barrier_scale multiplies the barrier (1 for the actual check).
inline SandwichReport sandwich_check(const SymmetricField& phi, const AngularProfile& P, double eps,
                                     double barrier_scale = 1.0) {
    const QuarterGrid& g = phi.grid();
    SandwichReport rep;
    rep.eps = eps;
    rep.radius = sandwich_radius(eps);
    rep.tol = 1e-8 * eps;
    if (!grid_resolves(eps, g))
        throw ResolutionError("sandwich region sqrt(eps)/(-ln eps) is below 20 grid spacings");
    rep.lower_margin = rep.upper_margin = 1e300;
    const int lim = std::min(g.n(), static_cast<int>(std::ceil(rep.radius / g.h())));
    for (int j = 0; j <= lim; ++j)
        for (int i = 0; i <= lim; ++i) {
            const double x = g.x(i), y = g.x(j);
            if (std::hypot(x, y) > rep.radius) continue;
            ++rep.nodes;
            const double v = phi.at(i, j);
            const double lo = v - barrier_scale * eval_barrier(P, eps, x, y);
            const double up = eps - v;
            if (lo < rep.lower_margin) {
                rep.lower_margin = lo;
                rep.lower_at = {x, y};
            }
            if (up < rep.upper_margin) {
                rep.upper_margin = up;
                rep.upper_at = {x, y};
            }
        }
    rep.lower_ok = rep.lower_margin >= -rep.tol;
    rep.upper_ok = rep.upper_margin >= -rep.tol;
    return rep;
}

// ------------------------------------------------------------------- ratio

struct RatioField {
    QuarterGrid grid;
    double r_min = 0.0;
    std::vector<double> W;        // node values, zero where masked
    std::vector<unsigned char> mask;  // 1 = excluded
    double axis_margin = 0.0;     // off-grid samples keep this distance from the axes
    std::function<double(double, double)> sampler;

    double sample(double x1, double x2) const { return sampler(x1, x2); }
    double at(int i, int j) const { return W[grid.index(i, j)]; }
    bool masked(int i, int j) const { return mask[grid.index(i, j)] != 0; }
};

inline RatioField ratio_field(const SymmetricField& phi, const AngularProfile& P, double eps, double r_min) {
    const QuarterGrid& g = phi.grid();
    if (r_min < 4.0 * g.h() * (1.0 - 1e-12)) throw DomainError("ratio_field: r_min must be at least 4h");
    RatioField rf{g, r_min, std::vector<double>(g.size(), 0.0), std::vector<unsigned char>(g.size(), 1), 0.0, {}};
    // the lines x = 1/2 and y = 1/2 are pinned for phi but not for the barrier
    for (int j = 1; j < g.n(); ++j)
        for (int i = 1; i < g.n(); ++i) {
            const double x = g.x(i), y = g.x(j);
            if (std::hypot(x, y) < r_min) continue;
            const double b = eval_barrier(P, eps, x, y);
            if (!(b > 0.0)) throw Error("ratio_field: barrier vanishes at an unmasked node");
            rf.W[g.index(i, j)] = phi.at(i, j) / b - 1.0;
            rf.mask[g.index(i, j)] = 0;
        }
    rf.axis_margin = 4.0 * g.h();
    auto nodes = std::make_shared<NodeField>(phi.nodes());
    auto prof = std::make_shared<AngularProfile>(P);
    rf.sampler = [nodes, prof, eps](double x1, double x2) {
        return interpolate(*nodes, x1, x2) / eval_barrier(*prof, eps, x1, x2) - 1.0;
    };
    return rf;
}

// Ratio field from arbitrary node values, sampled by bicubic interpolation.
inline RatioField ratio_from_nodes(const NodeField& values, double r_min) {
    const QuarterGrid& g = values.grid;
    RatioField rf{g, r_min, values.values, std::vector<unsigned char>(g.size(), 0), 0.0, {}};
    rf.axis_margin = 0.0;
    auto nodes = std::make_shared<NodeField>(values);
    rf.sampler = [nodes](double x1, double x2) { return interpolate(*nodes, x1, x2); };
    return rf;
}

// ------------------------------------------------------------ holder fit

struct HolderEstimate {
    double exponent = 0.0;
    double log_constant = 0.0;
    double r_lo = 0.0;
    double r_hi = 0.0;
    double r_squared = 0.0;
    int n_samples = 0;
};

inline HolderEstimate fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    if (m < 20) throw FitError("power-law fit needs at least 20 usable points, got " + std::to_string(m));
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < m; ++k) {
        mx += std::log(x[k]);
        my += std::log(y[k]);
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const double dx = std::log(x[k]) - mx, dy = std::log(y[k]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    HolderEstimate e;
    e.exponent = sxx > 0 ? sxy / sxx : 0.0;
    e.log_constant = my - e.exponent * mx;
    double sse = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const double d = std::log(y[k]) - (e.log_constant + e.exponent * std::log(x[k]));
        sse += d * d;
    }
    e.r_squared = syy > 0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
    e.n_samples = static_cast<int>(m);
    e.r_lo = *std::min_element(x.begin(), x.end());
    e.r_hi = *std::max_element(x.begin(), x.end());
    return e;
}

inline std::vector<double> log_radii(double lo, double hi, int count) {
    std::vector<double> r(count);
    for (int k = 0; k < count; ++k) r[k] = lo * std::pow(hi / lo, count == 1 ? 0.0 : double(k) / (count - 1));
    return r;
}

// Fits log S(r) against log r with S(r) the max of W over theta samples.
inline HolderEstimate origin_holder_fit(const RatioField& W, const std::vector<double>& radii, int theta_samples = 65) {
    const double h = W.grid.h();
    std::vector<double> rs, ss;
    for (double r : radii) {
        if (r < 8.0 * h * (1.0 - 1e-12)) throw DomainError("origin_holder_fit: radii must be at least 8h");
        if (r > 0.5) throw DomainError("origin_holder_fit: radius outside the quarter");
        const double t0 = std::asin(std::min(1.0, W.axis_margin / r));
        const double t1 = 0.5 * std::numbers::pi - t0;
        if (t1 < t0) continue;
        double S = -1e300;
        for (int k = 0; k < theta_samples; ++k) {
            const double th = theta_samples == 1 ? 0.25 * std::numbers::pi : t0 + (t1 - t0) * k / (theta_samples - 1);
            S = std::max(S, W.sample(r * std::cos(th), r * std::sin(th)));
        }
        if (std::isfinite(S) && S > 0.0) {
            rs.push_back(r);
            ss.push_back(S);
        }
    }
    return fit_power_law(rs, ss);
}

struct CalibrationPoint {
    double target = 0.0;
    HolderEstimate fit;
    double error() const { return std::abs(fit.exponent - target); }
};

// Fits synthetic ratio fields r^e (1 + sin^2(2 theta - 0.3) / 4) on grid g
// over the given radii. The angular maximum falls between theta samples. The
// estimator is trusted when every error is within 0.02.
inline std::vector<CalibrationPoint> holder_calibration(const QuarterGrid& g, const std::vector<double>& exponents,
                                                        const std::vector<double>& radii, double axis_margin) {
    std::vector<CalibrationPoint> out;
    for (double e : exponents) {
        auto nodes = sample_nodes(g, [e](double x, double y) {
            const double r = std::hypot(x, y);
            if (r == 0.0) return 0.0;
            const double sn = std::sin(2.0 * std::atan2(y, x) - 0.3);
            return std::pow(r, e) * (1.0 + 0.25 * sn * sn);
        });
        auto W = ratio_from_nodes(nodes, 0.0);
        W.axis_margin = axis_margin;
        out.push_back({e, origin_holder_fit(W, radii)});
    }
    return out;
}

// ------------------------------------------------------- C^{1,alpha} norms

struct GradSample {
    double v = 0.0, d1 = 0.0, d2 = 0.0;
};

// A field known with its gradient everywhere on the closed quarter.
struct C1Field {
    QuarterGrid grid;
    std::function<GradSample(double, double)> eval;
};

inline C1Field spectral_c1(const SymmetricField& f) {
    auto gr = std::make_shared<Gradient>(gradient(f));
    auto val = std::make_shared<NodeField>(f.nodes());
    return {f.grid(), [gr, val](double x, double y) {
                return GradSample{interpolate(*val, x, y), interpolate(gr->d1, x, y), interpolate(gr->d2, x, y)};
            }};
}

inline C1Field barrier_c1(const AngularProfile& P, double eps, const QuarterGrid& g) {
    auto prof = std::make_shared<AngularProfile>(P);
    return {g, [prof, eps](double x, double y) {
                auto d = eval_barrier_gradient(*prof, eps, x, y);
                return GradSample{eval_barrier(*prof, eps, x, y), d[0], d[1]};
            }};
}

inline C1Field linear_combination(const C1Field& a, double ca, const C1Field& b, double cb) {
    return {a.grid, [a, b, ca, cb](double x, double y) {
                const auto p = a.eval(x, y), q = b.eval(x, y);
                return GradSample{ca * p.v + cb * q.v, ca * p.d1 + cb * q.d1, ca * p.d2 + cb * q.d2};
            }};
}

struct C1AlphaResult {
    std::vector<double> alphas;
    std::vector<double> seminorms;
    double sup_value = 0.0;
    double sup_grad = 0.0;
    int pairs = 0;
    std::uint64_t seed = 0;

    double c1_norm() const { return sup_value + sup_grad; }
    double norm(std::size_t k = 0) const { return c1_norm() + seminorms.at(k); }
};

// Sup over nodes of |f| and |grad f|.
inline std::pair<double, double> c1_sup(const C1Field& f) {
    const QuarterGrid& g = f.grid;
    const int n = g.n();
    std::vector<double> sv(n + 1, 0.0), sg(n + 1, 0.0);
    parallel_for(0, static_cast<std::size_t>(n) + 1, [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        for (int i = 0; i <= n; ++i) {
            const auto q = f.eval(g.x(i), g.x(j));
            sv[j] = std::max(sv[j], std::abs(q.v));
            sg[j] = std::max(sg[j], std::hypot(q.d1, q.d2));
        }
    });
    return {*std::max_element(sv.begin(), sv.end()), *std::max_element(sg.begin(), sg.end())};
}

// Monte Carlo sup of |grad f(x) - grad f(y)| / |x - y|^alpha over pairs with
// log-uniform distance in [8h, 1/8]. Every alpha uses the same pairs.
inline C1AlphaResult c1alpha_seminorm(const C1Field& f, std::vector<double> alphas, int pairs, std::uint64_t seed) {
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw DomainError("c1alpha_seminorm: alpha must lie in (0,1)");
    if (pairs < 1) throw DomainError("c1alpha_seminorm: pairs must be positive");
    const double h = f.grid.h();
    const double dlo = 8.0 * h, dhi = 0.125;
    struct Pair {
        double x1, x2, y1, y2, d;
    };
    std::vector<Pair> ps;
    ps.reserve(pairs);
    Rng rng(seed);
    while (static_cast<int>(ps.size()) < pairs) {
        const double x1 = rng.uniform(0.0, 0.5), x2 = rng.uniform(0.0, 0.5);
        const double d = dlo * std::pow(dhi / dlo, rng.uniform());
        const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double y1 = x1 + d * std::cos(t), y2 = x2 + d * std::sin(t);
        if (y1 < 0.0 || y2 < 0.0 || y1 > 0.5 || y2 > 0.5) continue;
        ps.push_back({x1, x2, y1, y2, d});
    }
    std::vector<double> diff(ps.size());
    parallel_for(0, ps.size(), [&](std::size_t k) {
        const auto a = f.eval(ps[k].x1, ps[k].x2), b = f.eval(ps[k].y1, ps[k].y2);
        diff[k] = std::hypot(a.d1 - b.d1, a.d2 - b.d2);
    });
    C1AlphaResult res;
    res.alphas = alphas;
    res.pairs = pairs;
    res.seed = seed;
    for (double a : alphas) {
        double m = 0.0;
        for (std::size_t k = 0; k < ps.size(); ++k) m = std::max(m, diff[k] / std::pow(ps[k].d, a));
        res.seminorms.push_back(m);
    }
    for (std::size_t i = 0; i < alphas.size(); ++i)
        for (std::size_t j = 0; j < alphas.size(); ++j)
            if (alphas[i] < alphas[j] && res.seminorms[i] > res.seminorms[j])
                throw Error("c1alpha_seminorm: seminorm not monotone in alpha");
    auto [sv, sg] = c1_sup(f);
    res.sup_value = sv;
    res.sup_grad = sg;
    return res;
}

// --------------------------------------------------------- ratio L2 check

// Integral over the quarter of (phi / barrier)^2. Nodes with r < 4h are
// replaced by the analytic integral of C r^{-2(1-s)/(1+s)}, C fitted on the
// ring 4h <= r < 5h; axis nodes take the value of their inward neighbour.
inline double ratio_l2_check(const NodeField& phi, const AngularProfile& P, double eps) {
    const QuarterGrid& g = phi.grid;
    const int n = g.n();
    const double h = g.h();
    const double p = 2.0 * (1.0 - P.s) / (1.0 + P.s);
    auto q2 = [&](int i, int j) {
        const double b = eval_barrier(P, eps, g.x(i), g.x(j));
        const double q = phi.at(i, j) / b;
        return q * q;
    };
    double C = 0.0;
    double total = 0.0;
    for (int j = 0; j <= n; ++j) {
        const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
        for (int i = 0; i <= n; ++i) {
            const double wi = (i == 0 || i == n) ? 0.5 : 1.0;
            const double r = std::hypot(i, j) * h;
            if (r < 4.0 * h) continue;
            const double v = q2(std::max(i, 1), std::max(j, 1));
            if (r < 5.0 * h && i > 0 && j > 0) C = std::max(C, v * std::pow(r, p));
            total += wi * wj * v * h * h;
        }
    }
    const double rc = 4.0 * h;
    total += 0.5 * std::numbers::pi * C * std::pow(rc, 2.0 - p) / (2.0 - p);
    return total;
}

// ------------------------------------------------------ degenerate equation

// f(w) = ((1+w)^{1+s} - 1) / ((1+w)^s w), with f(0) = 1 + s.
inline double degenerate_f(double w, double s) {
    if (std::abs(w) <= 1e-12) return 1.0 + s;
    return std::expm1((1.0 + s) * std::log1p(w)) / (std::pow(1.0 + w, s) * w);
}

struct DegenerateReport {
    double residual = 0.0;  // sup |lhs - rhs| / sup psi1^{1-s}
    double max_lhs = 0.0;
    double max_rhs = 0.0;
    std::size_t nodes = 0;
    double r_lo = 0.0, r_hi = 0.0;
};

// Residual of div(psi1^2 grad W) = psi1^{1-s} f(W) W for W = phi/barrier_eps - 1.
// The equation is invariant under x -> sqrt(eps) y, so it is checked in the
// grid frame, with face-averaged weights psi1^2 at edge midpoints.
inline DegenerateReport degenerate_residual(const SymmetricField& phi, const AngularProfile& P, double eps,
                                            double R) {
    const QuarterGrid& g = phi.grid();
    const double h = g.h();
    const double s = P.s;
    DegenerateReport rep;
    rep.r_lo = 16.0 * h;
    rep.r_hi = R;
    auto Wat = [&](int i, int j) { return phi.at(i, j) / eval_barrier(P, eps, g.x(i), g.x(j)) - 1.0; };
    auto lam = [&](double x, double y) {
        const double b = eval_barrier(P, 1.0, x, y);
        return b * b;
    };
    double worst = 0.0, scale = 0.0;
    const int lim = std::min(g.n() - 1, static_cast<int>(std::ceil(R / h)));
    for (int j = 1; j <= lim; ++j)
        for (int i = 1; i <= lim; ++i) {
            const double x = g.x(i), y = g.x(j);
            const double r = std::hypot(x, y);
            // W has a square-root layer at the axes; skip the band masked in RatioField
            if (r < rep.r_lo || r > R || i < 4 || j < 4) continue;
            const double w0 = Wat(i, j);
            const double lhs = (lam(x + 0.5 * h, y) * (Wat(i + 1, j) - w0) + lam(x - 0.5 * h, y) * (Wat(i - 1, j) - w0) +
                                lam(x, y + 0.5 * h) * (Wat(i, j + 1) - w0) + lam(x, y - 0.5 * h) * (Wat(i, j - 1) - w0)) /
                               (h * h);
            const double b1 = eval_barrier(P, 1.0, x, y);
            const double rhs = std::pow(b1, 1.0 - s) * degenerate_f(w0, s) * w0;
            worst = std::max(worst, std::abs(lhs - rhs));
            scale = std::max(scale, std::pow(b1, 1.0 - s));
            rep.max_lhs = std::max(rep.max_lhs, std::abs(lhs));
            rep.max_rhs = std::max(rep.max_rhs, std::abs(rhs));
            ++rep.nodes;
        }
    rep.residual = scale > 0.0 ? worst / scale : 0.0;
    return rep;
}

// Quotient div(psi1^2 grad w) / (psi1^{1-s} w) at x, with fourth-order
// differences of step dx.
inline double degenerate_quotient(const std::function<double(double, double)>& w, const AngularProfile& P, double x,
                                  double y, double dx) {
    auto d1 = [&](double a, double b, int axis) {
        auto f = [&](double t) { return axis == 0 ? w(a + t, b) : w(a, b + t); };
        return (-f(2 * dx) + 8 * f(dx) - 8 * f(-dx) + f(-2 * dx)) / (12 * dx);
    };
    auto d2 = [&](double a, double b, int axis) {
        auto f = [&](double t) { return axis == 0 ? w(a + t, b) : w(a, b + t); };
        return (-f(2 * dx) + 16 * f(dx) - 30 * f(0) + 16 * f(-dx) - f(-2 * dx)) / (12 * dx * dx);
    };
    const double b = eval_barrier(P, 1.0, x, y);
    const auto gb = eval_barrier_gradient(P, 1.0, x, y);
    const double lap = d2(x, y, 0) + d2(x, y, 1);
    const double div = b * b * lap + 2.0 * b * (gb[0] * d1(x, y, 0) + gb[1] * d1(x, y, 1));
    return div / (std::pow(b, 1.0 - P.s) * w(x, y));
}

struct ScalingReport {
    double mismatch = 0.0;  // sup |Q[w](R y) - Q[w_R](y)| / sup |Q[w](R y)|
    std::size_t points = 0;
};

// Compares the quotient of w at R y (step h) with the quotient of
// w_R(y) = w(R y) at y (step h / R, the same x-stencil), on a polar sample of y with
// r in [r_lo, r_hi] and angular distance from the axes at least margin.
inline ScalingReport scaling_invariance_check(const std::function<double(double, double)>& w, const AngularProfile& P,
                                              double R, double h, double r_lo, double r_hi, double margin,
                                              int nr = 12, int nt = 12) {
    ScalingReport rep;
    double worst = 0.0, scale = 0.0;
    auto wR = [&](double a, double b) { return w(R * a, R * b); };
    for (int a = 0; a < nr; ++a) {
        const double r = r_lo * std::pow(r_hi / r_lo, nr == 1 ? 0.0 : double(a) / (nr - 1));
        const double t0 = std::asin(std::min(1.0, margin / (R * r)));
        for (int b = 0; b < nt; ++b) {
            const double th = t0 + (0.25 * std::numbers::pi - t0) * (nt == 1 ? 0.0 : double(b) / (nt - 1));
            const double y1 = r * std::cos(th), y2 = r * std::sin(th);
            const double q1 = degenerate_quotient(w, P, R * y1, R * y2, h);
            const double q2 = degenerate_quotient(wR, P, y1, y2, h / R);
            worst = std::max(worst, std::abs(q1 - q2));
            scale = std::max(scale, std::abs(q1));
            ++rep.points;
        }
    }
    rep.mismatch = scale > 0.0 ? worst / scale : worst;
    return rep;
}

// ----------------------------------------------------------- sweep

struct SweepConfig {
    double s = 0.5;
    std::vector<double> eps{1e-2, 1e-3, 1e-4};
    int n = 1024;
    double omega = 0.5;
    double tol = 1e-8;
    int max_iter = 5000;
    int pairs = 20000;
    std::uint64_t seed = 0;
    int profile_nodes = 1024;
};

struct SweepRow {
    double eps = 0.0;
    double c1_norm_diff = 0.0;                   // ||phi - psi0||_{C^{1,alpha_s}}
    double c1alpha_seminorm_diff = 0.0;          // [phi - psi0]_{alpha_s}
    double c1alphaplus_seminorm_residual = 0.0;  // [phi - barrier - psi0]_{alpha_s + sigma/2}
    double barrier_c1alpha = 0.0;                // ||barrier||_{C^{1,alpha_s}}
    std::optional<double> continuity_diff;       // ||phi_i - phi_{i+1}||_{C^{1,alpha_s}}
    std::optional<double> sigma_est;
    double sigma_used = 0.0;
    bool resolved = false;
    int iterations = 0;
    double final_residual = 0.0;
};

inline std::optional<double> estimate_sigma(const SymmetricField& phi, const AngularProfile& P, double eps) {
    const QuarterGrid& g = phi.grid();
    if (!grid_resolves(eps, g)) return std::nullopt;
    try {
        auto W = ratio_field(phi, P, eps, 4.0 * g.h());
        return origin_holder_fit(W, log_radii(8.0 * g.h(), sandwich_radius(eps), 32)).exponent;
    } catch (const FitError&) {
        return std::nullopt;
    }
}

inline std::vector<SweepRow> convergence_sweep(
    const SweepConfig& cfg, const std::function<SolveReport(double)>& solver = {}) {
    if (cfg.eps.empty()) throw DomainError("sweep: empty eps list");
    for (std::size_t k = 1; k < cfg.eps.size(); ++k)
        if (!(cfg.eps[k] < cfg.eps[k - 1])) throw DomainError("sweep: eps list must be strictly decreasing");
    const QuarterGrid g(cfg.n);
    const auto P = solve_profile(cfg.s, cfg.profile_nodes);
    const auto psi0 = compute_psi0(cfg.n, g);
    const double alpha = (1.0 - cfg.s) / (1.0 + cfg.s);
    auto solve = [&](double eps) {
        if (solver) return solver(eps);
        SolveConfig sc;
        sc.eps = eps;
        sc.s = cfg.s;
        sc.n = cfg.n;
        sc.omega = cfg.omega;
        sc.tol = cfg.tol;
        sc.max_iter = cfg.max_iter;
        sc.profile_nodes = cfg.profile_nodes;
        return solve_steady(sc);
    };
    std::vector<SweepRow> rows;
    std::optional<SymmetricField> prev;
    for (double eps : cfg.eps) {
        const SolveReport rep = solve(eps);
        if (!(rep.phi.grid() == g)) throw ShapeError("sweep: solver returned a field on a different grid");
        SweepRow row;
        row.eps = eps;
        row.iterations = rep.iterations;
        row.final_residual = rep.final_residual;
        row.resolved = grid_resolves(eps, g);
        row.sigma_est = estimate_sigma(rep.phi, P, eps);
        row.sigma_used = (row.sigma_est && *row.sigma_est > 0.0) ? std::min(*row.sigma_est, cfg.s / 100.0)
                                                                  : cfg.s / 100.0;
        const auto diff = detail::combine(rep.phi, 1.0, psi0, -1.0);
        const auto cd = spectral_c1(diff);
        const auto r1 = c1alpha_seminorm(cd, {alpha}, cfg.pairs, cfg.seed);
        row.c1alpha_seminorm_diff = r1.seminorms[0];
        row.c1_norm_diff = r1.norm(0);
        const auto bar = barrier_c1(P, eps, g);
        const auto r2 = c1alpha_seminorm(linear_combination(cd, 1.0, bar, -1.0),
                                         {alpha, alpha + 0.5 * row.sigma_used}, cfg.pairs, cfg.seed);
        row.c1alphaplus_seminorm_residual = r2.seminorms[1];
        row.barrier_c1alpha = c1alpha_seminorm(bar, {alpha}, cfg.pairs, cfg.seed).norm(0);
        if (prev) {
            const auto dd = detail::combine(*prev, 1.0, rep.phi, -1.0);
            rows.back().continuity_diff = c1alpha_seminorm(spectral_c1(dd), {alpha}, cfg.pairs, cfg.seed).norm(0);
        }
        prev = rep.phi;
        rows.push_back(row);
    }
    return rows;
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < m; ++k) {
        mx += std::log(x[k]) / m;
        my += std::log(y[k]) / m;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < m; ++k) {
        sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
        sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    }
    return sxy / sxx;
}

}  // namespace bcpatch
