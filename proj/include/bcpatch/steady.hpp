#pragma once

#include <bcpatch/barrier.hpp>
#include <bcpatch/core.hpp>
#include <bcpatch/grid.hpp>
#include <bcpatch/poisson.hpp>
#include <bcpatch/spectral.hpp>

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace bcpatch {

struct Nonlinearity {
    double eps = 1e-3;
    double s = 0.5;
};

// Odd extension of -1 (v >= eps), -(eps/v)^s (0 < v < eps); zero at v = 0.
inline double g_eps(const Nonlinearity& nl, double v) {
    if (v == 0.0) return 0.0;
    const double a = std::abs(v);
    const double mag = a >= nl.eps ? 1.0 : std::pow(nl.eps / a, nl.s);
    return v > 0.0 ? -mag : mag;
}

enum class InitKind { Psi0, BarrierBlend, File };

inline const char* to_string(InitKind k) {
    switch (k) {
        case InitKind::Psi0: return "psi0";
        case InitKind::BarrierBlend: return "barrier-blend";
        case InitKind::File: return "file";
    }
    return "?";
}

inline InitKind init_kind_from(const std::string& s) {
    if (s == "psi0") return InitKind::Psi0;
    if (s == "barrier-blend") return InitKind::BarrierBlend;
    if (s == "file") return InitKind::File;
    throw DomainError("unknown init kind: " + s);
}

struct SolveConfig {
    double eps = 1e-3;
    double s = 0.5;
    int n = 1024;
    double omega = 0.5;
    double tol = 1e-8;
    int max_iter = 5000;
    InitKind init = InitKind::Psi0;
    std::optional<SymmetricField> init_field;  // used when init == File
    int profile_nodes = 1024;

    void validate() const {
        if (!(eps > 0.0)) throw DomainError("eps must be positive");
        if (!(s > 0.0 && s < 1.0)) throw DomainError("s must lie in (0,1)");
        if (!(omega > 0.0 && omega <= 1.0)) throw DomainError("omega must lie in (0,1]");
        if (!(tol > 0.0)) throw DomainError("tol must be positive");
        if (max_iter < 1) throw DomainError("max_iter must be positive");
        QuarterGrid check(n);
        if (init == InitKind::File) {
            if (!init_field) throw DomainError("init=file requires an initial field");
            if (!(init_field->grid() == check)) throw ShapeError("initial field grid does not match n");
        }
    }
};

// Radius of the region where the sandwich bounds are asserted.
inline double sandwich_radius(double eps) { return std::sqrt(eps) / (-std::log(eps)); }

inline bool grid_resolves(double eps, const QuarterGrid& g) {
    return eps < 1.0 && sandwich_radius(eps) >= 20.0 * g.h();
}

struct SolveReport {
    SolveReport(SymmetricField p, SolveConfig c) : phi(std::move(p)), config(std::move(c)) {}

    SymmetricField phi;
    SolveConfig config;
    std::vector<double> residual_history;  // collocation residual per iteration
    int iterations = 0;
    double final_residual = 0.0;
    double fd_residual = 0.0;              // fourth-order differences, r >= 8h
    double psi0_margin = 0.0;              // min over nodes of phi - psi0
    double max_psi0 = 0.0;
    int clamped_nodes = 0;
    bool small_eps_regime = true;
    bool resolved = true;
    std::optional<bool> bracketing_ok;     // only for omega = 1
    std::vector<std::string> warnings;
    double wall_time = 0.0;
};

namespace detail {

// Pointwise G(phi) + 1 at interior nodes (zero on the boundary lines).
inline SymmetricField shifted_rhs(const SymmetricField& phi, const Nonlinearity& nl) {
    const QuarterGrid& g = phi.grid();
    const int n = g.n();
    std::vector<double> v(g.size(), 0.0);
    parallel_for(1, static_cast<std::size_t>(n), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        for (int i = 1; i < n; ++i) v[g.index(i, j)] = g_eps(nl, phi.at(i, j)) + 1.0;
    });
    return SymmetricField(g, std::move(v));
}

inline void check_admissible(const SymmetricField& phi) {
    const int n = phi.n();
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i)
            if (phi.at(i, j) < 0.0)
                throw DomainError("fixed_point_map: field negative at interior node (" + std::to_string(i) + "," +
                                  std::to_string(j) + ")");
}

inline SymmetricField combine(const SymmetricField& a, double wa, const SymmetricField& b, double wb) {
    std::vector<double> v(a.values().size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = wa * a.values()[k] + wb * b.values()[k];
    return SymmetricField(a.grid(), std::move(v));
}

}  // namespace detail

// T(phi) = Delta^{-1} G(phi), evaluated as psi0 + Delta^{-1}(G(phi) + 1):
// the constant part of the data uses the exact psi0 coefficients.
inline SymmetricField fixed_point_map(const SymmetricField& phi, const Nonlinearity& nl, const SymmetricField& psi0) {
    detail::check_admissible(phi);
    auto corr = transform_inverse(invert_laplacian(transform_forward(detail::shifted_rhs(phi, nl))));
    return detail::combine(psi0, 1.0, corr, 1.0);
}

inline SymmetricField fixed_point_map(const SymmetricField& phi, const Nonlinearity& nl) {
    return fixed_point_map(phi, nl, compute_psi0(phi.n(), phi.grid()));
}

// Collocation residual: sup |Delta(phi - psi0) - (G(phi) + 1)| / sup |G(phi)|
// at interior nodes, Delta spectral and Delta psi0 = -1 exactly.
inline double collocation_residual(const SymmetricField& phi, const Nonlinearity& nl, const SymmetricField& psi0) {
    auto diff = detail::combine(phi, 1.0, psi0, -1.0);
    auto lap = transform_inverse(apply_laplacian(transform_forward(diff)));
    const int n = phi.n();
    double num = 0.0, den = 0.0;
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) {
            const double gv = g_eps(nl, phi.at(i, j));
            num = std::max(num, std::abs(lap.at(i, j) - (gv + 1.0)));
            den = std::max(den, std::abs(gv));
        }
    return den > 0.0 ? num / den : num;
}

// Fourth-order finite-difference residual sup |Delta phi - rhs| / sup |rhs|
// over interior nodes with r >= 8h whose stencil stays in the quarter.
inline double fd_residual(const NodeField& phi, const std::function<double(int, int, double)>& rhs) {
    const QuarterGrid& g = phi.grid;
    const int n = g.n();
    const double h = g.h();
    double num = 0.0, den = 0.0;
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) {
            if (std::hypot(i, j) < 8.0) continue;
            auto f = [&](int a, int b) { return phi.extended(a, b); };
            const double lap = (-f(i + 2, j) + 16 * f(i + 1, j) - 30 * f(i, j) + 16 * f(i - 1, j) - f(i - 2, j) -
                                f(i, j + 2) + 16 * f(i, j + 1) - 30 * f(i, j) + 16 * f(i, j - 1) - f(i, j - 2)) /
                               (12 * h * h);
            const double r = rhs(i, j, phi.at(i, j));
            num = std::max(num, std::abs(lap - r));
            den = std::max(den, std::abs(r));
        }
    return den > 0.0 ? num / den : num;
}

inline double residual(const SymmetricField& phi, const Nonlinearity& nl) {
    return fd_residual(phi.nodes(), [&](int, int, double v) { return g_eps(nl, v); });
}

// ||u . grad omega|| / (||u|| ||grad omega||) in RMS norms over nodes with
// r >= 16h; u = (-d2 phi, d1 phi), omega = Delta phi, both spectral.
inline double steadiness_check(const SymmetricField& phi) {
    auto spec = transform_forward(phi);
    auto gu = gradient(spec);
    auto gw = gradient(apply_laplacian(spec));
    const int n = phi.n();
    double num = 0.0, uu = 0.0, ww = 0.0;
    std::size_t count = 0;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            if (std::hypot(i, j) < 16.0) continue;
            const double u1 = -gu.d2.at(i, j), u2 = gu.d1.at(i, j);
            const double w1 = gw.d1.at(i, j), w2 = gw.d2.at(i, j);
            const double dot = u1 * w1 + u2 * w2;
            num += dot * dot;
            uu += u1 * u1 + u2 * u2;
            ww += w1 * w1 + w2 * w2;
            ++count;
        }
    if (count == 0 || uu == 0.0 || ww == 0.0) return 0.0;
    const double c = static_cast<double>(count);
    return std::sqrt(num / c) / (std::sqrt(uu / c) * std::sqrt(ww / c));
}

inline SymmetricField barrier_blend(const SymmetricField& psi0, const AngularProfile& P, double eps) {
    const QuarterGrid& g = psi0.grid();
    std::vector<double> v(psi0.values());
    for (int j = 1; j < g.n(); ++j)
        for (int i = 1; i < g.n(); ++i) {
            const double x = g.x(i), y = g.x(j);
            if (std::hypot(x, y) < 0.25) v[g.index(i, j)] = std::max(psi0.at(i, j), eval_barrier(P, eps, x, y));
        }
    return SymmetricField(g, std::move(v)).symmetrized();
}

inline SolveReport solve_steady(const SolveConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const QuarterGrid grid(cfg.n);
    const Nonlinearity nl{cfg.eps, cfg.s};
    const auto psi0 = compute_psi0(cfg.n, grid);
    const int n = cfg.n;

    SolveReport rep{psi0, cfg};
    rep.max_psi0 = sup_norm(psi0.values());
    rep.small_eps_regime = cfg.eps < rep.max_psi0 && sandwich_radius(cfg.eps) < 0.25;
    rep.resolved = grid_resolves(cfg.eps, grid);
    if (!rep.small_eps_regime) rep.warnings.push_back("eps outside the small-eps regime");
    if (!rep.resolved) rep.warnings.push_back("grid does not resolve sqrt(eps)/(-ln eps) >= 20h");

    SymmetricField phi = psi0;
    if (cfg.init == InitKind::BarrierBlend) {
        phi = barrier_blend(psi0, solve_profile(cfg.s, cfg.profile_nodes), cfg.eps);
    } else if (cfg.init == InitKind::File) {
        phi = cfg.init_field->symmetrized();
    }

    // Clamp safeguard: negative interior values are reset to psi0.
    auto clamp = [&](SymmetricField& f) {
        int count = 0;
        std::vector<double> v;
        for (int j = 1; j < n; ++j)
            for (int i = 1; i < n; ++i)
                if (f.at(i, j) < 0.0) {
                    if (v.empty()) v = f.values();
                    v[grid.index(i, j)] = psi0.at(i, j);
                    ++count;
                }
        if (count) f = SymmetricField(grid, std::move(v));
        return count;
    };

    auto lap_of = [&](const SymmetricField& f) {
        return transform_inverse(apply_laplacian(transform_forward(detail::combine(f, 1.0, psi0, -1.0))));
    };

    rep.clamped_nodes += clamp(phi);
    SymmetricField L = lap_of(phi);  // Delta(phi - psi0), tracked through the linear update

    const bool track_bracket = cfg.omega == 1.0;
    std::optional<SymmetricField> prev1, prev2;
    bool bracket_ok = true;

    const double w = cfg.omega;
    double res = 0.0;
    for (int it = 0;; ++it) {
        const auto rhs = detail::shifted_rhs(phi, nl);
        double num = 0.0, den = 0.0;
        for (int j = 1; j < n; ++j)
            for (int i = 1; i < n; ++i) {
                const double gp1 = rhs.at(i, j);
                num = std::max(num, std::abs(L.at(i, j) - gp1));
                den = std::max(den, std::abs(gp1 - 1.0));
            }
        res = num / den;
        rep.residual_history.push_back(res);
        if (!std::isfinite(res)) throw ConvergenceError("steady solve: residual is not finite", rep.residual_history);
        if (res <= cfg.tol) {
            rep.iterations = it;
            break;
        }
        if (it >= cfg.max_iter) {
            rep.iterations = it;
            throw ConvergenceError("steady solve: max_iter exceeded", rep.residual_history);
        }

        const auto corr = transform_inverse(invert_laplacian(transform_forward(rhs)));
        std::vector<double> v(phi.values().size()), lv(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) {
            v[k] = (1.0 - w) * phi.values()[k] + w * (psi0.values()[k] + corr.values()[k]);
            lv[k] = (1.0 - w) * L.values()[k] + w * rhs.values()[k];
        }
        SymmetricField next = SymmetricField(grid, std::move(v)).symmetrized();
        L = SymmetricField(grid, std::move(lv)).symmetrized();
        const int c = clamp(next);
        if (c) {
            rep.clamped_nodes += c;
            L = lap_of(next);
        }
        for (int j = 1; j < n; ++j)
            for (int i = 1; i < n; ++i)
                if (!(next.at(i, j) > 0.0))
                    throw ConvergenceError("steady solve: iterate left positivity", rep.residual_history);

        if (track_bracket) {
            if (prev2) {
                // even iterates increase, odd iterates decrease (from psi0)
                const int k = it + 1;
                const double scale = sup_norm(next.values());
                for (std::size_t q = 0; q < next.values().size(); ++q) {
                    const double d = next.values()[q] - prev2->values()[q];
                    if ((k % 2 == 0 && d < -1e-12 * scale) || (k % 2 == 1 && d > 1e-12 * scale)) bracket_ok = false;
                }
            }
            prev2 = std::move(prev1);
            prev1 = next;
        }
        phi = std::move(next);
    }

    if (track_bracket) rep.bracketing_ok = bracket_ok;
    if (w <= 0.5) {
        for (std::size_t k = 11; k < rep.residual_history.size(); ++k)
            if (rep.residual_history[k] > rep.residual_history[k - 1]) {
                rep.warnings.push_back("residual not monotone after iteration 10");
                break;
            }
    }
    rep.phi = phi;
    rep.final_residual = collocation_residual(phi, nl, psi0);
    rep.fd_residual = residual(phi, nl);
    double margin = 1e300;
    for (std::size_t k = 0; k < phi.values().size(); ++k)
        margin = std::min(margin, phi.values()[k] - psi0.values()[k]);
    rep.psi0_margin = margin;
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace bcpatch
