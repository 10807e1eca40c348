#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "barrier.hpp"
#include "core.hpp"

namespace bcpatch {

// Inequality lab for the degenerate weight psi1 = barrier at eps = 1 on the
// first quadrant. Fields live on the nodes of [0,1]^2 with n cells per side.

enum class LabId { Caccioppoli, SobolevH1, SobolevW11, Isoperimetric, LinfRescale };

inline const char* to_string(LabId id) {
    switch (id) {
        case LabId::Caccioppoli: return "caccioppoli";
        case LabId::SobolevH1: return "sobolev_h1";
        case LabId::SobolevW11: return "sobolev_w11";
        case LabId::Isoperimetric: return "isoperimetric";
        case LabId::LinfRescale: return "linf_rescale";
    }
    return "?";
}

inline LabId lab_id_from(const std::string& s) {
    for (LabId id : {LabId::Caccioppoli, LabId::SobolevH1, LabId::SobolevW11, LabId::Isoperimetric,
                     LabId::LinfRescale})
        if (s == to_string(id)) return id;
    throw DomainError("unknown inequality id: " + s);
}

struct LabConfig {
    LabId id = LabId::SobolevH1;
    int trials = 500;
    std::uint64_t seed = 0;
    int n = 128;
    double delta = 0.1;             // isoperimetric mass fraction
    int stability_trials = 10;
};

struct InequalityReport {
    std::string id;
    int trials = 0;
    std::uint64_t seed = 0;
    int n = 0;
    double empirical_constant = 0.0;  // max ratio, or min lhs for isoperimetric
    double min_ratio = 0.0;
    double stability_factor = 0.0;    // constant at 2n / constant at n on the first trials
    bool all_finite = true;
    // isoperimetric
    std::optional<double> delta, sigma_half_delta;
    std::optional<int> trials_half_delta;
    // linf_rescale
    std::optional<double> constant_quarter, constant_half;
};

// Discrete weighted setting on [0,1]^2.
class LabGrid {
public:
    LabGrid(const AngularProfile& P, int n) : P_(P), n_(n), h_(1.0 / n) {
        if (n < 16) throw DomainError("lab grid needs n >= 16");
        const int m = n + 1;
        node_w_.resize(static_cast<std::size_t>(m) * m);
        ex_.resize(static_cast<std::size_t>(n) * m);
        ey_.resize(static_cast<std::size_t>(m) * n);
        cell_w_.resize(static_cast<std::size_t>(n) * n);
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) node_w_[idx(i, j)] = lambda(i * h_, j * h_);
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i < n; ++i) {
                const double l = lambda((i + 0.5) * h_, j * h_);
                ex_[static_cast<std::size_t>(j) * n + i] = l * l;
            }
        for (int j = 0; j < n; ++j)
            for (int i = 0; i <= n; ++i) {
                const double l = lambda(i * h_, (j + 0.5) * h_);
                ey_[static_cast<std::size_t>(j) * m + i] = l * l;
            }
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double l = lambda((i + 0.5) * h_, (j + 0.5) * h_);
                cell_w_[static_cast<std::size_t>(j) * n + i] = l * l;
            }
    }

    int n() const { return n_; }
    double h() const { return h_; }
    const AngularProfile& profile() const { return P_; }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_ + 1) * j; }
    std::size_t size() const { return node_w_.size(); }
    double lambda(double x, double y) const { return eval_barrier(P_, 1.0, x, y); }
    double node_lambda(int i, int j) const { return node_w_[idx(i, j)]; }
    double radius(int i, int j) const { return std::hypot(i * h_, j * h_); }
    // lambda^2 on the x-edge (i,j)-(i+1,j) and the y-edge (i,j)-(i,j+1)
    double edge_x(int i, int j) const { return ex_[static_cast<std::size_t>(j) * n_ + i]; }
    double edge_y(int i, int j) const { return ey_[static_cast<std::size_t>(j) * (n_ + 1) + i]; }

    // Integral of lambda^p |w|^q over nodes with r < radius.
    double moment(const std::vector<double>& w, double p, double q, double radius = 2.0) const {
        double acc = 0.0;
        for (int j = 0; j <= n_; ++j)
            for (int i = 0; i <= n_; ++i) {
                if (radius < 2.0 && this->radius(i, j) >= radius) continue;
                const double v = w[idx(i, j)];
                if (v == 0.0) continue;
                acc += std::pow(node_w_[idx(i, j)], p) * std::pow(std::abs(v), q);
            }
        return acc * h_ * h_;
    }

    // Edge form of the integral of lambda^2 |grad w|^2.
    double dirichlet(const std::vector<double>& w) const {
        double acc = 0.0;
        for (int j = 0; j <= n_; ++j)
            for (int i = 0; i <= n_; ++i) {
                const double v = w[idx(i, j)];
                if (i < n_) acc += edge_x(i, j) * sq(w[idx(i + 1, j)] - v);
                if (j < n_) acc += edge_y(i, j) * sq(w[idx(i, j + 1)] - v);
            }
        return acc;
    }

    // Edge form of the integral of lambda^2 a^2 |grad b|^2, a averaged on edges.
    double dirichlet_weighted(const std::vector<double>& a, const std::vector<double>& b) const {
        double acc = 0.0;
        for (int j = 0; j <= n_; ++j)
            for (int i = 0; i <= n_; ++i) {
                const std::size_t k = idx(i, j);
                if (i < n_) acc += edge_x(i, j) * sq(0.5 * (a[k] + a[idx(i + 1, j)])) * sq(b[idx(i + 1, j)] - b[k]);
                if (j < n_) acc += edge_y(i, j) * sq(0.5 * (a[k] + a[idx(i, j + 1)])) * sq(b[idx(i, j + 1)] - b[k]);
            }
        return acc;
    }

    // Cell-centred integral of lambda^2 |grad w| over cells with centre r < radius.
    double total_variation(const std::vector<double>& w, double radius = 2.0) const {
        double acc = 0.0;
        for (int j = 0; j < n_; ++j)
            for (int i = 0; i < n_; ++i) {
                if (radius < 2.0 && std::hypot((i + 0.5) * h_, (j + 0.5) * h_) >= radius) continue;
                const double a = w[idx(i, j)], b = w[idx(i + 1, j)], c = w[idx(i, j + 1)], d = w[idx(i + 1, j + 1)];
                const double gx = 0.5 * ((b - a) + (d - c)) / h_;
                const double gy = 0.5 * ((c - a) + (d - b)) / h_;
                acc += cell_w_[static_cast<std::size_t>(j) * n_ + i] * std::hypot(gx, gy);
            }
        return acc * h_ * h_;
    }

    template <class F>
    std::vector<double> sample(F&& f) const {
        std::vector<double> v(size());
        for (int j = 0; j <= n_; ++j)
            for (int i = 0; i <= n_; ++i) v[idx(i, j)] = f(i * h_, j * h_);
        return v;
    }

private:
    static double sq(double x) { return x * x; }
    AngularProfile P_;
    int n_;
    double h_;
    std::vector<double> node_w_, ex_, ey_, cell_w_;
};

// Solver for div(lambda^2 grad v) = rho on the quarter disc r < R, with
// Dirichlet data on the nodes just outside the arc. Axis nodes are unknowns:
// the weight vanishes along the axes, which gives the natural condition. The
// origin is isolated by zero edge weights and is held at 0.
class QuarterDiscSolver {
public:
    QuarterDiscSolver(const LabGrid& g, double R) : g_(g), R_(R) {
        if (!(R > 8.0 * g.h() && R <= 1.0)) throw DomainError("disc radius must lie in (8h, 1]");
        const int n = g.n();
        unknown_.assign(g.size(), -1);
        ring_.assign(g.size(), 0);
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) {
                if (i == 0 && j == 0) continue;
                if (g.radius(i, j) < R) {
                    unknown_[g.idx(i, j)] = static_cast<int>(nodes_.size());
                    nodes_.push_back({i, j});
                }
            }
        for (auto [i, j] : nodes_)
            for (auto [di, dj] : kNbrs) {
                const int a = i + di, b = j + dj;
                if (a < 0 || b < 0) continue;
                if (a > n || b > n) throw DomainError("disc does not fit in the lab box");
                const std::size_t k = g.idx(a, b);
                if (unknown_[k] < 0 && !(a == 0 && b == 0) && !ring_[k]) {
                    ring_[k] = 1;
                    ring_nodes_.push_back({a, b});
                }
            }
        std::vector<Eigen::Triplet<double>> trip;
        const int N = static_cast<int>(nodes_.size());
        for (int u = 0; u < N; ++u) {
            auto [i, j] = nodes_[u];
            double diag = 0.0;
            for (auto [di, dj] : kNbrs) {
                const int a = i + di, b = j + dj;
                if (a < 0 || b < 0) continue;
                const double c = weight(i, j, a, b);
                if (c == 0.0) continue;
                diag += c;
                const int v = unknown_[g.idx(a, b)];
                if (v >= 0) trip.emplace_back(u, v, -c);
            }
            if (diag == 0.0) throw ConstructionError("isolated node in the quarter disc");
            trip.emplace_back(u, u, diag);
        }
        Eigen::SparseMatrix<double> A(N, N);
        A.setFromTriplets(trip.begin(), trip.end());
        ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
        ldlt_->compute(A);
        if (ldlt_->info() != Eigen::Success) throw ConstructionError("weighted stencil factorization failed");
    }

    double radius() const { return R_; }
    const std::vector<std::array<int, 2>>& ring_nodes() const { return ring_nodes_; }
    bool is_unknown(int i, int j) const { return unknown_[g_.idx(i, j)] >= 0; }
    bool is_ring(int i, int j) const { return ring_[g_.idx(i, j)] != 0; }

    // Solves with node-valued rho and Dirichlet data (ring values of `data`);
    // returns a full-box field, zero outside the disc and its ring.
    std::vector<double> solve(const std::vector<double>& rho, const std::vector<double>& data) const {
        const double h2 = g_.h() * g_.h();
        const int N = static_cast<int>(nodes_.size());
        Eigen::VectorXd b(N);
        for (int u = 0; u < N; ++u) {
            auto [i, j] = nodes_[u];
            double acc = -rho[g_.idx(i, j)] * h2;
            for (auto [di, dj] : kNbrs) {
                const int a = i + di, c = j + dj;
                if (a < 0 || c < 0) continue;
                if (ring_[g_.idx(a, c)]) acc += weight(i, j, a, c) * data[g_.idx(a, c)];
            }
            b[u] = acc;
        }
        Eigen::VectorXd x = ldlt_->solve(b);
        std::vector<double> out(g_.size(), 0.0);
        for (int u = 0; u < N; ++u) out[g_.idx(nodes_[u][0], nodes_[u][1])] = x[u];
        for (auto [i, j] : ring_nodes_) out[g_.idx(i, j)] = data[g_.idx(i, j)];
        return out;
    }

    // Discrete div(lambda^2 grad v) at an unknown node.
    double apply(const std::vector<double>& v, int i, int j) const {
        double acc = 0.0;
        for (auto [di, dj] : kNbrs) {
            const int a = i + di, b = j + dj;
            if (a < 0 || b < 0) continue;
            acc += weight(i, j, a, b) * (v[g_.idx(a, b)] - v[g_.idx(i, j)]);
        }
        return acc / (g_.h() * g_.h());
    }

private:
    static constexpr std::array<std::array<int, 2>, 4> kNbrs{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    double weight(int i, int j, int a, int b) const {
        if (b == j) return g_.edge_x(std::min(i, a), j);
        return g_.edge_y(i, std::min(j, b));
    }
    const LabGrid& g_;
    double R_;
    std::vector<int> unknown_;
    std::vector<char> ring_;
    std::vector<std::array<int, 2>> nodes_, ring_nodes_;
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

namespace detail {

inline double bump(double t) { return t < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0; }

inline double smoothstep(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Low-band trigonometric polynomial with random phases.
struct TrigPoly {
    std::array<std::array<double, 4>, 6> terms{};  // kx, ky, amplitude, phase
    explicit TrigPoly(Rng& rng, double scale = 1.0) {
        for (auto& t : terms) {
            t[0] = rng.integer(0, 3) / scale;
            t[1] = rng.integer(0, 3) / scale;
            t[2] = rng.uniform(-1.0, 1.0);
            t[3] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
    }
    double operator()(double x, double y) const {
        double acc = 0.0;
        for (const auto& t : terms) acc += t[2] * std::cos(2.0 * std::numbers::pi * (t[0] * x + t[1] * y) + t[3]);
        return acc;
    }
};

// Compactly supported band-limited test function inside [0,1]^2.
inline std::vector<double> sobolev_sample(const LabGrid& g, Rng& rng) {
    const double rho = rng.uniform(0.1, 0.45);
    const double cx = rng.uniform(0.0, 1.0 - rho), cy = rng.uniform(0.0, 1.0 - rho);
    const TrigPoly T(rng);
    const double amp = rng.uniform(0.0, 0.5) / 6.0;
    return g.sample([&](double x, double y) {
        return bump(std::hypot(x - cx, y - cy) / rho) * (1.0 + amp * T(x, y));
    });
}

// Nonnegative discrete subsolution on the disc of radius R: w0 carries
// positive arc data with zero source, w1 carries a nonnegative source with
// zero data, and w = w0 + kappa w1 with kappa keeping w >= 0.
inline std::vector<double> subsolution_sample(const LabGrid& g, const QuarterDiscSolver& S, Rng& rng) {
    const double R = S.radius();
    std::array<double, 4> ak{}, pk{};
    for (int k = 0; k < 4; ++k) {
        ak[k] = rng.uniform(-1.0, 1.0);
        pk[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    auto arc = [&](double th) {
        double v = 1.0;
        for (int k = 0; k < 4; ++k) v += 0.2 * ak[k] * std::cos(2.0 * (k + 1) * th + pk[k]) / (k + 1);
        return v;
    };
    const int blobs = rng.integer(1, 3);
    std::array<std::array<double, 4>, 3> bl{};
    for (int b = 0; b < blobs; ++b) {
        const double r = R * std::sqrt(rng.uniform(0.0, 0.8)), th = rng.uniform(0.0, 0.5 * std::numbers::pi);
        bl[b] = {r * std::cos(th), r * std::sin(th), R * rng.uniform(0.1, 0.4), rng.uniform(0.2, 1.0)};
    }
    const double tau = rng.uniform(0.3, 0.95);
    const int n = g.n();
    auto data = g.sample([&](double x, double y) { return arc(std::atan2(y, x)); });
    std::vector<double> rho(g.size(), 0.0);
    for (int j = 1; j <= n; ++j)
        for (int i = 1; i <= n; ++i) {
            if (!S.is_unknown(i, j)) continue;
            double v = 0.0;
            for (int b = 0; b < blobs; ++b)
                v += bl[b][3] * std::exp(-(std::pow(i * g.h() - bl[b][0], 2) + std::pow(j * g.h() - bl[b][1], 2)) /
                                         (bl[b][2] * bl[b][2]));
            rho[g.idx(i, j)] = v / (R * R);
        }
    const std::vector<double> zero(g.size(), 0.0);
    const auto w0 = S.solve(zero, data);
    const auto w1 = S.solve(rho, zero);
    double kmax = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < w0.size(); ++k) {
        if (w0[k] < 0.0) throw ConstructionError("harmonic part lost positivity");
        if (w1[k] < 0.0) kmax = std::min(kmax, w0[k] / -w1[k]);
    }
    if (!std::isfinite(kmax) || kmax <= 0.0) throw ConstructionError("no nonnegative subsolution in the ensemble");
    const double kappa = tau * kmax;
    std::vector<double> w(w0.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::max(0.0, w0[k] + kappa * w1[k]);
    return w;
}

inline double caccioppoli_ratio(const LabGrid& g, const std::vector<double>& w, Rng& rng) {
    const double h = g.h();
    const double c = rng.uniform(0.0, 0.3), ct = rng.uniform(0.0, 0.5 * std::numbers::pi);
    const double cx = c * std::cos(ct), cy = c * std::sin(ct);
    const double r2 = rng.uniform(0.3, 1.0 - c - 2.0 * h);
    const double r1 = r2 * rng.uniform(0.2, 0.8);
    const auto eta = g.sample([&](double x, double y) {
        return smoothstep((r2 - std::hypot(x - cx, y - cy)) / (r2 - r1));
    });
    std::vector<double> ew(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) ew[k] = eta[k] * w[k];
    return g.dirichlet(ew) / g.dirichlet_weighted(w, eta);
}

inline double linf_ratio(const LabGrid& g, const QuarterDiscSolver& S, const std::vector<double>& w) {
    const double R = S.radius();
    const int n = g.n();
    double inner = 0.0, outer = 0.0;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            const double r = g.radius(i, j);
            const double v = w[g.idx(i, j)];
            if (r <= 0.5 * R) inner = std::max(inner, v);
            if (S.is_unknown(i, j) || S.is_ring(i, j)) outer = std::max(outer, g.node_lambda(i, j) * v);
        }
    return inner * std::pow(R, g.profile().beta) / outer;
}

// Weighted quantile of u over nodes with r < 1, weight lambda^2.
inline double weighted_quantile(const LabGrid& g, const std::vector<double>& u, double q) {
    std::vector<std::pair<double, double>> vw;
    double total = 0.0;
    for (int j = 0; j <= g.n(); ++j)
        for (int i = 0; i <= g.n(); ++i) {
            if (g.radius(i, j) >= 1.0) continue;
            const double l = g.node_lambda(i, j);
            if (l <= 0.0) continue;
            vw.push_back({u[g.idx(i, j)], l * l});
            total += l * l;
        }
    std::sort(vw.begin(), vw.end());
    double acc = 0.0;
    for (const auto& [v, w] : vw) {
        acc += w;
        if (acc >= q * total) return v;
    }
    return vw.back().first;
}

// Weighted mass fractions of {w <= 0} and {w >= 1} over nodes with r < 1.
inline std::array<double, 2> partition_fractions(const LabGrid& g, const std::vector<double>& w) {
    double lo = 0.0, hi = 0.0, total = 0.0;
    for (int j = 0; j <= g.n(); ++j)
        for (int i = 0; i <= g.n(); ++i) {
            if (g.radius(i, j) >= 1.0) continue;
            const double l2 = std::pow(g.node_lambda(i, j), 2);
            total += l2;
            const double v = w[g.idx(i, j)];
            if (v <= 0.0) lo += l2;
            if (v >= 1.0) hi += l2;
        }
    return {lo / total, hi / total};
}

// Smoothstep of a random smooth function between two weighted quantiles.
// Returns the total variation and the certified fraction min(lo, hi).
inline std::array<double, 2> isoperimetric_trial(const LabGrid& g, Rng& rng, double level) {
    const TrigPoly T(rng, 1.5);
    const double ax = rng.uniform(-1.0, 1.0), ay = rng.uniform(-1.0, 1.0), ar = rng.uniform(-1.0, 1.0);
    const auto u = g.sample([&](double x, double y) { return T(x, y) + ax * x + ay * y + ar * std::hypot(x, y); });
    const double t0 = weighted_quantile(g, u, level);
    const double t1 = weighted_quantile(g, u, 1.0 - level);
    if (!(t1 > t0)) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
    std::vector<double> w(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) w[k] = smoothstep((u[k] - t0) / (t1 - t0));
    const auto fr = partition_fractions(g, w);
    return {g.total_variation(w, 1.0), std::min(fr[0], fr[1])};
}

}  // namespace detail

// Ratios of one inequality over `count` trials starting at trial index 0.
// Subsolution labs share one factorization per disc radius.
inline std::vector<double> lab_ratios(LabId id, const LabGrid& g, int count, std::uint64_t seed, double R = 1.0) {
    std::vector<double> out(static_cast<std::size_t>(count));
    std::optional<QuarterDiscSolver> S;
    if (id == LabId::Caccioppoli || id == LabId::LinfRescale) S.emplace(g, R);
    parallel_for(0, static_cast<std::size_t>(count), [&](std::size_t t) {
        Rng rng(seed, t);
        double v = 0.0;
        switch (id) {
            case LabId::SobolevH1: {
                const auto w = detail::sobolev_sample(g, rng);
                v = g.moment(w, 4.0, 4.0) / (g.moment(w, 2.0, 2.0) * g.dirichlet(w));
                break;
            }
            case LabId::SobolevW11: {
                const auto w = detail::sobolev_sample(g, rng);
                v = std::sqrt(g.moment(w, 4.0, 2.0)) / g.total_variation(w);
                break;
            }
            case LabId::Caccioppoli: {
                const auto w = detail::subsolution_sample(g, *S, rng);
                v = detail::caccioppoli_ratio(g, w, rng);
                break;
            }
            case LabId::LinfRescale: {
                const auto w = detail::subsolution_sample(g, *S, rng);
                v = detail::linf_ratio(g, *S, w);
                break;
            }
            case LabId::Isoperimetric: throw DomainError("isoperimetric lab has no ratio form");
        }
        out[t] = v;
    });
    return out;
}

namespace detail {

inline double max_of(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    return m;
}

inline double min_of(const std::vector<double>& v) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : v) m = std::min(m, x);
    return m;
}

inline bool finite_all(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Empirical sigma over trials whose certified fraction reaches `delta`;
// levels are drawn in [lo, 1/2).
struct IsoResult {
    double sigma = std::numeric_limits<double>::infinity();
    int admissible = 0;
    bool finite = true;
};

inline IsoResult iso_run(const LabGrid& g, int count, std::uint64_t seed, std::uint64_t stream0, double lo,
                         double hi) {
    std::vector<std::array<double, 2>> res(static_cast<std::size_t>(count));
    parallel_for(0, res.size(), [&](std::size_t t) {
        Rng rng(seed, stream0 + t);
        res[t] = isoperimetric_trial(g, rng, rng.uniform(lo, hi));
    });
    IsoResult r;
    for (const auto& [tv, fr] : res) {
        if (!(fr >= lo)) continue;
        if (!std::isfinite(tv)) r.finite = false;
        ++r.admissible;
        r.sigma = std::min(r.sigma, tv);
    }
    return r;
}

}  // namespace detail

inline InequalityReport inequality_lab(const LabConfig& cfg, const AngularProfile& P) {
    if (cfg.trials < 100) throw DomainError("inequality lab needs at least 100 trials");
    if (cfg.stability_trials < 1 || cfg.stability_trials > cfg.trials)
        throw DomainError("stability_trials must lie in [1, trials]");
    InequalityReport rep;
    rep.id = to_string(cfg.id);
    rep.trials = cfg.trials;
    rep.seed = cfg.seed;
    rep.n = cfg.n;
    const LabGrid g(P, cfg.n);
    const LabGrid g2(P, 2 * cfg.n);
    const int st = cfg.stability_trials;

    if (cfg.id == LabId::Isoperimetric) {
        if (!(cfg.delta > 0.0 && cfg.delta < 0.5)) throw DomainError("delta must lie in (0, 1/2)");
        // Levels in [delta, 1/2) are admissible for delta; the half-delta
        // ensemble adds trials with levels in [delta/2, delta).
        const auto full = detail::iso_run(g, cfg.trials, cfg.seed, 0, cfg.delta, 0.5);
        const auto extra = detail::iso_run(g, cfg.trials, cfg.seed, 1u << 30, 0.5 * cfg.delta, cfg.delta);
        if (full.admissible == 0) throw ConstructionError("no admissible bi-partition candidate");
        rep.empirical_constant = full.sigma;
        rep.min_ratio = full.sigma;
        rep.delta = cfg.delta;
        rep.sigma_half_delta = std::min(full.sigma, extra.sigma);
        rep.trials_half_delta = full.admissible + extra.admissible;
        rep.all_finite = full.finite && extra.finite;
        const auto base = detail::iso_run(g, st, cfg.seed, 0, cfg.delta, 0.5);
        const auto fine = detail::iso_run(g2, st, cfg.seed, 0, cfg.delta, 0.5);
        rep.stability_factor = fine.sigma / base.sigma;
        return rep;
    }

    if (cfg.id == LabId::LinfRescale) {
        const auto q = lab_ratios(cfg.id, g, cfg.trials, cfg.seed, 0.25);
        const auto hf = lab_ratios(cfg.id, g, cfg.trials, cfg.seed, 0.5);
        rep.constant_quarter = detail::max_of(q);
        rep.constant_half = detail::max_of(hf);
        rep.empirical_constant = std::max(*rep.constant_quarter, *rep.constant_half);
        rep.min_ratio = std::min(detail::min_of(q), detail::min_of(hf));
        rep.all_finite = detail::finite_all(q) && detail::finite_all(hf);
        const auto fine = lab_ratios(cfg.id, g2, st, cfg.seed, 0.5);
        rep.stability_factor = detail::max_of(fine) / detail::max_of({hf.begin(), hf.begin() + st});
        return rep;
    }

    const auto r = lab_ratios(cfg.id, g, cfg.trials, cfg.seed);
    rep.empirical_constant = detail::max_of(r);
    rep.min_ratio = detail::min_of(r);
    rep.all_finite = detail::finite_all(r);
    const auto fine = lab_ratios(cfg.id, g2, st, cfg.seed);
    rep.stability_factor = detail::max_of(fine) / detail::max_of({r.begin(), r.begin() + st});
    return rep;
}

}  // namespace bcpatch
