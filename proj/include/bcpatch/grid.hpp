#pragma once

#include <bcpatch/core.hpp>

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace bcpatch {

// Uniform node grid on the quarter [0,1/2]^2: nodes (i h, j h), 0 <= i,j <= n.
class QuarterGrid {
public:
    explicit QuarterGrid(int n) : n_(n) {
        if (n < 8 || (n & (n - 1)) != 0)
            throw DomainError("grid size must be a power of two >= 8, got " + std::to_string(n));
        h_ = 1.0 / (2.0 * n);
    }

    int n() const { return n_; }
    double h() const { return h_; }
    std::size_t side() const { return static_cast<std::size_t>(n_) + 1; }
    std::size_t size() const { return side() * side(); }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) + side() * static_cast<std::size_t>(j);
    }
    double x(int i) const { return i * h_; }

    bool operator==(const QuarterGrid&) const = default;

private:
    int n_;
    double h_;
};

// Behavior of a node field under reflection across x=0 and x=1/2 (same sign
// for both lines). None means no extension: stencils stay inside the quarter.
enum class Parity { Odd, Even, None };

// Plain node-valued array on a QuarterGrid.
struct NodeField {
    QuarterGrid grid;
    std::vector<double> values;
    Parity px = Parity::None;
    Parity py = Parity::None;

    NodeField(QuarterGrid g, Parity x = Parity::None, Parity y = Parity::None)
        : grid(g), values(g.size(), 0.0), px(x), py(y) {}
    NodeField(QuarterGrid g, std::vector<double> v, Parity x = Parity::None, Parity y = Parity::None)
        : grid(g), values(std::move(v)), px(x), py(y) {
        if (values.size() != grid.size()) throw ShapeError("node array size does not match grid");
    }

    double& at(int i, int j) { return values[grid.index(i, j)]; }
    double at(int i, int j) const { return values[grid.index(i, j)]; }

    // Value at an arbitrary integer index, using the parity reflections.
    double extended(int i, int j) const {
        const int n = grid.n();
        double sign = 1.0;
        auto fold = [n, &sign](int k, Parity p) {
            while (k < 0 || k > n) {
                if (k < 0) k = -k;
                else k = 2 * n - k;
                if (p == Parity::Odd) sign = -sign;
            }
            return k;
        };
        const int ii = fold(i, px);
        const int jj = fold(j, py);
        return sign * at(ii, jj);
    }
};

inline NodeField sample_nodes(QuarterGrid g, const std::function<double(double, double)>& f,
                              Parity px = Parity::None, Parity py = Parity::None) {
    NodeField out(g, px, py);
    const int n = g.n();
    parallel_for(0, static_cast<std::size_t>(n) + 1, [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        for (int i = 0; i <= n; ++i) out.at(i, j) = f(g.x(i), g.x(j));
    });
    return out;
}

// Odd-odd field on the quarter: zero on the axes and on the lines x=1/2, y=1/2.
class SymmetricField {
public:
    explicit SymmetricField(QuarterGrid g) : f_(g, Parity::Odd, Parity::Odd) {}

    // Validates the boundary invariant; throws DomainError if violated.
    SymmetricField(QuarterGrid g, std::vector<double> v) : f_(g, std::move(v), Parity::Odd, Parity::Odd) {
        const int n = g.n();
        for (int k = 0; k <= n; ++k) {
            if (f_.at(k, 0) != 0.0 || f_.at(0, k) != 0.0 || f_.at(k, n) != 0.0 || f_.at(n, k) != 0.0)
                throw DomainError("symmetric field must vanish on the quarter boundary");
        }
    }

    // Forces the boundary lines to zero.
    static SymmetricField pinned(QuarterGrid g, std::vector<double> v) {
        if (v.size() != g.size()) throw ShapeError("node array size does not match grid");
        const int n = g.n();
        for (int k = 0; k <= n; ++k) {
            v[g.index(k, 0)] = 0.0;
            v[g.index(0, k)] = 0.0;
            v[g.index(k, n)] = 0.0;
            v[g.index(n, k)] = 0.0;
        }
        return SymmetricField(g, std::move(v));
    }

    static SymmetricField sample(QuarterGrid g, const std::function<double(double, double)>& f) {
        return pinned(g, sample_nodes(g, f).values);
    }

    const QuarterGrid& grid() const { return f_.grid; }
    int n() const { return f_.grid.n(); }
    const std::vector<double>& values() const { return f_.values; }
    double at(int i, int j) const { return f_.at(i, j); }
    const NodeField& nodes() const { return f_; }

    // Exact (a + a^T)/2; the result satisfies f(i,j) == f(j,i) bitwise.
    SymmetricField symmetrized() const {
        const int n = this->n();
        std::vector<double> v(f_.values.size());
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) v[grid().index(i, j)] = 0.5 * (at(i, j) + at(j, i));
        return SymmetricField(grid(), std::move(v));
    }

private:
    NodeField f_;
};

// Full-torus field of side 2n; index I maps to x = I h (mod 1).
struct TorusField {
    int side = 0;
    std::vector<double> values;
    double at(int I, int J) const {
        return values[static_cast<std::size_t>(I) + static_cast<std::size_t>(side) * J];
    }
};

inline TorusField extend_to_torus(const SymmetricField& f) {
    const int n = f.n();
    const int m = 2 * n;
    TorusField t{m, std::vector<double>(static_cast<std::size_t>(m) * m)};
    for (int J = 0; J < m; ++J) {
        const int j = J <= n ? J : m - J;
        const bool fj = J > n;
        for (int I = 0; I < m; ++I) {
            const int i = I <= n ? I : m - I;
            const bool flip = fj != (I > n);
            const double v = f.at(i, j);
            t.values[static_cast<std::size_t>(I) + static_cast<std::size_t>(m) * J] =
                (flip && v != 0.0) ? -v : v;
        }
    }
    return t;
}

inline SymmetricField restrict_to_quarter(const TorusField& t) {
    if (t.side < 16 || t.side % 2 != 0) throw ShapeError("torus field has invalid side");
    const QuarterGrid g(t.side / 2);
    std::vector<double> v(g.size());
    for (int j = 0; j <= g.n(); ++j)
        for (int i = 0; i <= g.n(); ++i) v[g.index(i, j)] = t.at(i, j);
    return SymmetricField(g, std::move(v));
}

namespace detail {

inline void cubic_weights(double u, double w[4]) {
    w[0] = -u * (u - 1.0) * (u - 2.0) / 6.0;
    w[1] = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    w[2] = -(u + 1.0) * u * (u - 2.0) / 2.0;
    w[3] = (u + 1.0) * u * (u - 1.0) / 6.0;
}

inline int stencil_base(double t, int n, Parity p) {
    int i0 = static_cast<int>(std::floor(t));
    if (p == Parity::None) i0 = std::clamp(i0, 1, n - 2);
    return i0;
}

}  // namespace detail

// Tensor-product cubic Lagrange interpolation at a point of the closed quarter.
inline double interpolate(const NodeField& f, double x1, double x2) {
    const double tol = 1e-12;
    if (!(x1 >= -tol && x2 >= -tol && x1 <= 0.5 + tol && x2 <= 0.5 + tol))
        throw DomainError("interpolation point outside the quarter domain");
    const int n = f.grid.n();
    const double t1 = std::clamp(x1, 0.0, 0.5) * 2.0 * n;
    const double t2 = std::clamp(x2, 0.0, 0.5) * 2.0 * n;
    const int i0 = detail::stencil_base(t1, n, f.px);
    const int j0 = detail::stencil_base(t2, n, f.py);
    double wx[4], wy[4];
    detail::cubic_weights(t1 - i0, wx);
    detail::cubic_weights(t2 - j0, wy);
    double acc = 0.0;
    for (int b = 0; b < 4; ++b) {
        double row = 0.0;
        for (int a = 0; a < 4; ++a) row += wx[a] * f.extended(i0 - 1 + a, j0 - 1 + b);
        acc += wy[b] * row;
    }
    return acc;
}

inline double sample_polar(const NodeField& f, double r, double theta) {
    const double half_pi = std::numbers::pi / 2;
    if (!(r >= 0.0) || !(theta >= 0.0 && theta <= half_pi + 1e-15))
        throw DomainError("polar sample outside the quarter domain");
    const double x1 = r * std::cos(theta);
    const double x2 = r * std::sin(theta);
    if (std::max(x1, x2) > 0.5 + 1e-12) throw DomainError("polar sample outside the quarter domain");
    return interpolate(f, x1, x2);
}

inline double sample_polar(const SymmetricField& f, double r, double theta) {
    return sample_polar(f.nodes(), r, theta);
}

// Composite trapezoid of weight * |f|^p over [0,1/2]^2.
inline double weighted_integral(const NodeField& f, const NodeField& weight, double p) {
    if (!(f.grid == weight.grid)) throw ShapeError("weighted_integral: grids differ");
    const int n = f.grid.n();
    const double h = f.grid.h();
    double total = 0.0;
    for (int j = 0; j <= n; ++j) {
        const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
        double row = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double wi = (i == 0 || i == n) ? 0.5 : 1.0;
            const double v = std::abs(f.at(i, j));
            const double fp = (p == 1.0) ? v : (p == 2.0 ? v * v : std::pow(v, p));
            row += wi * weight.at(i, j) * fp;
        }
        total += wj * row;
    }
    return total * h * h;
}

inline double weighted_integral(const SymmetricField& f, const SymmetricField& w, double p) {
    return weighted_integral(f.nodes(), w.nodes(), p);
}

inline double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace bcpatch
