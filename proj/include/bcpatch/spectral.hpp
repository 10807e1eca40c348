#pragma once

#include <bcpatch/core.hpp>
#include <bcpatch/grid.hpp>

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

namespace bcpatch {

namespace detail {

// Cached FFTW r2r plans (estimate mode, unaligned so they run on any buffer).
class R2R {
public:
    static fftw_plan plan(int len, fftw_r2r_kind kind) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, fftw_plan> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_pair(len, static_cast<int>(kind));
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        double* buf = fftw_alloc_real(static_cast<std::size_t>(len));
        fftw_plan p = fftw_plan_r2r_1d(len, buf, buf, kind, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
        if (!p) throw Error("fftw planning failed");
        cache.emplace(key, p);
        return p;
    }
};

// Applies a 1D transform of length len to each of `rows` contiguous rows.
inline void transform_rows(double* data, std::size_t rows, int len, fftw_r2r_kind kind) {
    fftw_plan p = R2R::plan(len, kind);
    parallel_chunks(0, rows, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            double* row = data + r * static_cast<std::size_t>(len);
            fftw_execute_r2r(p, row, row);
        }
    });
}

// out[c * rows + r] = in[r * cols + c]
inline void transpose(const double* in, double* out, std::size_t rows, std::size_t cols) {
    constexpr std::size_t B = 32;
    const std::size_t nb = (rows + B - 1) / B;
    parallel_for(0, nb, [&](std::size_t b) {
        const std::size_t r0 = b * B, r1 = std::min(rows, r0 + B);
        for (std::size_t c0 = 0; c0 < cols; c0 += B) {
            const std::size_t c1 = std::min(cols, c0 + B);
            for (std::size_t r = r0; r < r1; ++r)
                for (std::size_t c = c0; c < c1; ++c) out[c * rows + r] = in[r * cols + c];
        }
    });
}

}  // namespace detail

// Coefficients a_{mk} of sum a_{mk} sin(2 pi m x1) sin(2 pi k x2) for
// 1 <= m,k <= n-1. Mode n vanishes at every node and is not stored.
// Layout: k (x2 mode) fastest.
class SineSpectrum {
public:
    explicit SineSpectrum(int n) : n_(n), a_(static_cast<std::size_t>(n - 1) * (n - 1), 0.0) {}
    SineSpectrum(int n, std::vector<double> a) : n_(n), a_(std::move(a)) {
        if (a_.size() != static_cast<std::size_t>(n - 1) * (n - 1)) throw ShapeError("spectrum size mismatch");
    }

    int n() const { return n_; }
    int modes() const { return n_ - 1; }
    double& operator()(int m, int k) { return a_[idx(m, k)]; }
    double operator()(int m, int k) const { return a_[idx(m, k)]; }
    std::vector<double>& data() { return a_; }
    const std::vector<double>& data() const { return a_; }

    static double eigenvalue(int m, int k) {
        constexpr double c = 4.0 * std::numbers::pi * std::numbers::pi;
        return -c * (static_cast<double>(m) * m + static_cast<double>(k) * k);
    }

private:
    std::size_t idx(int m, int k) const {
        return static_cast<std::size_t>(k - 1) + static_cast<std::size_t>(n_ - 1) * (m - 1);
    }
    int n_;
    std::vector<double> a_;
};

inline SineSpectrum transform_forward(const SymmetricField& f) {
    const int n = f.n();
    const std::size_t N = static_cast<std::size_t>(n - 1);
    std::vector<double> buf(N * N), tmp(N * N);
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) buf[(i - 1) + N * (j - 1)] = f.at(i, j);
    detail::transform_rows(buf.data(), N, n - 1, FFTW_RODFT00);  // along i
    detail::transpose(buf.data(), tmp.data(), N, N);              // now [j fastest, m slow]
    detail::transform_rows(tmp.data(), N, n - 1, FFTW_RODFT00);  // along j
    const double scale = 1.0 / (static_cast<double>(n) * n);
    for (double& v : tmp) v *= scale;
    return SineSpectrum(n, std::move(tmp));
}

inline SymmetricField transform_inverse(const SineSpectrum& s) {
    const int n = s.n();
    const std::size_t N = static_cast<std::size_t>(n - 1);
    std::vector<double> buf(s.data()), tmp(N * N);
    detail::transform_rows(buf.data(), N, n - 1, FFTW_RODFT00);  // k -> j, rows indexed by m
    detail::transpose(buf.data(), tmp.data(), N, N);              // [m fastest, j slow]
    detail::transform_rows(tmp.data(), N, n - 1, FFTW_RODFT00);  // m -> i
    const QuarterGrid g(n);
    std::vector<double> v(g.size(), 0.0);
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) v[g.index(i, j)] = 0.25 * tmp[(i - 1) + N * (j - 1)];
    return SymmetricField(g, std::move(v));
}

inline SineSpectrum apply_laplacian(const SineSpectrum& s) {
    SineSpectrum out(s);
    for (int m = 1; m < s.n(); ++m)
        for (int k = 1; k < s.n(); ++k) out(m, k) *= SineSpectrum::eigenvalue(m, k);
    return out;
}

struct Gradient {
    NodeField d1;  // even in x1, odd in x2
    NodeField d2;  // odd in x1, even in x2
};

// Spectral derivatives evaluated at all nodes, including boundary lines.
inline Gradient gradient(const SineSpectrum& s) {
    const int n = s.n();
    const QuarterGrid g(n);
    const std::size_t N = static_cast<std::size_t>(n - 1);
    const std::size_t L = static_cast<std::size_t>(n + 1);
    const double tp = 2.0 * std::numbers::pi;
    Gradient out{NodeField(g, Parity::Even, Parity::Odd), NodeField(g, Parity::Odd, Parity::Even)};

    {  // d1 = sum a 2 pi m cos(2 pi m x1) sin(2 pi k x2)
        std::vector<double> buf(N * N);
        for (int m = 1; m < n; ++m)
            for (int k = 1; k < n; ++k) buf[(k - 1) + N * (m - 1)] = s(m, k) * tp * m;
        detail::transform_rows(buf.data(), N, n - 1, FFTW_RODFT00);  // [j fastest, m slow], x2
        std::vector<double> t(L * N, 0.0);                            // rows j, length n+1 over m
        for (std::size_t m = 0; m < N; ++m)
            for (std::size_t j = 0; j < N; ++j) t[j * L + (m + 1)] = 0.25 * buf[j + N * m];
        detail::transform_rows(t.data(), N, n + 1, FFTW_REDFT00);
        for (int j = 1; j < n; ++j)
            for (int i = 0; i <= n; ++i) out.d1.at(i, j) = t[static_cast<std::size_t>(j - 1) * L + i];
    }
    {  // d2 = sum a 2 pi k sin(2 pi m x1) cos(2 pi k x2)
        std::vector<double> buf(N * L, 0.0);  // rows m, length n+1 over k
        for (int m = 1; m < n; ++m)
            for (int k = 1; k < n; ++k) buf[static_cast<std::size_t>(m - 1) * L + k] = 0.5 * s(m, k) * tp * k;
        detail::transform_rows(buf.data(), N, n + 1, FFTW_REDFT00);  // [j fastest (0..n), m slow]
        std::vector<double> t(L * N);
        detail::transpose(buf.data(), t.data(), N, L);  // [m fastest, j slow]
        detail::transform_rows(t.data(), L, n - 1, FFTW_RODFT00);
        for (int j = 0; j <= n; ++j)
            for (int i = 1; i < n; ++i) out.d2.at(i, j) = 0.5 * t[static_cast<std::size_t>(j) * N + (i - 1)];
    }
    return out;
}

inline Gradient gradient(const SymmetricField& f) { return gradient(transform_forward(f)); }

}  // namespace bcpatch
