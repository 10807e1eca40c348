#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bcpatch {

// Error categories map onto CLI exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

class DomainError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "domain"; }
};

class ShapeError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "shape"; }
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history = {})
        : Error(what), history_(std::move(history)) {}
    const char* kind() const noexcept override { return "nonconvergence"; }
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

class ResolutionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "resolution"; }
};

class FitError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "fit"; }
};

class ConstructionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "construction"; }
};

// Thread cap for data-parallel loops. Results never depend on it: every
// parallel loop writes disjoint outputs and reductions are done serially.
inline std::atomic<int>& thread_cap() {
    static std::atomic<int> cap{
        static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 8u))};
    return cap;
}

inline void set_threads(int t) { thread_cap().store(std::max(1, t)); }
inline int threads() { return thread_cap().load(); }

// Calls fn(lo, hi) on contiguous chunks of [begin, end).
inline void parallel_chunks(std::size_t begin, std::size_t end,
                            const std::function<void(std::size_t, std::size_t)>& fn) {
    if (end <= begin) return;
    const std::size_t count = end - begin;
    const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(threads()), count);
    if (t <= 1) {
        fn(begin, end);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(t);
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    for (std::size_t k = 0; k < t; ++k) {
        const std::size_t lo = begin + count * k / t;
        const std::size_t hi = begin + count * (k + 1) / t;
        pool.emplace_back([&, lo, hi] {
            try {
                fn(lo, hi);
            } catch (...) {
                if (!failed.exchange(true)) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

inline void parallel_for(std::size_t begin, std::size_t end,
                         const std::function<void(std::size_t)>& fn) {
    parallel_chunks(begin, end, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
}

// Seeded generator with a platform-independent mapping to doubles.
// std::uniform_real_distribution is implementation-defined, so it is avoided.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : eng_(mix(seed, stream)) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t bits() { return eng_(); }
    int integer(int lo, int hi) {
        return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a * 0x9E3779B97F4A7C15ull ^ (b + 0xBF58476D1CE4E5B9ull + (a << 6) + (a >> 2));
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 eng_;
};

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

}  // namespace bcpatch
