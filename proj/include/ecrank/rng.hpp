#pragma once

// Seeded RNG wrapper. Distributions are implemented by hand so that
// streams are reproducible across standard libraries, which keeps the
// byte-identical-rerun contract independent of the toolchain.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ecrank {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    /// Uniform real in [0, 1).
    double real() { return std::ldexp(static_cast<double>(engine_() >> 11), -53); }

    /// Uniform real in [lo, hi).
    double real(double lo, double hi) { return lo + (hi - lo) * real(); }

    /// Log-uniform real in [lo, hi), lo > 0.
    double log_uniform(double lo, double hi) {
        return std::exp(real(std::log(lo), std::log(hi)));
    }

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal() {
        double u1 = 0.0;
        while (u1 == 0.0) u1 = real();
        double u2 = real();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Derive an independent child stream (for chunked parallel generation).
    Rng fork(std::uint64_t salt) {
        return Rng(next_u64() ^ (salt * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ecrank
