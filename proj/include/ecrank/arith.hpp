#pragma once

// Multiplicative number theory primitives: prime sieve, Legendre symbol,
// von Mangoldt, prime powers, and integer factorization (trial division +
// Miller-Rabin + Pollard rho with an iteration budget).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "ecrank/errors.hpp"
#include "ecrank/integers.hpp"
#include "ecrank/rng.hpp"

namespace ecrank {

// ---------------------------------------------------------------------------
// PrimeTable
// ---------------------------------------------------------------------------

/// All primes strictly below `bound`, with 1-based ordinal lookup.
class PrimeTable {
public:
    explicit PrimeTable(std::uint64_t bound) : bound_(bound) {
        if (bound < 2) throw DomainError("PrimeTable: bound must be >= 2");
        std::vector<bool> composite(bound, false);
        for (std::uint64_t i = 2; i * i < bound; ++i) {
            if (composite[i]) continue;
            for (std::uint64_t j = i * i; j < bound; j += i) composite[j] = true;
        }
        ordinal_.assign(bound, 0);
        for (std::uint64_t i = 2; i < bound; ++i) {
            if (!composite[i]) {
                primes_.push_back(i);
                ordinal_[i] = static_cast<std::uint32_t>(primes_.size());
            }
        }
    }

    std::uint64_t bound() const { return bound_; }
    const std::vector<std::uint64_t>& primes() const { return primes_; }
    std::size_t count() const { return primes_.size(); }

    bool is_prime(std::uint64_t n) const { return n < bound_ && ordinal_[n] != 0; }

    /// 1-based index of prime p (index(p_n) = n); 0 if p is not in the table.
    std::uint32_t index(std::uint64_t p) const { return p < bound_ ? ordinal_[p] : 0; }

private:
    std::uint64_t bound_;
    std::vector<std::uint64_t> primes_;
    std::vector<std::uint32_t> ordinal_;
};

inline PrimeTable sieve_primes(std::uint64_t bound) { return PrimeTable(bound); }

// ---------------------------------------------------------------------------
// Elementary arithmetic functions
// ---------------------------------------------------------------------------

/// Legendre symbol (a/p) for odd prime p, via Euler's criterion.
inline int legendre_symbol(const Integer& a, std::uint64_t p) {
    if (p == 2 || p < 3) throw DomainError("legendre_symbol: p must be an odd prime");
    std::uint64_t r = mod_u64(a, p);
    if (r == 0) return 0;
    std::uint64_t e = pow_mod(r, (p - 1) / 2, p);
    return e == 1 ? 1 : -1;
}

inline int legendre_symbol(std::int64_t a, std::uint64_t p) {
    return legendre_symbol(Integer(a), p);
}

/// Von Mangoldt function: log p when n = p^m, else 0.
inline double von_mangoldt(std::uint64_t n) {
    if (n < 2) return 0.0;
    // find the smallest prime factor by trial division
    std::uint64_t p = 0;
    if (n % 2 == 0) {
        p = 2;
    } else {
        for (std::uint64_t d = 3; d * d <= n; d += 2) {
            if (n % d == 0) {
                p = d;
                break;
            }
        }
        if (p == 0) p = n;  // n itself is prime
    }
    std::uint64_t m = n;
    while (m % p == 0) m /= p;
    return m == 1 ? std::log(static_cast<double>(p)) : 0.0;
}

struct PrimePower {
    std::uint64_t p;
    unsigned m;
    std::uint64_t value;  // p^m
};

/// All prime powers p^m <= B, sorted by value.
inline std::vector<PrimePower> prime_powers_up_to(std::uint64_t B) {
    std::vector<PrimePower> out;
    if (B < 2) return out;
    PrimeTable table(B + 1);
    for (std::uint64_t p : table.primes()) {
        std::uint64_t v = p;
        unsigned m = 1;
        while (v <= B) {
            out.push_back({p, m, v});
            if (v > B / p) break;
            v *= p;
            ++m;
        }
    }
    std::sort(out.begin(), out.end(),
              [](const PrimePower& a, const PrimePower& b) { return a.value < b.value; });
    return out;
}

// ---------------------------------------------------------------------------
// Primality and factorization
// ---------------------------------------------------------------------------

namespace detail {

inline Integer pow_mod_big(Integer base, Integer exp, const Integer& m) {
    return boost::multiprecision::powm(base, exp, m);
}

inline bool miller_rabin_witness(const Integer& n, const Integer& a, const Integer& d, int s) {
    Integer x = pow_mod_big(a % n, d, n);
    if (x == 1 || x == n - 1) return false;
    for (int i = 1; i < s; ++i) {
        x = (x * x) % n;
        if (x == n - 1) return false;
    }
    return true;  // a witnesses compositeness
}

}  // namespace detail

/// Miller-Rabin primality test: deterministic base set below 3.317e24,
/// 30 pseudo-random bases above.
inline bool is_probable_prime(const Integer& n, Rng* rng = nullptr) {
    if (n < 2) return false;
    for (int p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41}) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    Integer d = n - 1;
    int s = 0;
    while (d % 2 == 0) {
        d /= 2;
        ++s;
    }
    static const Integer kDeterministicLimit("3317044064679887385961981");
    if (n < kDeterministicLimit) {
        for (int a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41}) {
            if (detail::miller_rabin_witness(n, Integer(a), d, s)) return false;
        }
        return true;
    }
    Rng local(0x5eedULL);
    Rng& r = rng ? *rng : local;
    for (int i = 0; i < 30; ++i) {
        Integer a = 2 + Integer(r.next_u64()) % (n - 3);
        if (detail::miller_rabin_witness(n, a, d, s)) return false;
    }
    return true;
}

/// Partial factorization: map prime -> exponent plus an unfactored cofactor
/// (1 when the factorization is complete).
struct FactorMap {
    std::map<Integer, int> factors;
    Integer cofactor = 1;

    bool complete() const { return cofactor == 1; }

    Integer reconstruct() const {
        Integer n = cofactor;
        for (const auto& [p, e] : factors) {
            for (int i = 0; i < e; ++i) n *= p;
        }
        return n;
    }
};

namespace detail {

inline Integer pollard_rho(const Integer& n, std::uint64_t budget, Rng& rng) {
    // Brent's variant; returns a nontrivial factor or 0 on budget exhaustion.
    if (n % 2 == 0) return 2;
    for (int attempt = 0; attempt < 8; ++attempt) {
        Integer y = 2 + Integer(rng.next_u64()) % (n - 3);
        Integer c = 1 + Integer(rng.next_u64()) % (n - 2);
        Integer x = y, q = 1, g = 1, ys = y;
        std::uint64_t r = 1, used = 0;
        const std::uint64_t batch = 128;
        while (g == 1 && used < budget) {
            x = y;
            for (std::uint64_t i = 0; i < r && used < budget; ++i, ++used)
                y = (y * y + c) % n;
            std::uint64_t k = 0;
            while (k < r && g == 1 && used < budget) {
                ys = y;
                std::uint64_t steps = std::min(batch, r - k);
                for (std::uint64_t i = 0; i < steps && used < budget; ++i, ++used) {
                    y = (y * y + c) % n;
                    Integer diff = x > y ? x - y : y - x;
                    q = (q * diff) % n;
                }
                g = boost::multiprecision::gcd(q, n);
                k += steps;
            }
            r *= 2;
        }
        if (g == n) {
            // backtrack one step at a time
            do {
                ys = (ys * ys + c) % n;
                Integer diff = x > ys ? x - ys : ys - x;
                g = boost::multiprecision::gcd(diff, n);
            } while (g == 1);
        }
        if (g != 1 && g != n) return g;
        if (used >= budget) return 0;
    }
    return 0;
}

inline const PrimeTable& trial_division_table() {
    static const PrimeTable table(1000000);
    return table;
}

inline void factorize_rec(Integer n, std::uint64_t budget, Rng& rng, FactorMap& out) {
    if (n == 1) return;
    if (is_probable_prime(n, &rng)) {
        out.factors[n] += 1;
        return;
    }
    Integer f = pollard_rho(n, budget, rng);
    if (f == 0) {
        out.cofactor *= n;
        return;
    }
    factorize_rec(f, budget, rng, out);
    factorize_rec(n / f, budget, rng, out);
}

}  // namespace detail

/// Factor n >= 1 by trial division below 10^6, then Pollard rho within the
/// iteration budget. Unfactored parts end up in the cofactor.
inline FactorMap factorize(Integer n, std::uint64_t effort_budget = 2000000) {
    if (n < 1) throw DomainError("factorize: n must be >= 1");
    FactorMap out;
    if (n == 1) return out;
    const PrimeTable& table = detail::trial_division_table();
    for (std::uint64_t p : table.primes()) {
        if (n == 1) break;
        if (Integer(p) * p > n) break;
        while (n % p == 0) {
            n /= p;
            out.factors[Integer(p)] += 1;
        }
    }
    if (n == 1) return out;
    // n has no prime factor below 10^6 (or is a single leftover prime)
    if (n < Integer(1000000) * 1000000 || is_probable_prime(n)) {
        out.factors[n] += 1;
        return out;
    }
    Rng rng(0x6ac7'0f2dULL);
    detail::factorize_rec(n, effort_budget, rng, out);
    return out;
}

}  // namespace ecrank
