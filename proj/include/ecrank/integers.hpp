#pragma once

// Arbitrary-precision integer/rational aliases and the small modular
// helpers shared by the number-theoretic modules.

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>

#include "ecrank/errors.hpp"

namespace ecrank {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Rational make_rational(const Integer& num, const Integer& den) {
    return Rational(num, den);
}

inline Integer numerator(const Rational& q) { return boost::multiprecision::numerator(q); }
inline Integer denominator(const Rational& q) { return boost::multiprecision::denominator(q); }

/// Nonnegative residue of n mod m (m > 0), as uint64.
inline std::uint64_t mod_u64(const Integer& n, std::uint64_t m) {
    Integer r = n % m;
    if (r < 0) r += m;
    return static_cast<std::uint64_t>(r);
}

/// p-adic valuation of n != 0.
inline int valuation(Integer n, const Integer& p) {
    if (n == 0) throw DomainError("valuation of zero");
    int v = 0;
    while (n % p == 0) {
        n /= p;
        ++v;
    }
    return v;
}

inline bool divides_pow(const Integer& n, const Integer& p, int k) {
    // true if n == 0 or p^k | n
    if (n == 0) return true;
    return valuation(n, p) >= k;
}

/// Floor of the integer square root; input must be nonnegative.
inline Integer isqrt(const Integer& n) {
    if (n < 0) throw DomainError("isqrt of negative");
    return boost::multiprecision::sqrt(n);
}

/// Exact square root if n is a perfect square.
inline bool perfect_square(const Integer& n, Integer& root) {
    if (n < 0) return false;
    root = isqrt(n);
    return root * root == n;
}

// ---- 64-bit modular arithmetic (p < 2^62) ----

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

inline std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
    std::uint64_t r = 1 % m;
    base %= m;
    while (exp) {
        if (exp & 1) r = mul_mod(r, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return r;
}

/// Modular inverse of a mod m, gcd(a, m) = 1.
inline std::uint64_t inv_mod(std::uint64_t a, std::uint64_t m) {
    // extended Euclid on signed 128-bit intermediates
    __int128 t = 0, new_t = 1;
    __int128 r = m, new_r = a % m;
    while (new_r != 0) {
        __int128 q = r / new_r;
        __int128 tmp = t - q * new_t;
        t = new_t;
        new_t = tmp;
        tmp = r - q * new_r;
        r = new_r;
        new_r = tmp;
    }
    if (r != 1) throw DomainError("inv_mod: arguments not coprime");
    if (t < 0) t += m;
    return static_cast<std::uint64_t>(t);
}

}  // namespace ecrank
