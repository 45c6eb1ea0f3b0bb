#pragma once

// Trivial-torsion test. The gcd of #E(F_p) over the first 30 good primes
// p > 3 is a multiple of the torsion order (reduction is injective on
// torsion for odd good p), so gcd 1 certifies triviality. Otherwise
// rational 2- and 3-torsion points are searched for exactly on the short
// model via integer-root isolation of x^3 + Ax + B and of the 3-division
// polynomial; 5- and 7-divisible gcds are treated as nontrivial.

#include <functional>
#include <optional>
#include <vector>

#include "ecrank/arith.hpp"
#include "ecrank/count.hpp"
#include "ecrank/curve.hpp"
#include "ecrank/integers.hpp"

namespace ecrank {
namespace detail {

// One integer root of an exactly-evaluated function that is monotone on
// [lo, hi] (either direction).
inline std::optional<Integer> monotone_integer_root(const std::function<Integer(const Integer&)>& f,
                                                    Integer lo, Integer hi) {
    if (lo > hi) return std::nullopt;
    Integer flo = f(lo), fhi = f(hi);
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if ((flo < 0) == (fhi < 0)) return std::nullopt;
    bool increasing = flo < 0;
    while (hi - lo > 1) {
        Integer mid = (lo + hi) / 2;
        Integer fm = f(mid);
        if (fm == 0) return mid;
        if ((fm < 0) == increasing) lo = mid;
        else hi = mid;
    }
    return std::nullopt;
}

// Unit bracket [a, a+1] of the sign change of a monotone function, or the
// exact integer root marked by lo == hi.
inline std::optional<std::pair<Integer, Integer>> monotone_unit_bracket(
    const std::function<Integer(const Integer&)>& f, Integer lo, Integer hi) {
    if (lo > hi) return std::nullopt;
    Integer flo = f(lo), fhi = f(hi);
    if (flo == 0) return std::make_pair(lo, lo);
    if (fhi == 0) return std::make_pair(hi, hi);
    if ((flo < 0) == (fhi < 0)) return std::nullopt;
    bool increasing = flo < 0;
    while (hi - lo > 1) {
        Integer mid = (lo + hi) / 2;
        Integer fm = f(mid);
        if (fm == 0) return std::make_pair(mid, mid);
        if ((fm < 0) == increasing) lo = mid;
        else hi = mid;
    }
    return std::make_pair(lo, hi);
}

// Monotone integer segments of x^3 + Ax + B: ranges whose real hull
// contains no critical point.
inline std::vector<std::pair<Integer, Integer>> cubic_monotone_segments(const Integer& A,
                                                                        const Integer& bound) {
    std::vector<std::pair<Integer, Integer>> segs;
    if (A >= 0) {
        segs.push_back({-bound, bound});
        return segs;
    }
    Integer m = isqrt((-A) / 3);
    // f' = 3x^2 + A: nonpositive on [-m, m], positive for |x| >= m+1
    segs.push_back({-bound, -m - 1});
    segs.push_back({-m, m});
    segs.push_back({m + 1, bound});
    return segs;
}

// All integer roots of the monic cubic x^3 + Ax + B.
inline std::vector<Integer> integer_roots_cubic(const Integer& A, const Integer& B) {
    auto f = [&](const Integer& x) { return x * x * x + A * x + B; };
    Integer bound = 1 + std::max(abs(A), abs(B));
    std::vector<Integer> roots;
    for (auto& [lo, hi] : cubic_monotone_segments(A, bound)) {
        if (auto r = monotone_integer_root(f, lo, hi)) roots.push_back(*r);
    }
    return roots;
}

// Unit brackets of the real roots of x^3 + Ax + B.
inline std::vector<std::pair<Integer, Integer>> cubic_root_brackets(const Integer& A,
                                                                    const Integer& B) {
    auto f = [&](const Integer& x) { return x * x * x + A * x + B; };
    Integer bound = 1 + std::max(abs(A), abs(B));
    std::vector<std::pair<Integer, Integer>> out;
    for (auto& [lo, hi] : cubic_monotone_segments(A, bound)) {
        if (auto b = monotone_unit_bracket(f, lo, hi)) out.push_back(*b);
    }
    return out;
}

// All integer roots of psi3(x) = 3x^4 + 6A x^2 + 12B x - A^2, whose
// derivative is 12 (x^3 + Ax + B).
inline std::vector<Integer> integer_roots_psi3(const Integer& A, const Integer& B) {
    auto psi = [&](const Integer& x) {
        Integer x2 = x * x;
        return 3 * x2 * x2 + 6 * A * x2 + 12 * B * x - A * A;
    };
    Integer bound = 1 + std::max({Integer(2 * abs(A)), Integer(4 * abs(B)), Integer(A * A / 3 + 1)});
    // cut points around the critical values (the real roots of the cubic)
    std::vector<Integer> cuts = {-bound, bound};
    for (auto& [lo, hi] : cubic_root_brackets(A, B)) {
        cuts.push_back(lo);
        cuts.push_back(hi);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<Integer> roots;
    auto consider = [&](const Integer& x) {
        if (psi(x) == 0 &&
            std::find(roots.begin(), roots.end(), x) == roots.end())
            roots.push_back(x);
    };
    for (const Integer& c : cuts) consider(c);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Integer lo = cuts[i] + 1, hi = cuts[i + 1] - 1;
        if (auto r = monotone_integer_root(psi, lo, hi)) consider(*r);
    }
    return roots;
}

}  // namespace detail

/// True only when the torsion subgroup is certainly trivial. Curves whose
/// group-order gcd is divisible by 5 or 7 are reported nontrivial without
/// an exhibited point (the dataset filter drops them).
inline bool torsion_is_trivial(const WeierstrassCurve& E) {
    static const PrimeTable& table = []() -> const PrimeTable& {
        static PrimeTable t(2000);
        return t;
    }();

    Integer g = 0;
    int used = 0;
    for (std::uint64_t p : table.primes()) {
        if (p <= 3) continue;
        if (E.disc % Integer(p) == 0) continue;
        int ap = ap_good_prime(E, p);
        g = boost::multiprecision::gcd(g, Integer(p) + 1 - ap);
        ++used;
        if (g == 1) return true;
        if (used == 30) break;
    }

    // exact searches on y^2 = x^3 + Ax + B (isomorphic over Q)
    const Integer A = -27 * E.c4;
    const Integer B = -54 * E.c6;
    if (!detail::integer_roots_cubic(A, B).empty()) return false;  // 2-torsion

    if (g % 3 == 0) {
        WeierstrassCurve shortE = compute_invariants(0, 0, 0, A, B);
        for (const Integer& x0 : detail::integer_roots_psi3(A, B)) {
            Integer fval = x0 * x0 * x0 + A * x0 + B;
            Integer y0;
            if (!perfect_square(fval, y0)) continue;
            CurvePoint P{Rational(x0), Rational(y0)};
            if (scalar_mul(shortE, 3, P).infinity) return false;  // 3-torsion
        }
    }

    while (g % 2 == 0) g /= 2;
    while (g % 3 == 0) g /= 3;
    return g == 1;
}

}  // namespace ecrank
