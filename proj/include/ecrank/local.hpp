#pragma once

// Local reduction data at a prime: reduction type, conductor exponent and
// the p-minimal model. For p >= 5 the type follows from the valuations of
// the minimal (c4, c6, disc) and the tangent cone at the singular point;
// for p in {2, 3} we run the full local algorithm of Tate, including the
// non-minimal restart.

#include <cstdint>
#include <utility>
#include <vector>

#include "ecrank/arith.hpp"
#include "ecrank/curve.hpp"
#include "ecrank/errors.hpp"
#include "ecrank/integers.hpp"

namespace ecrank {

enum class ReductionType : std::uint8_t {
    Good = 0,
    SplitMultiplicative = 1,
    NonsplitMultiplicative = 2,
    Additive = 3,
};

inline int ap_for_type(ReductionType t) {
    switch (t) {
        case ReductionType::SplitMultiplicative: return 1;
        case ReductionType::NonsplitMultiplicative: return -1;
        default: return 0;
    }
}

struct LocalData {
    ReductionType type = ReductionType::Good;
    int conductor_exponent = 0;
    int vdisc_minimal = 0;           // valuation of the minimal discriminant
    WeierstrassCurve minimal_model;  // p-minimal (translations included for p = 2, 3)
};

namespace detail {

inline int vp(const Integer& n, const Integer& p) {
    return n == 0 ? (1 << 20) : valuation(n, p);
}

inline Integer xdiv(const Integer& n, const Integer& d) {
    if (n % d != 0) throw Error("local: expected exact division");
    return n / d;
}

// Roots with multiplicity of a polynomial over F_p, exhaustively.
// Only used for p in {2, 3}; coef[i] is the coefficient of T^i, reduced mod p.
struct SmallPolyRoots {
    std::vector<std::pair<std::uint64_t, int>> roots;
    int max_multiplicity = 0;
};

inline SmallPolyRoots small_poly_roots(const std::vector<std::uint64_t>& coef, std::uint64_t p) {
    SmallPolyRoots out;
    for (std::uint64_t r = 0; r < p; ++r) {
        std::vector<std::uint64_t> c = coef;
        int mult = 0;
        while (c.size() > 1) {
            // synthetic division by (T - r)
            std::vector<std::uint64_t> q(c.size() - 1);
            std::uint64_t acc = 0;
            for (std::size_t i = c.size(); i-- > 1;) {
                acc = (acc * r + c[i]) % p;
                q[i - 1] = acc;
            }
            if ((acc * r + c[0]) % p != 0) break;
            ++mult;
            c = std::move(q);
        }
        if (mult > 0) {
            out.roots.push_back({r, mult});
            out.max_multiplicity = std::max(out.max_multiplicity, mult);
        }
    }
    return out;
}

// Double-root test for A Y^2 + B Y + C over F_p with A a unit, p in {2, 3}.
inline std::pair<bool, std::uint64_t> quad_double_root(std::uint64_t A, std::uint64_t B,
                                                       std::uint64_t C, std::uint64_t p) {
    A %= p;
    B %= p;
    C %= p;
    if (p == 2) {
        // monic form Y^2 + (B/A) Y + C/A: double root iff B is even,
        // and then the root is sqrt(C/A) = C*A over F_2
        if (B % 2 != 0) return {false, 0};
        return {true, (C * A) % 2};
    }
    std::uint64_t disc = (B * B % p + p - (4 % p) * A % p * C % p) % p;
    if (disc != 0) return {false, 0};
    std::uint64_t root = (p - B) % p * inv_mod(2 * A % p, p) % p;
    return {true, root};
}

// Full Tate algorithm at p in {2, 3}.
inline LocalData tate_small_prime(WeierstrassCurve E, std::uint64_t p) {
    const Integer P(p);
    auto val = [&](const Integer& n) { return vp(n, P); };
    auto redu = [&](const Integer& n) { return mod_u64(n, p); };

    for (int restart = 0; restart < 64; ++restart) {
        int n = val(E.disc);
        if (n == 0) {
            return LocalData{ReductionType::Good, 0, 0, E};
        }

        // move the singular point of the reduction to (0, 0)
        {
            bool found = false;
            for (std::uint64_t x0 = 0; x0 < p && !found; ++x0) {
                for (std::uint64_t y0 = 0; y0 < p && !found; ++y0) {
                    Integer X(x0), Y(y0);
                    Integer F = Y * Y + E.a1 * X * Y + E.a3 * Y - X * X * X - E.a2 * X * X -
                                E.a4 * X - E.a6;
                    Integer Fx = E.a1 * Y - 3 * X * X - 2 * E.a2 * X - E.a4;
                    Integer Fy = 2 * Y + E.a1 * X + E.a3;
                    if (F % P == 0 && Fx % P == 0 && Fy % P == 0) {
                        if (x0 != 0 || y0 != 0) E = transform(E, 1, Integer(x0), 0, Integer(y0));
                        found = true;
                    }
                }
            }
            if (!found) throw Error("tate: no singular point found mod " + std::to_string(p));
        }

        // multiplicative iff the tangent cone at the node is nondegenerate
        if (val(E.b2) == 0) {
            bool split = false;
            for (std::uint64_t t = 0; t < p; ++t) {
                if (((t * t + redu(E.a1) * t) % p + (p - redu(E.a2)) % p) % p == 0) {
                    split = true;
                    break;
                }
            }
            return LocalData{split ? ReductionType::SplitMultiplicative
                                   : ReductionType::NonsplitMultiplicative,
                             1, n, E};
        }

        // additive types II, III, IV
        if (val(E.a6) < 2) return LocalData{ReductionType::Additive, n, n, E};
        if (val(E.b8) < 3) return LocalData{ReductionType::Additive, n - 1, n, E};
        if (val(E.b6) < 3) return LocalData{ReductionType::Additive, n - 2, n, E};

        // normalize: p | a1, a2 and p^2 | a3, a4 and p^3 | a6
        E = transform(E, 1, 0, Integer(p == 2 ? redu(E.a2) : redu(E.a1)), 0);
        {
            auto [dbl, y1] = quad_double_root(1, redu(xdiv(E.a3, P)), redu(-xdiv(E.a6, P * P)), p);
            if (!dbl) throw Error("tate: expected a double root past type IV");
            if (y1 != 0) E = transform(E, 1, 0, 0, P * y1);
        }
        if (val(E.a1) < 1 || val(E.a2) < 1 || val(E.a3) < 2 || val(E.a4) < 2 || val(E.a6) < 3)
            throw Error("tate: normalization failed");

        // cubic T^3 + (a2/p) T^2 + (a4/p^2) T + (a6/p^3) over F_p
        std::vector<std::uint64_t> cubic = {redu(xdiv(E.a6, P * P * P)), redu(xdiv(E.a4, P * P)),
                                            redu(xdiv(E.a2, P)), 1};
        SmallPolyRoots roots = small_poly_roots(cubic, p);

        if (roots.max_multiplicity <= 1) {
            // no rational repeated root means no repeated root at all
            // (a repeated root of a cubic over F_p is rational), so I0*
            return LocalData{ReductionType::Additive, n - 4, n, E};
        }

        if (roots.max_multiplicity == 2) {
            // type I_m*: walk the alternating chain of quadratics
            std::uint64_t tau = 0;
            for (auto& [r, mult] : roots.roots)
                if (mult == 2) tau = r;
            if (tau != 0) E = transform(E, 1, P * tau, 0, 0);
            if (val(E.a2) != 1) throw Error("tate: I_m* position violated");

            int m = 1;
            Integer mx = P * P, my = P * P;
            while (true) {
                auto [dblY, y1] =
                    quad_double_root(1, redu(xdiv(E.a3, my)), redu(-xdiv(E.a6, mx * my)), p);
                if (!dblY) break;
                if (y1 != 0) E = transform(E, 1, 0, 0, my * y1);
                my *= P;
                ++m;
                auto [dblX, x1] = quad_double_root(redu(xdiv(E.a2, P)), redu(xdiv(E.a4, P * mx)),
                                                   redu(xdiv(E.a6, mx * my)), p);
                if (!dblX) break;
                if (x1 != 0) E = transform(E, 1, mx * x1, 0, 0);
                mx *= P;
                ++m;
            }
            return LocalData{ReductionType::Additive, n - 4 - m, n, E};
        }

        // triple root: move it to T = 0
        {
            std::uint64_t tau = roots.roots.front().first;
            if (tau != 0) E = transform(E, 1, P * tau, 0, 0);
            if (val(E.a2) < 2 || val(E.a4) < 3 || val(E.a6) < 4)
                throw Error("tate: triple-root position violated");
        }

        // quadratic Y^2 + (a3/p^2) Y - a6/p^4
        {
            auto [dbl, y1] = quad_double_root(1, redu(xdiv(E.a3, P * P)),
                                              redu(-xdiv(E.a6, P * P * P * P)), p);
            if (!dbl) return LocalData{ReductionType::Additive, n - 6, n, E};  // IV*
            if (y1 != 0) E = transform(E, 1, 0, 0, P * P * y1);
        }
        if (val(E.a3) < 3 || val(E.a6) < 5) throw Error("tate: IV* position violated");

        if (val(E.a4) < 4) return LocalData{ReductionType::Additive, n - 7, n, E};  // III*
        if (val(E.a6) < 6) return LocalData{ReductionType::Additive, n - 8, n, E};  // II*

        // non-minimal: scale down and restart
        E = transform(E, P, 0, 0, 0);
    }
    throw Error("tate: did not terminate");
}

// p >= 5: minimal invariants by valuation scaling.
struct MinimalInvariants {
    Integer c4, c6, disc;
    int scale_exponent;  // u = p^k
};

inline MinimalInvariants minimal_invariants_at(const WeierstrassCurve& E, const Integer& p) {
    int k = vp(E.disc, p) / 12;
    if (E.c4 != 0) k = std::min(k, vp(E.c4, p) / 4);
    if (E.c6 != 0) k = std::min(k, vp(E.c6, p) / 6);
    Integer u = 1;
    for (int i = 0; i < k; ++i) u *= p;
    Integer u2 = u * u, u4 = u2 * u2, u6 = u4 * u2;
    return {E.c4 / u4, E.c6 / u6, E.disc / (u6 * u6), k};
}

inline LocalData local_data_large_prime(const WeierstrassCurve& E, std::uint64_t p) {
    MinimalInvariants m = minimal_invariants_at(E, Integer(p));
    int n = vp(m.disc, Integer(p));
    LocalData out;
    out.vdisc_minimal = n;
    out.minimal_model = E;  // only the minimal invariants matter for p >= 5
    if (n == 0) return out;
    if (vp(m.c4, Integer(p)) == 0) {
        // node: on y^2 = x^3 + Ax + B with A = -27 c4, B = -54 c6 the double
        // root is x0 = -3B/(2A) and the tangent slopes satisfy s^2 = 3 x0
        std::uint64_t A = mod_u64(-27 * m.c4, p);
        std::uint64_t B = mod_u64(-54 * m.c6, p);
        std::uint64_t x0 = mul_mod(mul_mod(p - mul_mod(3 % p, B, p), inv_mod(mul_mod(2, A, p), p), p), 1, p);
        std::uint64_t slope2 = mul_mod(3 % p, x0, p);
        out.type = legendre_symbol(Integer(slope2), p) == 1 ? ReductionType::SplitMultiplicative
                                                            : ReductionType::NonsplitMultiplicative;
        out.conductor_exponent = 1;
        return out;
    }
    out.type = ReductionType::Additive;
    out.conductor_exponent = 2;
    return out;
}

// Conductor exponent at an arbitrarily large prime p >= 5; only the
// valuation pattern of the minimal invariants is needed.
inline int conductor_exponent_big(const WeierstrassCurve& E, const Integer& p) {
    MinimalInvariants m = minimal_invariants_at(E, p);
    if (vp(m.disc, p) == 0) return 0;
    return vp(m.c4, p) == 0 ? 1 : 2;
}

}  // namespace detail

/// Local reduction data of E at prime p (p < 2^62).
inline LocalData local_data(const WeierstrassCurve& E, std::uint64_t p) {
    if (p < 5) return detail::tate_small_prime(E, p);
    return detail::local_data_large_prime(E, p);
}

/// Reduction type and a_p at a prime p dividing the discriminant of the
/// given model. Throws GoodReductionPrimeError if the p-minimal model
/// turns out to be good at p.
inline std::pair<ReductionType, int> reduction_type(const WeierstrassCurve& E, std::uint64_t p) {
    if (E.disc % Integer(p) != 0)
        throw DomainError("reduction_type: p does not divide the discriminant");
    LocalData d = local_data(E, p);
    if (d.type == ReductionType::Good)
        throw GoodReductionPrimeError("reduction_type: good reduction at " + std::to_string(p) +
                                      " after minimalization");
    return {d.type, ap_for_type(d.type)};
}

/// Conductor N = prod p^{f_p}. Requires a complete factorization of disc.
inline Integer conductor(const WeierstrassCurve& E, const FactorMap& factored_disc) {
    if (!factored_disc.complete())
        throw IncompleteFactorizationError("conductor: discriminant factorization incomplete");
    Integer N = 1;
    for (const auto& [prime, e] : factored_disc.factors) {
        (void)e;
        int f;
        if (prime < Integer(1) << 62) {
            f = local_data(E, static_cast<std::uint64_t>(prime)).conductor_exponent;
        } else {
            f = detail::conductor_exponent_big(E, prime);
        }
        Integer pf = 1;
        for (int i = 0; i < f; ++i) pf *= prime;
        N *= pf;
    }
    return N;
}

/// Convenience: factor the discriminant, then compute the conductor.
inline Integer conductor(const WeierstrassCurve& E, std::uint64_t factor_budget = 2000000) {
    FactorMap f = factorize(abs(E.disc), factor_budget);
    return conductor(E, f);
}

}  // namespace ecrank
