#pragma once

// Exact elliptic curve arithmetic over Q: Weierstrass models with their
// b/c-invariants and discriminant, (u,r,s,t) changes of variables, the
// reduced coefficient form, and the chord-tangent group law in exact
// rational arithmetic.

#include <array>
#include <optional>
#include <string>

#include "ecrank/errors.hpp"
#include "ecrank/integers.hpp"

namespace ecrank {

struct WeierstrassCurve {
    Integer a1, a2, a3, a4, a6;
    Integer b2, b4, b6, b8;
    Integer c4, c6;
    Integer disc;
    std::optional<Integer> conductor;

    std::string label() const {
        return "[" + a1.str() + "," + a2.str() + "," + a3.str() + "," + a4.str() + "," +
               a6.str() + "]";
    }
};

/// Build a curve from its a-invariants; rejects singular models.
inline WeierstrassCurve compute_invariants(const Integer& a1, const Integer& a2,
                                           const Integer& a3, const Integer& a4,
                                           const Integer& a6) {
    WeierstrassCurve E;
    E.a1 = a1;
    E.a2 = a2;
    E.a3 = a3;
    E.a4 = a4;
    E.a6 = a6;
    E.b2 = a1 * a1 + 4 * a2;
    E.b4 = 2 * a4 + a1 * a3;
    E.b6 = a3 * a3 + 4 * a6;
    E.b8 = (E.b2 * E.b6 - E.b4 * E.b4) / 4;
    E.c4 = E.b2 * E.b2 - 24 * E.b4;
    E.c6 = -E.b2 * E.b2 * E.b2 + 36 * E.b2 * E.b4 - 216 * E.b6;
    E.disc = (E.c4 * E.c4 * E.c4 - E.c6 * E.c6) / 1728;
    if (E.disc == 0) throw SingularCurveError("singular model " + E.label());
    return E;
}

inline WeierstrassCurve curve_from_list(const std::array<Integer, 5>& a) {
    return compute_invariants(a[0], a[1], a[2], a[3], a[4]);
}

/// j-invariant as an exact rational.
inline Rational j_invariant(const WeierstrassCurve& E) {
    return Rational(E.c4 * E.c4 * E.c4 * 1728, E.c4 * E.c4 * E.c4 - E.c6 * E.c6);
}

namespace detail {
inline Integer exact_div(const Integer& n, const Integer& d) {
    if (n % d != 0) throw DomainError("transform: non-integral coefficient");
    return n / d;
}
}  // namespace detail

/// Change of variables x = u^2 x' + r, y = u^3 y' + s u^2 x' + t.
/// The resulting coefficients must be integral.
inline WeierstrassCurve transform(const WeierstrassCurve& E, const Integer& u, const Integer& r,
                                  const Integer& s, const Integer& t) {
    Integer u2 = u * u, u3 = u2 * u, u4 = u2 * u2, u6 = u3 * u3;
    Integer a1 = detail::exact_div(E.a1 + 2 * s, u);
    Integer a2 = detail::exact_div(E.a2 - s * E.a1 + 3 * r - s * s, u2);
    Integer a3 = detail::exact_div(E.a3 + r * E.a1 + 2 * t, u3);
    Integer a4 =
        detail::exact_div(E.a4 - s * E.a3 + 2 * r * E.a2 - (t + r * s) * E.a1 + 3 * r * r - 2 * s * t,
                          u4);
    Integer a6 = detail::exact_div(
        E.a6 + r * E.a4 + r * r * E.a2 + r * r * r - t * E.a3 - t * t - r * t * E.a1, u6);
    return compute_invariants(a1, a2, a3, a4, a6);
}

/// Translate to the reduced form a1, a3 in {0,1}, a2 in {-1,0,1}.
inline WeierstrassCurve reduce_model(const WeierstrassCurve& E0) {
    WeierstrassCurve E = E0;
    // a1 mod 2
    Integer a1r = E.a1 % 2;
    if (a1r < 0) a1r += 2;
    E = transform(E, 1, 0, (a1r - E.a1) / 2, 0);
    // a2 to {-1,0,1}
    Integer a2r = E.a2 % 3;
    if (a2r < 0) a2r += 3;
    if (a2r == 2) a2r = -1;
    E = transform(E, 1, (a2r - E.a2) / 3, 0, 0);
    // a3 mod 2
    Integer a3r = E.a3 % 2;
    if (a3r < 0) a3r += 2;
    E = transform(E, 1, 0, 0, (a3r - E.a3) / 2);
    return E;
}

// ---------------------------------------------------------------------------
// Projective integer points (coprime coordinates, canonical sign)
// ---------------------------------------------------------------------------

struct ProjectivePoint {
    Integer X, Y, Z;

    ProjectivePoint(Integer x, Integer y, Integer z) : X(std::move(x)), Y(std::move(y)), Z(std::move(z)) {
        canonicalize();
    }

    void canonicalize() {
        if (X == 0 && Y == 0 && Z == 0) throw DomainError("projective point (0:0:0)");
        Integer g = boost::multiprecision::gcd(boost::multiprecision::gcd(abs(X), abs(Y)), abs(Z));
        X /= g;
        Y /= g;
        Z /= g;
        bool flip = Z != 0 ? Z < 0 : (Y != 0 ? Y < 0 : X < 0);
        if (flip) {
            X = -X;
            Y = -Y;
            Z = -Z;
        }
    }

    bool operator==(const ProjectivePoint& o) const { return X == o.X && Y == o.Y && Z == o.Z; }
};

// ---------------------------------------------------------------------------
// Group law (affine rational points plus the point at infinity)
// ---------------------------------------------------------------------------

struct CurvePoint {
    bool infinity = true;
    Rational x, y;

    CurvePoint() = default;
    CurvePoint(Rational px, Rational py) : infinity(false), x(std::move(px)), y(std::move(py)) {}

    static CurvePoint at_infinity() { return CurvePoint(); }

    bool operator==(const CurvePoint& o) const {
        if (infinity || o.infinity) return infinity == o.infinity;
        return x == o.x && y == o.y;
    }
};

inline bool point_on_curve(const WeierstrassCurve& E, const CurvePoint& P) {
    if (P.infinity) return true;
    Rational lhs = P.y * P.y + Rational(E.a1) * P.x * P.y + Rational(E.a3) * P.y;
    Rational rhs = P.x * P.x * P.x + Rational(E.a2) * P.x * P.x + Rational(E.a4) * P.x + Rational(E.a6);
    return lhs == rhs;
}

inline CurvePoint point_neg(const WeierstrassCurve& E, const CurvePoint& P) {
    if (P.infinity) return P;
    return CurvePoint(P.x, -P.y - Rational(E.a1) * P.x - Rational(E.a3));
}

inline CurvePoint point_add(const WeierstrassCurve& E, const CurvePoint& P, const CurvePoint& Q) {
    if (!point_on_curve(E, P) || !point_on_curve(E, Q))
        throw PointNotOnCurveError("point_add: input point not on curve");
    if (P.infinity) return Q;
    if (Q.infinity) return P;

    const Rational A1(E.a1), A2(E.a2), A3(E.a3), A4(E.a4);
    Rational lambda, nu;
    if (P.x == Q.x) {
        if (Q.y == -P.y - A1 * P.x - A3) return CurvePoint::at_infinity();
        // doubling
        Rational den = 2 * P.y + A1 * P.x + A3;
        lambda = (3 * P.x * P.x + 2 * A2 * P.x + A4 - A1 * P.y) / den;
        nu = P.y - lambda * P.x;
    } else {
        lambda = (Q.y - P.y) / (Q.x - P.x);
        nu = P.y - lambda * P.x;
    }
    Rational x3 = lambda * lambda + A1 * lambda - A2 - P.x - Q.x;
    Rational y3 = -(lambda + A1) * x3 - nu - A3;
    return CurvePoint(x3, y3);
}

inline CurvePoint scalar_mul(const WeierstrassCurve& E, Integer n, const CurvePoint& P) {
    CurvePoint base = P;
    if (n < 0) {
        base = point_neg(E, P);
        n = -n;
    }
    CurvePoint acc = CurvePoint::at_infinity();
    while (n > 0) {
        if (n % 2 == 1) acc = point_add(E, acc, base);
        n /= 2;
        if (n > 0) base = point_add(E, base, base);
    }
    return acc;
}

}  // namespace ecrank
