#pragma once

// Plane cubics: pencils through chosen rational points, and the classical
// reduction of a nonsingular cubic with a rational point to Weierstrass
// form.
//
// The reduction moves the point to the origin, normalizes the tangent to
// the x-axis, and then either projects from the point (generic case: the
// cubic becomes v^2 = quartic(t) with a rational point, which maps to a
// Weierstrass model by the standard formulas) or, when the point is a
// flex, sends it straight to infinity by a coordinate swap. The composed
// birational map is kept so that construction points can be pushed onto
// the output model exactly.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecrank/curve.hpp"
#include "ecrank/errors.hpp"
#include "ecrank/integers.hpp"
#include "ecrank/local.hpp"
#include "ecrank/rng.hpp"

namespace ecrank {

/// Homogeneous cubic in X, Y, Z. Coefficient order:
/// X^3, X^2 Y, X Y^2, Y^3, X^2 Z, X Y Z, Y^2 Z, X Z^2, Y Z^2, Z^3.
struct PlaneCubic {
    std::array<Integer, 10> c{};

    static const std::array<std::array<int, 3>, 10>& monomials() {
        static const std::array<std::array<int, 3>, 10> m = {{{3, 0, 0},
                                                              {2, 1, 0},
                                                              {1, 2, 0},
                                                              {0, 3, 0},
                                                              {2, 0, 1},
                                                              {1, 1, 1},
                                                              {0, 2, 1},
                                                              {1, 0, 2},
                                                              {0, 1, 2},
                                                              {0, 0, 3}}};
        return m;
    }
};

inline Integer cubic_eval(const PlaneCubic& F, const Integer& X, const Integer& Y,
                          const Integer& Z) {
    Integer v = 0;
    const auto& mons = PlaneCubic::monomials();
    for (int i = 0; i < 10; ++i) {
        Integer term = F.c[i];
        for (int j = 0; j < mons[i][0]; ++j) term *= X;
        for (int j = 0; j < mons[i][1]; ++j) term *= Y;
        for (int j = 0; j < mons[i][2]; ++j) term *= Z;
        v += term;
    }
    return v;
}

inline std::array<Integer, 3> cubic_gradient(const PlaneCubic& F, const Integer& X,
                                             const Integer& Y, const Integer& Z) {
    std::array<Integer, 3> g = {0, 0, 0};
    const auto& mons = PlaneCubic::monomials();
    auto powi = [](const Integer& b, int e) {
        Integer r = 1;
        for (int i = 0; i < e; ++i) r *= b;
        return r;
    };
    for (int i = 0; i < 10; ++i) {
        const auto& m = mons[i];
        if (m[0] > 0) g[0] += F.c[i] * m[0] * powi(X, m[0] - 1) * powi(Y, m[1]) * powi(Z, m[2]);
        if (m[1] > 0) g[1] += F.c[i] * m[1] * powi(X, m[0]) * powi(Y, m[1] - 1) * powi(Z, m[2]);
        if (m[2] > 0) g[2] += F.c[i] * m[2] * powi(X, m[0]) * powi(Y, m[1]) * powi(Z, m[2] - 1);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Pencils of cubics through k random rational points
// ---------------------------------------------------------------------------

struct PencilCubic {
    PlaneCubic cubic;
    std::vector<ProjectivePoint> base_points;
};

/// A random integer specialization of the family of cubics through k random
/// rational plane points with numerators/denominators bounded by
/// coord_bound. The k linear conditions are solved exactly; the returned
/// cubic vanishes at every construction point.
inline PencilCubic gen_pencil_cubic(int k, int coord_bound, Rng& rng) {
    if (k < 2 || k > 8) throw DomainError("gen_pencil_cubic: k must be in [2, 8]");
    for (int attempt = 0; attempt < 64; ++attempt) {
        // distinct rational points
        std::vector<ProjectivePoint> pts;
        while (static_cast<int>(pts.size()) < k) {
            Integer xn(rng.range(-coord_bound, coord_bound)), xd(rng.range(1, coord_bound));
            Integer yn(rng.range(-coord_bound, coord_bound)), yd(rng.range(1, coord_bound));
            ProjectivePoint P(xn * yd, yn * xd, xd * yd);
            bool dup = false;
            for (auto& q : pts) dup = dup || q == P;
            if (!dup) pts.push_back(P);
        }

        // k x 10 system over Q, solved by Gaussian elimination
        std::vector<std::array<Rational, 10>> rows(k);
        const auto& mons = PlaneCubic::monomials();
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < 10; ++j) {
                Integer term = 1;
                for (int e = 0; e < mons[j][0]; ++e) term *= pts[i].X;
                for (int e = 0; e < mons[j][1]; ++e) term *= pts[i].Y;
                for (int e = 0; e < mons[j][2]; ++e) term *= pts[i].Z;
                rows[i][j] = Rational(term);
            }
        }
        std::vector<int> pivot_col;
        int r = 0;
        for (int col = 0; col < 10 && r < k; ++col) {
            int sel = -1;
            for (int i = r; i < k; ++i)
                if (rows[i][col] != 0) {
                    sel = i;
                    break;
                }
            if (sel < 0) continue;
            std::swap(rows[sel], rows[r]);
            Rational inv = rows[r][col];
            for (int j = 0; j < 10; ++j) rows[r][j] /= inv;
            for (int i = 0; i < k; ++i) {
                if (i == r || rows[i][col] == 0) continue;
                Rational f = rows[i][col];
                for (int j = 0; j < 10; ++j) rows[i][j] -= f * rows[r][j];
            }
            pivot_col.push_back(col);
            ++r;
        }
        if (r < k) continue;  // degenerate configuration, redraw

        // kernel basis: one vector per free column
        std::vector<std::array<Rational, 10>> basis;
        std::vector<bool> is_pivot(10, false);
        for (int c : pivot_col) is_pivot[c] = true;
        for (int free = 0; free < 10; ++free) {
            if (is_pivot[free]) continue;
            std::array<Rational, 10> v{};
            v[free] = 1;
            for (int i = 0; i < k; ++i) v[pivot_col[i]] = -rows[i][free];
            basis.push_back(v);
        }

        // random integer combination, cleared to integers and made primitive
        std::array<Rational, 10> comb{};
        bool nonzero = false;
        for (auto& b : basis) {
            Integer w(rng.range(-9, 9));
            if (w == 0) continue;
            for (int j = 0; j < 10; ++j) comb[j] += Rational(w) * b[j];
        }
        for (auto& x : comb) nonzero = nonzero || x != 0;
        if (!nonzero) continue;
        Integer lcm = 1;
        for (auto& x : comb) lcm = boost::multiprecision::lcm(lcm, denominator(x));
        PlaneCubic F;
        Integer content = 0;
        for (int j = 0; j < 10; ++j) {
            F.c[j] = numerator(comb[j]) * (lcm / denominator(comb[j]));
            content = boost::multiprecision::gcd(content, abs(F.c[j]));
        }
        for (auto& x : F.c) x /= content;
        // no x^3, x^2, ... of degree < 3 exist here; just confirm the points
        bool ok = true;
        for (auto& P : pts) ok = ok && cubic_eval(F, P.X, P.Y, P.Z) == 0;
        if (!ok) throw Error("gen_pencil_cubic: interpolation failed");
        return {F, pts};
    }
    throw DegenerateConfigurationError("gen_pencil_cubic: no nondegenerate configuration found");
}

// ---------------------------------------------------------------------------
// Nagell reduction to Weierstrass form
// ---------------------------------------------------------------------------

namespace detail {

using TriPoly = std::map<std::array<int, 3>, Rational>;  // exponents -> coeff

inline TriPoly cubic_to_poly(const PlaneCubic& F) {
    TriPoly p;
    const auto& mons = PlaneCubic::monomials();
    for (int i = 0; i < 10; ++i) {
        if (F.c[i] != 0) p[{mons[i][0], mons[i][1], mons[i][2]}] = Rational(F.c[i]);
    }
    return p;
}

inline TriPoly poly_mul(const TriPoly& a, const TriPoly& b) {
    TriPoly out;
    for (auto& [ma, ca] : a)
        for (auto& [mb, cb] : b) {
            std::array<int, 3> m = {ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2]};
            out[m] += ca * cb;
        }
    return out;
}

/// Substitute the linear change (X,Y,Z) = T * (X',Y',Z') into a cubic.
inline TriPoly poly_substitute(const TriPoly& p, const std::array<std::array<Rational, 3>, 3>& T) {
    TriPoly lin[3];
    for (int i = 0; i < 3; ++i) {
        if (T[i][0] != 0) lin[i][{1, 0, 0}] = T[i][0];
        if (T[i][1] != 0) lin[i][{0, 1, 0}] = T[i][1];
        if (T[i][2] != 0) lin[i][{0, 0, 1}] = T[i][2];
    }
    TriPoly out;
    for (auto& [m, coef] : p) {
        TriPoly term;
        term[{0, 0, 0}] = coef;
        for (int v = 0; v < 3; ++v)
            for (int e = 0; e < m[v]; ++e) term = poly_mul(term, lin[v]);
        for (auto& [mm, cc] : term) out[mm] += cc;
    }
    return out;
}

inline Rational poly_coeff(const TriPoly& p, int i, int j, int k) {
    auto it = p.find({i, j, k});
    return it == p.end() ? Rational(0) : it->second;
}

inline std::array<Rational, 3> apply_matrix(const std::array<std::array<Rational, 3>, 3>& T,
                                            const std::array<Rational, 3>& v) {
    std::array<Rational, 3> out;
    for (int i = 0; i < 3; ++i) out[i] = T[i][0] * v[0] + T[i][1] * v[1] + T[i][2] * v[2];
    return out;
}

inline Integer integer_nth_root(const Integer& x, int n) {
    if (x < 0) throw DomainError("integer_nth_root: negative");
    if (x == 0) return 0;
    Integer lo = 0, hi = 1;
    auto powi = [&](Integer b) {
        Integer r = 1;
        for (int i = 0; i < n; ++i) r *= b;
        return r;
    };
    while (powi(hi) <= x) hi *= 2;
    while (hi - lo > 1) {
        Integer mid = (lo + hi) / 2;
        if (powi(mid) <= x) lo = mid;
        else hi = mid;
    }
    if (powi(lo) != x) throw DomainError("integer_nth_root: not a perfect power");
    return lo;
}

}  // namespace detail

/// The composed birational map from the input cubic to the output
/// Weierstrass model. Points on exceptional fibers (including the base
/// point) map to the point at infinity.
struct BirationalMap {
    // inverse of the linear chain: cubic coordinates -> normalized (x, y, z)
    std::array<std::array<Rational, 3>, 3> to_normalized;
    bool quartic_path = false;
    // quartic path data: f = c y + f2 + f3 in the normalized chart
    Rational c, f2xy, f2yy, f3xxx, f3xxy, f3xyy, f3yyy, e;
    std::array<Rational, 5> quartic;  // g(t) = q^2 - 4 c t r, ascending powers
    // flex path scaling x_m = -(d3/c) u, y_m = (d3/c) w
    Rational flex_scale;
    // model scaling: raw rational model -> emitted integral model
    Rational u = 1, r = 0, s = 0, t = 0;
    std::string description;

    std::optional<CurvePoint> apply(const ProjectivePoint& P) const {
        std::array<Rational, 3> v = {Rational(P.X), Rational(P.Y), Rational(P.Z)};
        v = detail::apply_matrix(to_normalized, v);
        if (v[2] == 0) return CurvePoint::at_infinity();
        Rational x = v[0] / v[2], y = v[1] / v[2];
        Rational X, Y;
        if (quartic_path) {
            if (x == 0) return CurvePoint::at_infinity();
            Rational tpar = y / x;
            Rational q = e + f2xy * tpar + f2yy * tpar * tpar;
            Rational rr = f3xxx + f3xxy * tpar + f3xyy * tpar * tpar + f3yyy * tpar * tpar * tpar;
            Rational vv = 2 * rr * x + q;
            if (tpar == 0) return CurvePoint::at_infinity();
            const Rational &gd = quartic[1], &gc = quartic[2];
            Rational t2 = tpar * tpar;
            X = (2 * e * (vv + e) + gd * tpar) / t2;
            Y = (4 * e * e * (vv + e) + 2 * e * (gd * tpar + gc * t2) -
                 (gd * gd / (2 * e)) * t2) /
                (t2 * tpar);
        } else {
            if (y == 0) return CurvePoint::at_infinity();
            Rational u0 = x / y, w0 = 1 / y;
            X = -flex_scale * u0;
            Y = flex_scale * w0;
        }
        // into the emitted model: x = u^2 x' + r, y = u^3 y' + s u^2 x' + t
        Rational u2 = u * u, u3 = u2 * u;
        Rational Xm = (X - r) / u2;
        Rational Ym = (Y - s * (X - r) - t) / u3;
        return CurvePoint{Xm, Ym};
    }
};

struct CubicReduction {
    WeierstrassCurve curve;
    BirationalMap map;
};

namespace detail {

/// (u, r, s, t) with target = transform(source, u, r, s, t); the models
/// must be isomorphic over Q.
inline std::array<Rational, 4> isomorphism_data(const WeierstrassCurve& src,
                                                const WeierstrassCurve& dst) {
    Rational u;
    if (src.c4 != 0) {
        Rational ratio(src.c4, dst.c4);
        u = Rational(integer_nth_root(numerator(ratio) * denominator(ratio) *
                                          denominator(ratio) * denominator(ratio),
                                      4),
                     denominator(ratio));
    } else {
        Rational ratio(src.c6, dst.c6);
        Integer num = numerator(ratio), den = denominator(ratio);
        Integer den5 = den * den * den * den * den;
        u = Rational(integer_nth_root(num * den5, 6), den);
    }
    if (u < 0) u = -u;
    Rational u2 = u * u, u3 = u2 * u;
    Rational s = (u * dst.a1 - src.a1) / 2;
    Rational r = (u2 * dst.a2 - src.a2 + s * src.a1 + s * s) / 3;
    Rational t = (u3 * dst.a3 - src.a3 - r * src.a1) / 2;
    return {u, r, s, t};
}

}  // namespace detail

/// Reduce a nonsingular plane cubic with a rational nonsingular point to an
/// integral Weierstrass model, returning the model and the birational map.
inline CubicReduction cubic_to_weierstrass(const PlaneCubic& F, const ProjectivePoint& P) {
    if (cubic_eval(F, P.X, P.Y, P.Z) != 0)
        throw DomainError("cubic_to_weierstrass: point not on the cubic");
    {
        auto g = cubic_gradient(F, P.X, P.Y, P.Z);
        if (g[0] == 0 && g[1] == 0 && g[2] == 0)
            throw PointAtSingularityError("cubic_to_weierstrass: base point is singular");
    }

    // move P to (0:0:1) by an invertible integer matrix with P as third column
    std::array<std::array<Rational, 3>, 3> M{};
    {
        std::array<Integer, 3> p = {P.X, P.Y, P.Z};
        int skip = p[0] != 0 ? 0 : (p[1] != 0 ? 1 : 2);
        int cols[2], n = 0;
        for (int i = 0; i < 3 && n < 2; ++i)
            if (i != skip) cols[n++] = i;
        for (int i = 0; i < 3; ++i) {
            M[i][0] = Rational(i == cols[0] ? 1 : 0);
            M[i][1] = Rational(i == cols[1] ? 1 : 0);
            M[i][2] = Rational(p[i]);
        }
    }
    detail::TriPoly poly = detail::poly_substitute(detail::cubic_to_poly(F), M);

    // matrices compose on the left of the chain; track the inverse chain
    // (cubic coords -> normalized coords) by accumulating inverses
    // of the simple steps. M^{-1} is applied first.
    std::array<std::array<Rational, 3>, 3> inv{};
    {
        // invert M directly (it is a permuted triangular matrix)
        // Solve M * x = e_j for each j by Cramer; M is 3x3 over Q.
        auto det3 = [](const std::array<std::array<Rational, 3>, 3>& A) {
            return A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                   A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                   A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
        };
        Rational D = det3(M);
        if (D == 0) throw Error("cubic_to_weierstrass: singular coordinate move");
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                std::array<std::array<Rational, 3>, 3> C = M;
                for (int k = 0; k < 3; ++k) C[k][i] = Rational(k == j ? 1 : 0);
                inv[i][j] = det3(C) / D;
            }
    }

    std::string steps = "move base point to origin";

    // affine parts at the origin
    auto f1x = [&] { return detail::poly_coeff(poly, 1, 0, 2); };
    auto f1y = [&] { return detail::poly_coeff(poly, 0, 1, 2); };
    if (detail::poly_coeff(poly, 0, 0, 3) != 0)
        throw Error("cubic_to_weierstrass: base point not at origin");
    if (f1x() == 0 && f1y() == 0)
        throw PointAtSingularityError("cubic_to_weierstrass: base point is singular");

    auto compose_left = [&](const std::array<std::array<Rational, 3>, 3>& Tinv,
                            const std::array<std::array<Rational, 3>, 3>& T) {
        poly = detail::poly_substitute(poly, T);
        std::array<std::array<Rational, 3>, 3> out{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) out[i][j] += Tinv[i][k] * inv[k][j];
        inv = out;
    };

    // normalize the tangent at the origin to the line y = 0
    if (f1x() != 0) {
        if (f1y() == 0) {
            std::array<std::array<Rational, 3>, 3> swap{};
            swap[0][1] = 1;
            swap[1][0] = 1;
            swap[2][2] = 1;
            compose_left(swap, swap);
            steps += "; swap x and y";
        } else {
            Rational m = f1x() / f1y();
            std::array<std::array<Rational, 3>, 3> T{}, Tinv{};
            // old (x, y) = (x', y' - m x')
            T[0][0] = 1;
            T[1][0] = -m;
            T[1][1] = 1;
            T[2][2] = 1;
            Tinv[0][0] = 1;
            Tinv[1][0] = m;
            Tinv[1][1] = 1;
            Tinv[2][2] = 1;
            compose_left(Tinv, T);
            steps += "; shear tangent to y = 0";
        }
    }

    BirationalMap map;
    map.c = f1y();
    map.f2xy = detail::poly_coeff(poly, 1, 1, 1);
    map.f2yy = detail::poly_coeff(poly, 0, 2, 1);
    map.f3xxx = detail::poly_coeff(poly, 3, 0, 0);
    map.f3xxy = detail::poly_coeff(poly, 2, 1, 0);
    map.f3xyy = detail::poly_coeff(poly, 1, 2, 0);
    map.f3yyy = detail::poly_coeff(poly, 0, 3, 0);
    Rational e = detail::poly_coeff(poly, 2, 0, 1);
    map.e = e;
    map.to_normalized = inv;

    std::array<Rational, 5> model;  // a1, a2, a3, a4, a6 of the raw model
    if (e != 0) {
        // projection from the origin: v^2 = g(t), g(0) = e^2
        map.quartic_path = true;
        const Rational &c = map.c, &f2xy = map.f2xy, &f2yy = map.f2yy;
        map.quartic[0] = e * e;
        map.quartic[1] = 2 * e * f2xy - 4 * c * map.f3xxx;
        map.quartic[2] = f2xy * f2xy + 2 * e * f2yy - 4 * c * map.f3xxy;
        map.quartic[3] = 2 * f2xy * f2yy - 4 * c * map.f3xyy;
        map.quartic[4] = f2yy * f2yy - 4 * c * map.f3yyy;
        const Rational &ga = map.quartic[4], &gb = map.quartic[3], &gc = map.quartic[2],
                       &gd = map.quartic[1];
        model[0] = gd / e;                          // a1
        model[1] = gc - gd * gd / (4 * e * e);      // a2
        model[2] = 2 * e * gb;                      // a3
        model[3] = -4 * e * e * ga;                 // a4
        model[4] = model[1] * model[3];             // a6
        steps += "; project from base point (t = y/x); quartic to cubic";
    } else {
        if (map.f3xxx == 0)
            throw SingularCubicError("cubic_to_weierstrass: tangent line lies on the cubic");
        // flex: send the base point to infinity by swapping y and z
        const Rational &c = map.c, d3 = map.f3xxx;
        map.flex_scale = d3 / c;
        model[0] = -map.f2xy / c;
        model[1] = -map.f3xxy / c;
        model[2] = map.f2yy * d3 / (c * c);
        model[3] = map.f3xyy * d3 / (c * c);
        model[4] = -map.f3yyy * d3 * d3 / (c * c * c);
        steps += "; flex to infinity (swap y, z)";
    }

    // clear denominators: a_i -> lambda^i a_i
    Integer lambda = 1;
    for (auto& a : model) lambda = boost::multiprecision::lcm(lambda, denominator(a));
    Rational L(lambda);
    Rational scaled[5] = {model[0] * L, model[1] * L * L, model[2] * L * L * L,
                          model[3] * L * L * L * L, model[4] * L * L * L * L * L * L};
    WeierstrassCurve raw;
    try {
        raw = compute_invariants(numerator(scaled[0]), numerator(scaled[1]), numerator(scaled[2]),
                                 numerator(scaled[3]), numerator(scaled[4]));
    } catch (const SingularCurveError&) {
        throw SingularCubicError("cubic_to_weierstrass: the cubic is singular");
    }
    // the rational model maps to raw by (u = 1/lambda, 0, 0, 0)
    map.u = Rational(1, lambda);
    steps += "; scale to an integral model";
    map.description = steps;

    return {raw, map};
}

/// Tame the coefficients of a model: strip u-power content at small primes
/// (p >= 5 via invariant valuations, 2 and 3 via the local algorithm) and
/// put the result in reduced form. When iso is supplied, it receives the
/// (u, r, s, t) with shrunk = transform(E, u, r, s, t).
inline WeierstrassCurve shrink_model(const WeierstrassCurve& E,
                                     std::array<Rational, 4>* iso = nullptr) {
    // u-content at p >= 5 from trial division of the invariant gcd
    Integer u = 1;
    {
        static const PrimeTable& small = detail::trial_division_table();
        for (std::uint64_t p : small.primes()) {
            if (p < 5) continue;
            Integer P(p);
            if (E.c4 != 0 && E.c4 % P != 0) continue;
            if (E.c6 != 0 && E.c6 % P != 0) continue;
            if (E.disc % P != 0) continue;
            detail::MinimalInvariants m = detail::minimal_invariants_at(E, P);
            for (int i = 0; i < m.scale_exponent; ++i) u *= P;
            if (P * P > abs(E.disc)) break;
        }
    }
    WeierstrassCurve cur = E;
    if (u > 1) {
        // rebuild from the scaled-down invariants via the standard model,
        // then strip the 6^4/6^6 that the standard model introduces
        Integer u2 = u * u, u4 = u2 * u2, u6 = u4 * u2;
        WeierstrassCurve std_model =
            compute_invariants(0, 0, 0, -27 * (E.c4 / u4), -54 * (E.c6 / u6));
        cur = std_model;
    }
    cur = detail::tate_small_prime(cur, 2).minimal_model;
    cur = detail::tate_small_prime(cur, 3).minimal_model;
    cur = reduce_model(cur);
    if (iso) *iso = detail::isomorphism_data(E, cur);
    return cur;
}

}  // namespace ecrank
