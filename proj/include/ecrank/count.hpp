#pragma once

// Point counting over F_p. Good odd primes use the character sum
// a_p = -sum_x chi(f(x)) on a completed-square model, with the cubic
// evaluated by finite differences and chi read from a per-prime residue
// table that is shared across a batch of curves. p = 2 enumerates the
// four affine candidates directly.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecrank/arith.hpp"
#include "ecrank/curve.hpp"
#include "ecrank/errors.hpp"
#include "ecrank/local.hpp"

namespace ecrank {

/// Per-curve a_p data for all primes below a bound, with reduction types
/// at the bad primes.
struct ApRecord {
    std::string curve_id;
    std::uint64_t bound = 0;
    std::vector<std::int32_t> ap;          // one entry per prime < bound
    std::vector<ReductionType> reduction;  // parallel to ap

    std::size_t size() const { return ap.size(); }
};

/// chi[v] = Legendre symbol (v/p) for 0 <= v < p, built in O(p).
inline std::vector<std::int8_t> quadratic_residue_table(std::uint64_t p) {
    std::vector<std::int8_t> chi(p, -1);
    chi[0] = 0;
    for (std::uint64_t i = 1; i <= (p - 1) / 2; ++i) chi[i * i % p] = 1;
    return chi;
}

namespace detail {

/// Character sum for y^2 = x^3 + Ax + B over F_p (odd p, table supplied).
inline std::int64_t char_sum_cubic(std::uint64_t A, std::uint64_t B, std::uint64_t p,
                                   const std::int8_t* chi) {
    // finite differences: f(x+1)-f(x) = 3x^2+3x+1+A, second difference 6x+6
    std::uint64_t f = B % p;
    std::uint64_t d1 = (1 + A) % p;
    const std::uint64_t six = 6 % p;
    std::uint64_t d2 = six;
    std::int64_t s = 0;
    for (std::uint64_t x = 0; x < p; ++x) {
        s += chi[f];
        f += d1;
        if (f >= p) f -= p;
        d1 += d2;
        if (d1 >= p) d1 -= p;
        d2 += six;
        if (d2 >= p) d2 -= p;
    }
    return s;
}

/// #E(F_2) by direct enumeration of the affine candidates.
inline int count_points_mod2(const WeierstrassCurve& E) {
    int affine = 0;
    for (int x = 0; x <= 1; ++x) {
        for (int y = 0; y <= 1; ++y) {
            Integer v = Integer(y) * y + E.a1 * x * y + E.a3 * y - Integer(x) * x * x -
                        E.a2 * x * x - E.a4 * x - E.a6;
            if (v % 2 == 0) ++affine;
        }
    }
    return affine + 1;
}

/// a_3 at good reduction, from the completed square
/// (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6.
inline int ap_good_mod3(const WeierstrassCurve& model) {
    static const int chi3[3] = {0, 1, -1};
    const std::uint64_t b2 = mod_u64(model.b2, 3);
    const std::uint64_t b4 = mod_u64(model.b4, 3);
    const std::uint64_t b6 = mod_u64(model.b6, 3);
    std::int64_t s = 0;
    for (std::uint64_t x = 0; x < 3; ++x) {
        std::uint64_t g = (4 * x * x % 3 * x + b2 * x % 3 * x + 2 * b4 * x + b6) % 3;
        s += chi3[g];
    }
    return static_cast<int>(-s);
}

}  // namespace detail

/// a_p at a prime of good reduction (after p-minimalization); throws
/// BadReductionPrimeError when the p-minimal model is bad at p.
inline int ap_good_prime(const WeierstrassCurve& E, std::uint64_t p) {
    const bool divides = E.disc % Integer(p) == 0;
    if (p == 2 || p == 3) {
        WeierstrassCurve model = E;
        if (divides) {
            LocalData d = local_data(E, p);
            if (d.type != ReductionType::Good)
                throw BadReductionPrimeError("ap_good_prime: bad reduction at " +
                                             std::to_string(p));
            model = d.minimal_model;
        }
        if (p == 2) return 3 - detail::count_points_mod2(model);
        return detail::ap_good_mod3(model);
    }
    Integer c4 = E.c4, c6 = E.c6;
    if (divides) {
        detail::MinimalInvariants m = detail::minimal_invariants_at(E, Integer(p));
        if (m.disc % Integer(p) == 0)
            throw BadReductionPrimeError("ap_good_prime: bad reduction at " + std::to_string(p));
        c4 = m.c4;
        c6 = m.c6;
    }
    std::vector<std::int8_t> chi = quadratic_residue_table(p);
    std::uint64_t A = mod_u64(-27 * c4, p);
    std::uint64_t B = mod_u64(-54 * c6, p);
    return static_cast<int>(-detail::char_sum_cubic(A, B, p, chi.data()));
}

/// One slot of a batch result: either a record or an error message.
struct ApBatchEntry {
    std::optional<ApRecord> record;
    std::string error;
};

/// a_p for every prime in the table across a batch of curves. Processing is
/// prime-major so that one residue table at a time is built and shared by
/// the whole batch; per-curve failures land in their slot without aborting
/// the rest, and the output ordering matches the input.
inline std::vector<ApBatchEntry> ap_batch(const std::vector<WeierstrassCurve>& curves,
                                          const PrimeTable& table,
                                          const std::vector<std::string>& ids = {}) {
    const auto& primes = table.primes();
    const std::size_t nc = curves.size();
    std::vector<ApBatchEntry> out(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        ApRecord rec;
        rec.curve_id = c < ids.size() ? ids[c] : std::to_string(c);
        rec.bound = table.bound();
        rec.ap.assign(primes.size(), 0);
        rec.reduction.assign(primes.size(), ReductionType::Good);
        out[c].record = std::move(rec);
    }

    std::vector<std::int8_t> chi;
    for (std::size_t i = 0; i < primes.size(); ++i) {
        const std::uint64_t p = primes[i];
        const std::int8_t* chip = nullptr;
        if (p >= 5) {
            chi = quadratic_residue_table(p);
            chip = chi.data();
        }
#pragma omp parallel for schedule(static)
        for (std::size_t c = 0; c < nc; ++c) {
            if (!out[c].record) continue;
            ApRecord& rec = *out[c].record;
            const WeierstrassCurve& E = curves[c];
            try {
                if (E.disc % Integer(p) == 0) {
                    LocalData d = local_data(E, p);
                    if (d.type != ReductionType::Good) {
                        rec.reduction[i] = d.type;
                        rec.ap[i] = ap_for_type(d.type);
                    } else if (p == 2) {
                        rec.ap[i] = 3 - detail::count_points_mod2(d.minimal_model);
                    } else if (p == 3) {
                        rec.ap[i] = detail::ap_good_mod3(d.minimal_model);
                    } else {
                        detail::MinimalInvariants m = detail::minimal_invariants_at(E, Integer(p));
                        std::uint64_t A = mod_u64(-27 * m.c4, p);
                        std::uint64_t B = mod_u64(-54 * m.c6, p);
                        rec.ap[i] = static_cast<int>(-detail::char_sum_cubic(A, B, p, chip));
                    }
                } else if (p == 2) {
                    rec.ap[i] = 3 - detail::count_points_mod2(E);
                } else if (p == 3) {
                    rec.ap[i] = detail::ap_good_mod3(E);
                } else {
                    std::uint64_t A = mod_u64(-27 * E.c4, p);
                    std::uint64_t B = mod_u64(-54 * E.c6, p);
                    rec.ap[i] = static_cast<int>(-detail::char_sum_cubic(A, B, p, chip));
                }
            } catch (const std::exception& e) {
                out[c].record.reset();
                out[c].error = e.what();
            }
        }
    }
    return out;
}

/// Single-curve record over all primes in the table.
inline ApRecord ap_record(const WeierstrassCurve& E, const PrimeTable& table,
                          const std::string& id = "") {
    std::vector<ApBatchEntry> got = ap_batch({E}, table, {id});
    if (!got[0].record) throw Error("ap_record: " + got[0].error);
    return *got[0].record;
}

inline bool hasse_bound_ok(std::int64_t ap, std::uint64_t p) {
    return static_cast<double>(ap) * ap <= 4.0 * static_cast<double>(p);
}

}  // namespace ecrank
