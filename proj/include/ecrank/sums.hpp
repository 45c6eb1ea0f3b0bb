#pragma once

// The Mestre-Nagao sums S0..S6, the c_n coefficients on prime powers, and
// the partial Euler product. Sums run over primes p < B; the n <= B sums
// run over prime powers whose base prime is < B. All accumulation is
// compensated (Kahan).
//
// S6 is the explicit-formula bound: a conductor term, a sum over prime
// powers p^k <= exp(2 pi Delta) weighted by a triangle window, and the
// archimedean integral (1/pi) Re int psi(1+it) (sin(Dpi t)/(Dpi t))^2 dt.
// The integral is evaluated by adaptive Simpson on [0, T] plus an analytic
// tail: the non-oscillatory part in log coordinates and the oscillatory
// part by integration by parts against the asymptotic expansion of psi.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ecrank/arith.hpp"
#include "ecrank/count.hpp"
#include "ecrank/digamma.hpp"
#include "ecrank/errors.hpp"

namespace ecrank {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Compensated accumulator.
class KahanSum {
public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0, c_ = 0.0;
};

namespace detail {

inline void require_coverage(const ApRecord& rec, const PrimeTable& table, std::uint64_t B) {
    if (table.bound() != rec.bound)
        throw InsufficientApDataError("sums: prime table does not match the ap record");
    if (B > rec.bound)
        throw InsufficientApDataError("sums: record bound " + std::to_string(rec.bound) +
                                      " below requested B " + std::to_string(B));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// c_n table
// ---------------------------------------------------------------------------

struct CnEntry {
    std::uint64_t n;       // p^m
    std::uint64_t p;
    unsigned m;
    double cn;
    double lambda;         // log p
};

struct CnTable {
    std::uint64_t bound = 0;  // entries cover prime powers n <= bound
    std::vector<CnEntry> entries;
};

/// c_{p^m} for all prime powers <= B: the Frobenius power sums at good
/// primes (c_{p^m} = c_{p^{m-1}} a_p - p c_{p^{m-2}}, c_1 = 2) and a_p^m at
/// bad primes.
inline CnTable cn_table(const ApRecord& rec, const PrimeTable& table, std::uint64_t B) {
    detail::require_coverage(rec, table, B);
    if (B == rec.bound && is_probable_prime(Integer(B)))
        throw InsufficientApDataError("cn_table: the n <= B sums need a_p at p = B");
    CnTable out;
    out.bound = B;
    const auto& primes = table.primes();
    for (std::size_t i = 0; i < primes.size() && primes[i] <= B; ++i) {
        std::uint64_t p = primes[i];
        double lambda = std::log(static_cast<double>(p));
        bool good = rec.reduction[i] == ReductionType::Good;
        double ap = rec.ap[i];
        double prev2 = 2.0, prev1 = ap;  // c_{p^0}, c_{p^1}
        std::uint64_t n = p;
        unsigned m = 1;
        while (n <= B) {
            double cn = good ? prev1 : std::pow(ap, static_cast<double>(m));
            out.entries.push_back({n, p, m, cn, lambda});
            if (n > B / p) break;
            n *= p;
            ++m;
            double next = prev1 * ap - static_cast<double>(p) * prev2;
            prev2 = prev1;
            prev1 = next;
        }
    }
    std::sort(out.entries.begin(), out.entries.end(),
              [](const CnEntry& a, const CnEntry& b) { return a.n < b.n; });
    return out;
}

// ---------------------------------------------------------------------------
// S0..S5 and the Euler product
// ---------------------------------------------------------------------------

inline double s0(const ApRecord& rec, const PrimeTable& table, std::uint64_t B) {
    detail::require_coverage(rec, table, B);
    if (B < 3) throw InsufficientApDataError("s0: B must be >= 3");
    KahanSum acc;
    const auto& primes = table.primes();
    for (std::size_t i = 0; i < primes.size() && primes[i] < B; ++i) {
        if (rec.reduction[i] != ReductionType::Good) continue;
        double p = static_cast<double>(primes[i]);
        acc.add(rec.ap[i] * std::log(p) / p);
    }
    return acc.value() / std::log(static_cast<double>(B));
}

namespace detail {

/// (1/(B log B)) sum_{n<=B} c_n Lambda(n)
inline double cn_correction(const CnTable& cn, std::uint64_t B) {
    KahanSum acc;
    for (const CnEntry& e : cn.entries) acc.add(e.cn * e.lambda);
    return acc.value() / (static_cast<double>(B) * std::log(static_cast<double>(B)));
}

}  // namespace detail

inline double s1(const ApRecord& rec, const PrimeTable& table, std::uint64_t B) {
    CnTable cn = cn_table(rec, table, B);
    return s0(rec, table, B) - detail::cn_correction(cn, B);
}

inline double s2(const ApRecord& rec, const PrimeTable& table, std::uint64_t B) {
    CnTable cn = cn_table(rec, table, B);
    KahanSum acc;
    for (const CnEntry& e : cn.entries) acc.add(e.cn * e.lambda / static_cast<double>(e.n));
    return acc.value() / std::log(static_cast<double>(B)) - detail::cn_correction(cn, B);
}

inline double s3(const ApRecord& rec, const PrimeTable& table, std::uint64_t B) {
    detail::require_coverage(rec, table, B);
    KahanSum acc;
    const auto& primes = table.primes();
    for (std::size_t i = 0; i < primes.size() && primes[i] < B; ++i) {
        if (rec.reduction[i] != ReductionType::Good) continue;
        double p = static_cast<double>(primes[i]);
        double ap = rec.ap[i];
        acc.add((-ap + 2.0) / (p + 1.0 - ap) * std::log(p));
    }
    return acc.value();
}

inline double s4(const ApRecord& rec, const PrimeTable& table, std::uint64_t B) {
    detail::require_coverage(rec, table, B);
    KahanSum acc;
    const auto& primes = table.primes();
    for (std::size_t i = 0; i < primes.size() && primes[i] < B; ++i) {
        if (rec.reduction[i] != ReductionType::Good) continue;
        acc.add(-rec.ap[i] * std::log(static_cast<double>(primes[i])));
    }
    return acc.value() / static_cast<double>(B);
}

/// Good-prime part: sum log((p + 1 - a_p)/p); exp(-s5_tilde) is the partial
/// Euler product at s = 1.
inline double s5_tilde(const ApRecord& rec, const PrimeTable& table, std::uint64_t B) {
    detail::require_coverage(rec, table, B);
    KahanSum acc;
    const auto& primes = table.primes();
    for (std::size_t i = 0; i < primes.size() && primes[i] < B; ++i) {
        if (rec.reduction[i] != ReductionType::Good) continue;
        double p = static_cast<double>(primes[i]);
        acc.add(std::log((p + 1.0 - rec.ap[i]) / p));
    }
    return acc.value();
}

inline double s5(const ApRecord& rec, const PrimeTable& table, std::uint64_t B) {
    detail::require_coverage(rec, table, B);
    KahanSum acc;
    const auto& primes = table.primes();
    for (std::size_t i = 0; i < primes.size() && primes[i] < B; ++i) {
        double p = static_cast<double>(primes[i]);
        if (rec.reduction[i] == ReductionType::Good) {
            acc.add(std::log((p + 1.0 - rec.ap[i]) / p));
        } else if (rec.reduction[i] == ReductionType::SplitMultiplicative) {
            acc.add(std::log(1.5 * (p - 1.0) / p));
        }
    }
    return acc.value();
}

inline double partial_euler_product(const ApRecord& rec, const PrimeTable& table, std::uint64_t B,
                                    double s) {
    detail::require_coverage(rec, table, B);
    if (!(s > 0.5)) throw DomainError("partial_euler_product: requires s > 1/2");
    KahanSum log_acc;
    const auto& primes = table.primes();
    for (std::size_t i = 0; i < primes.size() && primes[i] < B; ++i) {
        if (rec.reduction[i] != ReductionType::Good) continue;
        double p = static_cast<double>(primes[i]);
        double factor = 1.0 - rec.ap[i] * std::pow(p, -s) + std::pow(p, 1.0 - 2.0 * s);
        log_acc.add(-std::log(factor));
    }
    return std::exp(log_acc.value());
}

// ---------------------------------------------------------------------------
// S6
// ---------------------------------------------------------------------------

struct QuadratureControl {
    double abs_tol = 1e-10;
    int refine = 0;  // extra halvings of the initial panel grid
};

namespace detail {

inline double adaptive_simpson_panel(const std::function<double(double)>& f, double a, double b,
                                     double fa, double fm, double fb, double whole, double tol,
                                     int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double err = left + right - whole;
    if (depth <= 0 || std::fabs(err) < 15.0 * tol) return left + right + err / 15.0;
    return adaptive_simpson_panel(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_panel(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson with an initial uniform grid of n0 panels.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int n0) {
    if (n0 < 1) n0 = 1;
    double h = (b - a) / n0;
    KahanSum total;
    for (int i = 0; i < n0; ++i) {
        double x0 = a + i * h, x1 = a + (i + 1) * h;
        double xm = 0.5 * (x0 + x1);
        double f0 = f(x0), fm = f(xm), f1 = f(x1);
        double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total.add(adaptive_simpson_panel(f, x0, x1, f0, fm, f1, whole, tol / n0, 28));
    }
    return total.value();
}

/// Elementary asymptotic of Re psi(1+it) for large t, and its derivative.
inline double psi_asym(double t) {
    double u = 1.0 + t * t;
    return 0.5 * std::log(u) - 0.5 / u + (t * t - 1.0) / (12.0 * u * u);
}

inline double psi_asym_deriv(double t) {
    double u = 1.0 + t * t;
    return t / u + t / (u * u) + t * (3.0 - t * t) / (6.0 * u * u * u);
}

/// Archimedean term (1/pi) Re int_{-inf}^{inf} psi(1+it) sinc^2(a t) dt
/// with a = Delta*pi.
inline double s6_archimedean(double delta, const QuadratureControl& q) {
    const double a = delta * kPi;
    auto sinc2 = [&](double t) {
        if (t == 0.0) return 1.0;
        double s = std::sin(a * t) / (a * t);
        return s * s;
    };
    auto integrand = [&](double t) {
        return digamma_complex({1.0, t}).real() * sinc2(t);
    };

    // cut point: far enough out that the integration-by-parts remainder of
    // the oscillatory tail is below ~1e-10
    double T = 200.0 / delta;
    while (std::log(T) / (4.0 * a * a * a * a * T * T * T) > 1e-10) T *= 1.25;

    // [0, T]: resolve the oscillation (period pi/a) before adapting
    int n0 = static_cast<int>(std::ceil(8.0 * a * T / kPi));
    n0 = std::max(n0, 64) << q.refine;
    double head = (2.0 / kPi) * adaptive_simpson(integrand, 0.0, T, q.abs_tol, n0);

    // non-oscillatory tail int_T^inf Re psi(1+it)/(a t)^2 dt in log coordinates
    auto log_integrand = [&](double s) {
        double t = std::exp(s);
        return digamma_complex({1.0, t}).real() / (a * a * t);
    };
    double s_lo = std::log(T);
    double nonosc = adaptive_simpson(log_integrand, s_lo, s_lo + 45.0, q.abs_tol, 64 << q.refine);

    // oscillatory tail -int_T^inf g(t) cos(2at) dt by parts, g elementary
    auto g = [&](double t) { return psi_asym(t) / (a * a * t * t); };
    auto gp = [&](double t) {
        return psi_asym_deriv(t) / (a * a * t * t) - 2.0 * psi_asym(t) / (a * a * t * t * t);
    };
    double T2 = T;
    while (std::fabs(gp(T2)) / (2.0 * a) > 1e-12 * (2.0 * a) && T2 < 4e7) T2 *= 1.5;
    auto osc_inner = [&](double t) { return gp(t) * std::sin(2.0 * a * t); };
    int n_osc = static_cast<int>(std::ceil((T2 - T) / (kPi / (32.0 * a))));
    n_osc = std::max(64, n_osc) << q.refine;
    double inner = adaptive_simpson(osc_inner, T, T2, q.abs_tol, n_osc);
    double osc = -g(T) * std::sin(2.0 * a * T) / (2.0 * a) - inner / (2.0 * a);

    return head + (nonosc - osc) / kPi;
}

}  // namespace detail

/// Bober's explicit-formula rank bound S6(Delta). Requires a_p data for all
/// p <= exp(2 pi Delta) and the conductor.
inline double s6(const ApRecord& rec, const PrimeTable& table, const Integer& conductor_value,
                 double delta, const QuadratureControl& q = {}) {
    if (!(delta > 0.0) || delta > 3.0)
        throw DeltaOutOfRangeError("s6: delta must lie in (0, 3]");
    if (table.bound() != rec.bound)
        throw InsufficientApDataError("s6: prime table does not match the ap record");
    const double X = std::exp(2.0 * kPi * delta);
    if (static_cast<double>(rec.bound) <= X)
        throw InsufficientApDataError("s6: needs a_p for all p <= exp(2 pi delta) = " +
                                      std::to_string(X));
    const double dpi = delta * kPi;
    const double two_pi_delta = 2.0 * kPi * delta;

    KahanSum prime_sum;
    const auto& primes = table.primes();
    for (std::size_t i = 0; i < primes.size(); ++i) {
        double p = static_cast<double>(primes[i]);
        if (p > X) break;
        double logp = std::log(p);
        int kmax = static_cast<int>(std::floor(two_pi_delta / logp));
        bool good = rec.reduction[i] == ReductionType::Good;
        double ap = rec.ap[i];
        double prev2 = 2.0, prev1 = ap;
        double pk = 1.0;
        for (int k = 1; k <= kmax; ++k) {
            pk *= p;
            double cn = good ? prev1 : std::pow(ap, static_cast<double>(k));
            // c_{p^k}/p^k, i.e. the unit-normalized Frobenius power sum over
            // sqrt(p^k); the weight that makes the zero side sum to ~rank
            prime_sum.add(logp * cn / pk * (1.0 - k * logp / two_pi_delta));
            double next = prev1 * ap - p * prev2;
            prev2 = prev1;
            prev1 = next;
        }
    }

    double logN = std::log(static_cast<double>(conductor_value));
    return logN / (2.0 * dpi) - std::log(2.0 * kPi) / dpi - prime_sum.value() / dpi +
           detail::s6_archimedean(delta, q);
}

// ---------------------------------------------------------------------------
// Aggregate
// ---------------------------------------------------------------------------

struct SumVector {
    std::uint64_t bound = 0;
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0;
    double delta = 0;
    std::optional<double> s6;  // empty when prime coverage is insufficient
};

inline SumVector sum_vector(const ApRecord& rec, const PrimeTable& table,
                            const Integer& conductor_value, std::uint64_t B, double delta,
                            const QuadratureControl& q = {}) {
    SumVector v;
    v.bound = B;
    v.s0 = s0(rec, table, B);
    v.s1 = s1(rec, table, B);
    v.s2 = s2(rec, table, B);
    v.s3 = s3(rec, table, B);
    v.s4 = s4(rec, table, B);
    v.s5 = s5(rec, table, B);
    v.delta = delta;
    try {
        v.s6 = s6(rec, table, conductor_value, delta, q);
    } catch (const InsufficientApDataError&) {
        v.s6 = std::nullopt;
    }
    return v;
}

}  // namespace ecrank
