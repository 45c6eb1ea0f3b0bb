#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ecrank/count.hpp"
#include "ecrank/curve.hpp"
#include "ecrank/local.hpp"
#include "ecrank/rng.hpp"
#include "ecrank/sums.hpp"
#include "oracles.hpp"

using namespace ecrank;

namespace {

ApRecord make_record(const PrimeTable& table, const std::vector<int>& ap,
                     const std::vector<ReductionType>& red = {}) {
    ApRecord rec;
    rec.curve_id = "synthetic";
    rec.bound = table.bound();
    rec.ap.assign(ap.begin(), ap.end());
    rec.reduction = red.empty() ? std::vector<ReductionType>(ap.size(), ReductionType::Good) : red;
    return rec;
}

ApRecord random_record(const PrimeTable& table, Rng& rng, int bad_every = 10) {
    std::vector<int> ap;
    std::vector<ReductionType> red;
    for (std::uint64_t p : table.primes()) {
        if (bad_every > 0 && rng.below(bad_every) == 0) {
            ReductionType t = static_cast<ReductionType>(1 + rng.below(3));
            red.push_back(t);
            ap.push_back(ap_for_type(t));
        } else {
            red.push_back(ReductionType::Good);
            int bound = static_cast<int>(2.0 * std::sqrt(static_cast<double>(p)));
            ap.push_back(static_cast<int>(rng.range(-bound, bound)));
        }
    }
    ApRecord rec = make_record(table, ap, red);
    return rec;
}

}  // namespace

TEST_CASE("cn_table recurrence") {
    PrimeTable t(30);
    std::vector<int> ap(t.count(), 0);
    ap[t.index(5) - 1] = -3;
    ApRecord rec = make_record(t, ap);
    CnTable cn = cn_table(rec, t, 29);

    for (const CnEntry& e : cn.entries) {
        if (e.p == 5 && e.m == 1) REQUIRE(e.cn == -3.0);
        if (e.p == 5 && e.m == 2) REQUIRE(e.cn == -1.0);  // 9 - 10
        if (e.p == 2 && e.m == 2) REQUIRE(e.cn == -4.0);  // 0 - 2p
        REQUIRE(e.lambda == Catch::Approx(std::log(static_cast<double>(e.p))));
    }

    // |c_{p^m}| <= 2 p^{m/2} at good primes
    Rng rng(5);
    PrimeTable t2(200);
    for (int i = 0; i < 50; ++i) {
        ApRecord r = random_record(t2, rng);
        CnTable c = cn_table(r, t2, 199);
        for (const CnEntry& e : c.entries) {
            std::size_t idx = t2.index(e.p) - 1;
            if (r.reduction[idx] != ReductionType::Good) continue;
            REQUIRE(std::fabs(e.cn) <=
                    2.0 * std::pow(static_cast<double>(e.p), e.m / 2.0) + 1e-9);
        }
    }

    // bad-prime entries are a_p^m
    std::vector<ReductionType> red(t.count(), ReductionType::Good);
    red[0] = ReductionType::NonsplitMultiplicative;
    std::vector<int> ap2(t.count(), 0);
    ap2[0] = -1;
    CnTable cnb = cn_table(make_record(t, ap2, red), t, 29);
    for (const CnEntry& e : cnb.entries) {
        if (e.p == 2) REQUIRE(e.cn == (e.m % 2 == 0 ? 1.0 : -1.0));
    }
}

TEST_CASE("s0") {
    PrimeTable t(4);
    REQUIRE(s0(make_record(t, {0, 0}), t, 4) == 0.0);

    // primes {2,3}, a2=-2, a3=-3, B=4: (1/log4)(-log2 - log3)
    ApRecord rec = make_record(t, {-2, -3});
    double expect = (-std::log(2.0) - std::log(3.0)) / std::log(4.0);
    REQUIRE(expect == Catch::Approx(-1.2925).margin(5e-5));
    REQUIRE(s0(rec, t, 4) == Catch::Approx(expect).epsilon(1e-14));

    // linearity: doubling the a_p doubles the sum
    ApRecord dbl = make_record(t, {-4, -6});
    REQUIRE(s0(dbl, t, 4) == Catch::Approx(2.0 * s0(rec, t, 4)).epsilon(1e-14));

    REQUIRE_THROWS_AS(s0(rec, t, 5), InsufficientApDataError);
}

TEST_CASE("s1 and s2") {
    PrimeTable t(12);
    ApRecord zero = make_record(t, std::vector<int>(t.count(), 0));
    // all c_n with n = p are zero, but c_{p^2} = -2p contributes
    REQUIRE(s1(zero, t, 11) == Catch::Approx(s0(zero, t, 11) -
                                             detail::cn_correction(cn_table(zero, t, 11), 11)));

    // definitional identity S1 - S0 = -correction on random records
    Rng rng(9);
    PrimeTable t2(100);
    for (int i = 0; i < 20; ++i) {
        ApRecord r = random_record(t2, rng);
        double corr = detail::cn_correction(cn_table(r, t2, 97), 97);
        REQUIRE(s1(r, t2, 97) == Catch::Approx(s0(r, t2, 97) - corr).margin(1e-13));
    }

    // single prime power n = 2 <= B = 2 with c_2 = -2: S2 = -1 + 1 = 0
    PrimeTable t3(3);
    ApRecord r2 = make_record(t3, {-2});
    REQUIRE(s2(r2, t3, 2) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("s3") {
    // all a_p = 0, B = 4: 2log2/3 + 2log3/4
    PrimeTable t(4);
    ApRecord zero = make_record(t, {0, 0});
    double expect = 2.0 * std::log(2.0) / 3.0 + 2.0 * std::log(3.0) / 4.0;
    REQUIRE(expect == Catch::Approx(1.0114).margin(5e-5));
    REQUIRE(s3(zero, t, 4) == Catch::Approx(expect).epsilon(1e-14));

    // single good prime p = 5 with a_5 = -3: (5/9) log 5
    PrimeTable t5(6);
    std::vector<ReductionType> red = {ReductionType::Additive, ReductionType::Additive,
                                      ReductionType::Good};
    ApRecord r5 = make_record(t5, {0, 0, -3}, red);
    REQUIRE(s3(r5, t5, 6) == Catch::Approx(5.0 / 9.0 * std::log(5.0)).epsilon(1e-14));

    // a_p = 2 contributes nothing
    ApRecord r2 = make_record(t5, {0, 0, 2}, red);
    REQUIRE(s3(r2, t5, 6) == 0.0);
}

TEST_CASE("s4") {
    PrimeTable t(4);
    REQUIRE(s4(make_record(t, {0, 0}), t, 4) == 0.0);

    ApRecord rec = make_record(t, {-2, -3});
    double expect = (2.0 * std::log(2.0) + 3.0 * std::log(3.0)) / 4.0;
    REQUIRE(expect == Catch::Approx(1.1705).margin(5e-5));
    REQUIRE(s4(rec, t, 4) == Catch::Approx(expect).epsilon(1e-14));

    ApRecord neg = make_record(t, {2, 3});
    REQUIRE(s4(neg, t, 4) == Catch::Approx(-s4(rec, t, 4)).epsilon(1e-14));
}

TEST_CASE("s5 and the Euler product identity") {
    PrimeTable t(6);
    ApRecord zero = make_record(t, {0, 0, 0});
    double expect = std::log(3.0 / 2.0) + std::log(4.0 / 3.0) + std::log(6.0 / 5.0);
    REQUIRE(s5(zero, t, 6) == Catch::Approx(expect).epsilon(1e-14));

    // a single split-multiplicative p = 2 contributes log(3/4)
    PrimeTable t3(3);
    ApRecord split = make_record(t3, {1}, {ReductionType::SplitMultiplicative});
    REQUIRE(s5(split, t3, 3) == Catch::Approx(std::log(0.75)).epsilon(1e-14));
    REQUIRE(s5_tilde(split, t3, 3) == 0.0);

    // exp(-s5_tilde) equals the partial Euler product at s = 1
    Rng rng(13);
    PrimeTable big(1000);
    for (int i = 0; i < 100; ++i) {
        ApRecord r = random_record(big, rng);
        double lhs = std::exp(-s5_tilde(r, big, 1000));
        double rhs = partial_euler_product(r, big, 1000, 1.0);
        REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-12));
    }

    // empty prime set: product is 1
    PrimeTable t2(3);
    ApRecord one = make_record(t2, {0});
    REQUIRE(partial_euler_product(one, t2, 2, 1.0) == 1.0);

    // all a_p = 0 at s = 1: prod (1 + 1/p)^{-1}
    REQUIRE(partial_euler_product(zero, t, 6, 1.0) ==
            Catch::Approx(1.0 / (1.5 * 4.0 / 3.0 * 1.2)).epsilon(1e-13));
}

TEST_CASE("archimedean S6 term against the dilogarithm closed form") {
    for (double delta : {0.1, 0.25, 0.5, 1.0, 2.0, 3.0}) {
        double quad = detail::s6_archimedean(delta, {});
        double closed = oracles::s6_archimedean_closed_form(delta);
        INFO("delta = " << delta);
        REQUIRE(quad == Catch::Approx(closed).margin(2e-7));
    }
}

TEST_CASE("archimedean S6 term is stable under refinement") {
    for (double delta : {0.5, 1.0}) {
        double base = detail::s6_archimedean(delta, {});
        QuadratureControl finer;
        finer.refine = 4;  // 16x finer initial grid
        REQUIRE(std::fabs(detail::s6_archimedean(delta, finer) - base) < 1e-9);
    }
}

TEST_CASE("s6 structure and coverage") {
    // delta = 0.1: exp(2 pi / 10) < 2, so the prime sum is empty
    WeierstrassCurve e37 = compute_invariants(0, 0, 1, -1, 0);
    PrimeTable t(1000);
    ApRecord rec = ap_record(e37, t);
    double got = s6(rec, t, Integer(37), 0.1);
    double expect = std::log(37.0) / (0.2 * kPi) - std::log(2.0 * kPi) / (0.1 * kPi) +
                    oracles::s6_archimedean_closed_form(0.1);
    REQUIRE(got == Catch::Approx(expect).margin(2e-7));

    // delta = 1.0 needs p < 536 and computes at B = 1000
    REQUIRE_NOTHROW(s6(rec, t, Integer(37), 1.0));
    // delta = 2.0 needs p < 286751 and must refuse
    REQUIRE_THROWS_AS(s6(rec, t, Integer(37), 2.0), InsufficientApDataError);

    REQUIRE_THROWS_AS(s6(rec, t, Integer(37), 3.5), DeltaOutOfRangeError);
    REQUIRE_THROWS_AS(s6(rec, t, Integer(37), 0.0), DeltaOutOfRangeError);

    // halving the quadrature step moves the value by less than 1e-8
    double a = s6(rec, t, Integer(37), 1.0, QuadratureControl{1e-10, 0});
    double b = s6(rec, t, Integer(37), 1.0, QuadratureControl{1e-10, 1});
    REQUIRE(std::fabs(a - b) < 1e-8);
}

TEST_CASE("rank separation of the canonical curves at B = 10^4") {
    std::vector<std::array<Integer, 5>> models = {
        {0, -1, 1, -10, -20},  // 11a1, rank 0
        {0, 0, 1, -1, 0},      // 37a1, rank 1
        {0, 1, 1, -2, 0},      // 389a1, rank 2
        {0, 0, 1, -7, 6},      // 5077a1, rank 3
    };
    PrimeTable t(10000);
    std::vector<double> s0v, s3v;
    for (auto& m : models) {
        WeierstrassCurve E = curve_from_list(m);
        ApRecord rec = ap_record(E, t);
        s0v.push_back(s0(rec, t, 10000));
        s3v.push_back(s3(rec, t, 10000));
    }
    for (int i = 0; i < 3; ++i) {
        REQUIRE(s0v[i] > s0v[i + 1]);  // S0 decreases with rank
        REQUIRE(s3v[i] < s3v[i + 1]);  // S3 increases with rank
    }
}

TEST_CASE("sum_vector aggregates the components") {
    WeierstrassCurve e389 = compute_invariants(0, 1, 1, -2, 0);
    PrimeTable t(10000);
    ApRecord rec = ap_record(e389, t);
    SumVector v = sum_vector(rec, t, Integer(389), 10000, 1.4);
    REQUIRE(v.s0 == s0(rec, t, 10000));
    REQUIRE(v.s3 == s3(rec, t, 10000));
    REQUIRE(v.s6.has_value());  // exp(2 pi 1.4) ~ 6636 < 10^4
    REQUIRE(*v.s6 == Catch::Approx(s6(rec, t, Integer(389), 1.4)));

    SumVector w = sum_vector(rec, t, Integer(389), 10000, 1.5);
    REQUIRE_FALSE(w.s6.has_value());  // exp(3 pi) ~ 12392 > 10^4
}
