#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ecrank/dataset.hpp"
#include "ecrank/sums.hpp"
#include "oracles.hpp"

using namespace ecrank;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("gen_random_weierstrass") {
    REQUIRE(gen_random_weierstrass(100, 0, 7).empty());

    auto a = gen_random_weierstrass(1000, 50, 7);
    auto b = gen_random_weierstrass(1000, 50, 7);
    REQUIRE(a.size() == 50);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].a4 == b[i].a4);
        REQUIRE(a[i].a6 == b[i].a6);
        REQUIRE(a[i].conductor == b[i].conductor);
        WeierstrassCurve E = a[i].curve();  // nonsingular by contract
        REQUIRE(E.disc != 0);
        REQUIRE(a[i].conductor >= 1);
        REQUIRE((a[i].a1 == 0 || a[i].a1 == 1));
        REQUIRE((a[i].a2 >= -1 && a[i].a2 <= 1));
        REQUIRE((a[i].a3 == 0 || a[i].a3 == 1));
    }
}

TEST_CASE("generate_custom_dataset") {
    GenerateConfig cfg;
    cfg.random_count = 25;
    cfg.coeff_bound = 60;
    cfg.pencil_counts = {4, 3, 2, 0, 0, 0, 0};
    cfg.coord_bound = 6;
    cfg.seed = 11;

    GenerateResult res = generate_custom_dataset(cfg);
    REQUIRE(res.records.size() > 10);
    std::set<std::pair<Integer, Integer>> keys;
    bool saw_pencil = false;
    for (const CurveRecord& r : res.records) {
        WeierstrassCurve E = r.curve();
        REQUIRE(torsion_is_trivial(E));
        REQUIRE(r.conductor >= 1);
        auto key = std::make_pair(E.c4, E.c6);
        REQUIRE_FALSE(keys.count(key));
        keys.insert(key);
        saw_pencil = saw_pencil || r.source.rfind("pencil", 0) == 0;
    }
    REQUIRE(saw_pencil);

    // determinism
    GenerateResult res2 = generate_custom_dataset(cfg);
    REQUIRE(res2.records.size() == res.records.size());
    for (std::size_t i = 0; i < res.records.size(); ++i) {
        REQUIRE(res2.records[i].id == res.records[i].id);
        REQUIRE(res2.records[i].a6 == res.records[i].a6);
    }
}

TEST_CASE("curves.csv round trip and errors") {
    std::string path = temp_path("ecrank_test_curves.csv");

    std::vector<CurveRecord> recs;
    CurveRecord r;
    r.id = "37a1";
    r.a1 = 0; r.a2 = 0; r.a3 = 1; r.a4 = -1; r.a6 = 0;
    r.conductor = 37;
    r.rank_label = 1;
    recs.push_back(r);
    CurveRecord u = r;
    u.id = "unlabeled";
    u.rank_label = kRankUnset;
    recs.push_back(u);

    write_curves_csv(path, recs);
    auto back = ingest_csv(path);
    REQUIRE(back.size() == 2);
    REQUIRE(back[0].id == "37a1");
    REQUIRE(back[0].a4 == -1);
    REQUIRE(back[0].rank_label == 1);
    REQUIRE(back[1].rank_label == kRankUnset);
    // conductor cross-check against the conductor op
    REQUIRE(conductor(back[0].curve()) == back[0].conductor);

    // header-only file ingests to an empty list
    {
        std::ofstream out(path);
        out << kCurvesCsvHeader << "\n";
    }
    REQUIRE(ingest_csv(path).empty());

    // malformed integer reports the line number
    {
        std::ofstream out(path);
        out << kCurvesCsvHeader << "\n";
        out << "x1,0,0,1,-1,0,37,1\n";
        out << "x2,0,0,1,zz,0,37,1\n";
    }
    try {
        ingest_csv(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(std::string(e.what()).find(":3") != std::string::npos);
    }

    // singular curve rejected with ValidationError
    {
        std::ofstream out(path);
        out << kCurvesCsvHeader << "\n";
        out << "bad,0,0,0,0,0,11,0\n";
    }
    REQUIRE_THROWS_AS(ingest_csv(path), ValidationError);

    // optional isogeny-class dedup
    {
        std::ofstream out(path);
        out << kCurvesCsvHeader << ",isogeny_class\n";
        out << "11a1,0,-1,1,-10,-20,11,0,11a\n";
        out << "11a2,0,-1,1,-7820,-263580,11,0,11a\n";
        out << "11a3,0,-1,1,0,0,11,0,11a\n";
    }
    IngestOptions opt;
    opt.dedup_isogeny_class = true;
    REQUIRE(ingest_csv(path, opt).size() == 1);
    REQUIRE(ingest_csv(path).size() == 3);

    std::remove(path.c_str());
}

TEST_CASE("aps.bin round trip") {
    PrimeTable table(100);
    WeierstrassCurve e37 = compute_invariants(0, 0, 1, -1, 0);
    WeierstrassCurve e389 = compute_invariants(0, 1, 1, -2, 0);
    std::vector<ApRecord> recs = {ap_record(e37, table, "37a1"), ap_record(e389, table, "389a1")};

    std::string path = temp_path("ecrank_test_aps.bin");
    write_aps_bin(path, recs);
    std::string bytes1 = slurp(path);
    // rerun is byte-identical
    write_aps_bin(path, recs);
    REQUIRE(slurp(path) == bytes1);

    auto back = read_aps_bin(path);
    REQUIRE(back.size() == 2);
    REQUIRE(back[0].curve_id == "37a1");
    REQUIRE(back[0].bound == 100);
    REQUIRE(back[0].ap == recs[0].ap);
    REQUIRE(back[1].ap == recs[1].ap);
    for (std::size_t i = 0; i < back[0].reduction.size(); ++i)
        REQUIRE(back[0].reduction[i] == recs[0].reduction[i]);

    std::remove(path.c_str());
}

TEST_CASE("feature matrix") {
    PrimeTable table(1000);
    REQUIRE(table.count() == 168);

    CurveRecord rec;
    rec.id = "389a1";
    rec.a1 = 0; rec.a2 = 1; rec.a3 = 1; rec.a4 = -2; rec.a6 = 0;
    rec.conductor = 389;
    ApRecord aps = ap_record(rec.curve(), table, rec.id);

    FeatureMatrix m = build_feature_matrix(rec, aps, table, Integer(389));
    REQUIRE(m.cols == 168);
    // row 2 is exactly 1 when N = N_max
    for (std::size_t i = 0; i < m.cols; ++i) REQUIRE(m.at(1, i) == 1.0);
    // row 3 sweeps to exactly 1 with uniform steps of 2/pi(N)
    REQUIRE(m.at(2, m.cols - 1) == 1.0);
    REQUIRE(m.at(2, 0) == Catch::Approx(-1.0 + 2.0 / 168.0).epsilon(1e-15));
    double step = m.at(2, 1) - m.at(2, 0);
    for (std::size_t i = 1; i < m.cols; ++i)
        REQUIRE(m.at(2, i) - m.at(2, i - 1) == Catch::Approx(step).margin(1e-12));
    // row 1 within the Hasse band
    for (std::size_t i = 0; i < m.cols; ++i) {
        REQUIRE(m.at(0, i) >= -2.0);
        REQUIRE(m.at(0, i) <= 2.0);
    }

    REQUIRE_THROWS_AS(build_feature_matrix(rec, aps, table, Integer(100)),
                      ConductorExceedsMaxError);
    PrimeTable bigger(2000);
    REQUIRE_THROWS_AS(build_feature_matrix(rec, aps, bigger, Integer(389)),
                      InsufficientApDataError);
}

TEST_CASE("split_dataset") {
    std::vector<CurveRecord> recs;
    for (int i = 0; i < 100; ++i) {
        CurveRecord r;
        r.id = "c" + std::to_string(i);
        r.conductor = 1000 + 100 * i;  // 1000 .. 10900
        r.rank_label = i % 3;
        recs.push_back(r);
    }

    SplitSpec spec;
    spec.seed = 4;
    DatasetSplit s = split_dataset(recs, spec);
    REQUIRE(s.train.size() == 64);
    REQUIRE(s.val.size() == 16);
    REQUIRE(s.test.size() == 20);

    // partition: disjoint ids covering the input
    std::set<std::string> ids;
    for (auto* part : {&s.train, &s.val, &s.test})
        for (auto& r : *part) REQUIRE(ids.insert(r.id).second);
    REQUIRE(ids.size() == recs.size());

    // determinism
    DatasetSplit s2 = split_dataset(recs, spec);
    REQUIRE(s2.train[0].id == s.train[0].id);
    REQUIRE(s2.test[5].id == s.test[5].id);

    // top-range mode: test = conductor in [cut_lo, cut_hi)
    SplitSpec top;
    top.mode = SplitSpec::Mode::TopRange;
    top.cut_lo = 9000;
    top.cut_hi = 11000;
    top.seed = 4;
    DatasetSplit st = split_dataset(recs, top);
    for (auto& r : st.test) {
        REQUIRE(r.conductor >= 9000);
        REQUIRE(r.conductor < 11000);
    }
    for (auto& r : st.train) REQUIRE(r.conductor < 9000);
    REQUIRE(st.train.size() + st.val.size() + st.test.size() == recs.size());
    REQUIRE(st.val.size() ==
            static_cast<std::size_t>(std::llround((recs.size() - st.test.size()) / 5.0)));

    REQUIRE_THROWS_AS(split_dataset({}, spec), EmptySplitError);
    SplitSpec bad = top;
    bad.cut_lo = 100000;
    bad.cut_hi = 200000;
    REQUIRE_THROWS_AS(split_dataset(recs, bad), EmptySplitError);
}

TEST_CASE("merge_binary_labels") {
    std::vector<CurveRecord> recs;
    for (int rank = 0; rank <= 10; ++rank) {
        CurveRecord r;
        r.rank_label = rank;
        recs.push_back(r);
    }
    auto lmfdb = merge_binary_labels(recs, kLmfdbHighRankThreshold);
    for (int rank = 0; rank <= 10; ++rank)
        REQUIRE(lmfdb[rank].rank_label == (rank >= 4 ? 1 : 0));

    auto custom = merge_binary_labels(recs, kCustomHighRankThreshold);
    int high = 0;
    for (auto& r : custom) high += r.rank_label;
    REQUIRE(high == 3);  // ranks 8, 9, 10

    auto zero = merge_binary_labels(recs, 0);
    for (auto& r : zero) REQUIRE(r.rank_label == 1);

    // monotone in rank
    for (int t = 0; t <= 10; ++t) {
        auto m = merge_binary_labels(recs, t);
        for (std::size_t i = 1; i < m.size(); ++i)
            REQUIRE(m[i].rank_label >= m[i - 1].rank_label);
    }
}

TEST_CASE("class_weights") {
    std::vector<int> balanced = {0, 1, 0, 1};
    auto w = class_weights(balanced, 2);
    REQUIRE(w[0] == 1.0);
    REQUIRE(w[1] == 1.0);

    std::vector<int> skew;
    for (int i = 0; i < 90; ++i) skew.push_back(0);
    for (int i = 0; i < 10; ++i) skew.push_back(1);
    auto ws = class_weights(skew, 2);
    REQUIRE(ws[0] == Catch::Approx(0.5556).margin(5e-5));
    REQUIRE(ws[1] == Catch::Approx(5.0));
    // count-weighted mean is 1
    REQUIRE(90 * ws[0] + 10 * ws[1] == Catch::Approx(100.0).epsilon(1e-14));

    REQUIRE_THROWS_AS(class_weights({0, 0, 0}, 2), MissingClassError);
}
