#pragma once

// Dataset generation and handling: random Weierstrass curves, pencil
// specializations, labeled-curve CSV ingestion, the aps.bin format, the
// 3 x pi(N) feature matrix, train/val/test splitting and label utilities.
//
// curves.csv: header `id,a1,a2,a3,a4,a6,conductor,rank`, integers in
// decimal, empty rank for unlabeled curves. An optional isogeny_class
// column enables one-per-class deduplication at ingestion.
//
// aps.bin: per-curve block = u32 id length, id bytes, u32 bound B, then
// one i32 a_p and one u8 reduction code per prime p < B in ascending
// order; little-endian throughout.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ecrank/count.hpp"
#include "ecrank/cubic.hpp"
#include "ecrank/curve.hpp"
#include "ecrank/errors.hpp"
#include "ecrank/local.hpp"
#include "ecrank/rng.hpp"
#include "ecrank/torsion.hpp"

namespace ecrank {

constexpr int kRankUnset = -1;
constexpr int kLmfdbHighRankThreshold = 4;   // high rank means rank 4
constexpr int kCustomHighRankThreshold = 8;  // high rank is 8, 9 or 10

struct CurveRecord {
    std::string id;
    Integer a1, a2, a3, a4, a6;
    Integer conductor = 0;
    int rank_label = kRankUnset;
    std::string source;

    WeierstrassCurve curve() const { return compute_invariants(a1, a2, a3, a4, a6); }
};

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Random curves in quasi-minimal form: a1, a3 in {0,1}, a2 in {-1,0,1},
/// a4, a6 uniform in [-coeff_bound, coeff_bound]; singular draws (and the
/// rare unfactorable-discriminant draws) are rejected and redrawn.
inline std::vector<CurveRecord> gen_random_weierstrass(std::int64_t coeff_bound, std::size_t count,
                                                       std::uint64_t rng_seed,
                                                       std::uint64_t factor_budget = 2000000) {
    if (coeff_bound < 1) throw DomainError("gen_random_weierstrass: coeff_bound must be >= 1");
    Rng rng(rng_seed);
    std::vector<CurveRecord> out;
    out.reserve(count);
    while (out.size() < count) {
        CurveRecord rec;
        rec.a1 = rng.range(0, 1);
        rec.a2 = rng.range(-1, 1);
        rec.a3 = rng.range(0, 1);
        rec.a4 = rng.range(-coeff_bound, coeff_bound);
        rec.a6 = rng.range(-coeff_bound, coeff_bound);
        rec.source = "random-weierstrass";
        try {
            WeierstrassCurve E = rec.curve();
            FactorMap f = factorize(abs(E.disc), factor_budget);
            if (!f.complete()) continue;
            rec.conductor = conductor(E, f);
        } catch (const SingularCurveError&) {
            continue;
        }
        rec.id = "rw" + std::to_string(out.size());
        out.push_back(std::move(rec));
    }
    return out;
}

struct GenerateConfig {
    std::size_t random_count = 0;
    std::int64_t coeff_bound = 10000;
    std::array<std::size_t, 7> pencil_counts{};  // index 0 -> k = 2, ..., 6 -> k = 8
    int coord_bound = 20;
    std::uint64_t seed = 1;
    std::uint64_t factor_budget = 2000000;
};

struct GenerateResult {
    std::vector<CurveRecord> records;
    std::vector<std::string> log;
};

/// Random Weierstrass curves plus pencil specializations brought to
/// Weierstrass form; nontrivial torsion removed, duplicates removed by the
/// (c4, c6) of the shrunk model. Rank labels are left unset.
inline GenerateResult generate_custom_dataset(const GenerateConfig& cfg) {
    GenerateResult out;
    std::set<std::pair<Integer, Integer>> seen;

    auto admit = [&](CurveRecord rec, const WeierstrassCurve& E) {
        auto key = std::make_pair(E.c4, E.c6);
        if (seen.count(key)) {
            out.log.push_back(rec.id + ": duplicate of an earlier curve");
            return;
        }
        if (!torsion_is_trivial(E)) {
            out.log.push_back(rec.id + ": nontrivial torsion");
            return;
        }
        seen.insert(key);
        out.records.push_back(std::move(rec));
    };

    Rng rng(cfg.seed);
    {
        Rng sub = rng.fork(0);
        std::size_t made = 0, attempts = 0;
        while (made < cfg.random_count && attempts < 200 * (cfg.random_count + 1)) {
            ++attempts;
            CurveRecord rec;
            rec.a1 = sub.range(0, 1);
            rec.a2 = sub.range(-1, 1);
            rec.a3 = sub.range(0, 1);
            rec.a4 = sub.range(-cfg.coeff_bound, cfg.coeff_bound);
            rec.a6 = sub.range(-cfg.coeff_bound, cfg.coeff_bound);
            rec.source = "random-weierstrass";
            rec.id = "rw" + std::to_string(made);
            try {
                WeierstrassCurve E = rec.curve();
                FactorMap f = factorize(abs(E.disc), cfg.factor_budget);
                if (!f.complete()) {
                    out.log.push_back(rec.id + ": discriminant not factored within budget");
                    continue;
                }
                rec.conductor = conductor(E, f);
                ++made;
                admit(std::move(rec), E);
            } catch (const SingularCurveError&) {
                continue;
            }
        }
    }

    for (int k = 2; k <= 8; ++k) {
        Rng sub = rng.fork(static_cast<std::uint64_t>(k));
        std::size_t want = cfg.pencil_counts[k - 2];
        std::size_t made = 0, attempts = 0;
        while (made < want && attempts < 50 * (want + 1)) {
            ++attempts;
            std::string id = "pc" + std::to_string(k) + "-" + std::to_string(made);
            try {
                PencilCubic pc = gen_pencil_cubic(k, cfg.coord_bound, sub);
                CubicReduction red = cubic_to_weierstrass(pc.cubic, pc.base_points.front());
                WeierstrassCurve model = shrink_model(red.curve);
                FactorMap f = factorize(abs(model.disc), cfg.factor_budget);
                if (!f.complete()) {
                    out.log.push_back(id + ": discriminant not factored within budget");
                    continue;
                }
                CurveRecord rec;
                rec.id = id;
                rec.a1 = model.a1;
                rec.a2 = model.a2;
                rec.a3 = model.a3;
                rec.a4 = model.a4;
                rec.a6 = model.a6;
                rec.conductor = conductor(model, f);
                rec.source = "pencil-k" + std::to_string(k);
                ++made;
                admit(std::move(rec), model);
            } catch (const SingularCubicError&) {
                continue;
            } catch (const PointAtSingularityError&) {
                continue;
            } catch (const DegenerateConfigurationError& e) {
                out.log.push_back(id + ": " + e.what());
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// curves.csv
// ---------------------------------------------------------------------------

inline const char* kCurvesCsvHeader = "id,a1,a2,a3,a4,a6,conductor,rank";

inline void write_curves_csv(const std::string& path, const std::vector<CurveRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << kCurvesCsvHeader << "\n";
    for (const CurveRecord& r : records) {
        out << r.id << ',' << r.a1 << ',' << r.a2 << ',' << r.a3 << ',' << r.a4 << ',' << r.a6
            << ',' << r.conductor;
        out << ',';
        if (r.rank_label != kRankUnset) out << r.rank_label;
        out << "\n";
    }
}

struct IngestOptions {
    bool dedup_isogeny_class = false;  // one representative per class when the column exists
    bool validate = true;
};

inline std::vector<CurveRecord> ingest_csv(const std::string& path,
                                           const IngestOptions& opt = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    // header: required columns in fixed order, optional extras by name
    std::vector<std::string> cols;
    {
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            cols.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
    }
    const std::vector<std::string> required = {"id", "a1", "a2", "a3", "a4",
                                               "a6", "conductor", "rank"};
    if (cols.size() < required.size())
        throw ParseError(path + ":1: bad header '" + line + "'");
    for (std::size_t i = 0; i < required.size(); ++i)
        if (cols[i] != required[i])
            throw ParseError(path + ":1: expected column '" + required[i] + "', got '" + cols[i] +
                             "'");
    int isogeny_col = -1;
    for (std::size_t i = required.size(); i < cols.size(); ++i)
        if (cols[i] == "isogeny_class") isogeny_col = static_cast<int>(i);

    auto parse_int = [&](const std::string& s, std::size_t lineno) -> Integer {
        if (s.empty()) throw ParseError(path + ":" + std::to_string(lineno) + ": empty integer");
        for (std::size_t i = 0; i < s.size(); ++i) {
            char ch = s[i];
            if (!(std::isdigit(static_cast<unsigned char>(ch)) || (i == 0 && ch == '-')))
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad integer '" + s +
                                 "'");
        }
        return Integer(s);
    };

    std::vector<CurveRecord> out;
    std::set<std::pair<Integer, std::string>> seen_classes;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            f.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
        if (f.size() < required.size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected at least 8 fields");
        CurveRecord rec;
        rec.id = f[0];
        rec.a1 = parse_int(f[1], lineno);
        rec.a2 = parse_int(f[2], lineno);
        rec.a3 = parse_int(f[3], lineno);
        rec.a4 = parse_int(f[4], lineno);
        rec.a6 = parse_int(f[5], lineno);
        rec.conductor = parse_int(f[6], lineno);
        rec.rank_label = f[7].empty() ? kRankUnset : static_cast<int>(parse_int(f[7], lineno));
        rec.source = "csv";
        if (opt.validate) {
            if (rec.conductor < 1)
                throw ValidationError(path + ":" + std::to_string(lineno) +
                                      ": conductor must be positive");
            if (rec.rank_label != kRankUnset && rec.rank_label < 0)
                throw ValidationError(path + ":" + std::to_string(lineno) + ": negative rank");
            try {
                rec.curve();
            } catch (const SingularCurveError&) {
                throw ValidationError(path + ":" + std::to_string(lineno) + ": singular curve '" +
                                      rec.id + "'");
            }
        }
        if (opt.dedup_isogeny_class && isogeny_col >= 0 &&
            static_cast<std::size_t>(isogeny_col) < f.size()) {
            auto key = std::make_pair(rec.conductor, f[isogeny_col]);
            if (seen_classes.count(key)) continue;
            seen_classes.insert(key);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// aps.bin
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void write_le(std::ofstream& out, T v) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf[i] = static_cast<unsigned char>((static_cast<std::make_unsigned_t<T>>(v) >> (8 * i)) &
                                            0xff);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
bool read_le(std::ifstream& in, T& v) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
    v = static_cast<T>(u);
    return true;
}

}  // namespace detail

inline void write_aps_bin(const std::string& path, const std::vector<ApRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const ApRecord& r : records) {
        detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.curve_id.size()));
        out.write(r.curve_id.data(), static_cast<std::streamsize>(r.curve_id.size()));
        detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.bound));
        for (std::size_t i = 0; i < r.ap.size(); ++i) {
            detail::write_le<std::int32_t>(out, r.ap[i]);
            detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(r.reduction[i]));
        }
    }
}

inline std::vector<ApRecord> read_aps_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<ApRecord> out;
    std::uint32_t id_len;
    std::optional<PrimeTable> table;
    while (detail::read_le<std::uint32_t>(in, id_len)) {
        ApRecord rec;
        rec.curve_id.resize(id_len);
        if (!in.read(rec.curve_id.data(), id_len)) throw ParseError(path + ": truncated id");
        std::uint32_t bound;
        if (!detail::read_le<std::uint32_t>(in, bound)) throw ParseError(path + ": truncated");
        rec.bound = bound;
        if (!table || table->bound() != bound) table.emplace(bound);
        std::size_t n = table->count();
        rec.ap.resize(n);
        rec.reduction.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::int32_t ap;
            std::uint8_t code;
            if (!detail::read_le<std::int32_t>(in, ap) || !detail::read_le<std::uint8_t>(in, code))
                throw ParseError(path + ": truncated block for '" + rec.curve_id + "'");
            rec.ap[i] = ap;
            if (code > 3) throw ParseError(path + ": bad reduction code");
            rec.reduction[i] = static_cast<ReductionType>(code);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature matrix
// ---------------------------------------------------------------------------

/// 3 x pi(N) input matrix: normalized a_p, constant normalized conductor,
/// and the linear position sweep from -1 to 1.
struct FeatureMatrix {
    std::size_t cols = 0;
    std::vector<double> data;  // 3 rows, row-major

    double at(std::size_t row, std::size_t col) const { return data[row * cols + col]; }
};

inline FeatureMatrix build_feature_matrix(const CurveRecord& rec, const ApRecord& aps,
                                          const PrimeTable& table, const Integer& n_max) {
    if (aps.bound < table.bound() || aps.ap.size() < table.count())
        throw InsufficientApDataError("build_feature_matrix: ap record does not cover the table");
    if (rec.conductor > n_max)
        throw ConductorExceedsMaxError("build_feature_matrix: conductor above N_max for '" +
                                       rec.id + "'");
    if (rec.conductor < 1) throw ValidationError("build_feature_matrix: conductor unset");
    FeatureMatrix m;
    m.cols = table.count();
    m.data.resize(3 * m.cols);
    const double norm_cond =
        std::log(static_cast<double>(rec.conductor)) / std::log(static_cast<double>(n_max));
    const double count = static_cast<double>(m.cols);
    for (std::size_t i = 0; i < m.cols; ++i) {
        double p = static_cast<double>(table.primes()[i]);
        m.data[i] = aps.ap[i] / std::sqrt(p);
        m.data[m.cols + i] = norm_cond;
        // (2n - pi(N))/pi(N): lands on exactly 1 at the last prime
        m.data[2 * m.cols + i] = (2.0 * static_cast<double>(i + 1) - count) / count;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Splits and labels
// ---------------------------------------------------------------------------

struct SplitSpec {
    enum class Mode { Uniform, TopRange };
    Mode mode = Mode::Uniform;
    double test_fraction = 0.2;       // uniform mode
    Integer cut_lo = 0, cut_hi = 0;   // top-range mode: test = conductor in [lo, hi)
    int train_parts = 4, val_parts = 1;
    std::uint64_t seed = 0;
};

struct DatasetSplit {
    std::vector<CurveRecord> train, val, test;
};

inline DatasetSplit split_dataset(const std::vector<CurveRecord>& records, const SplitSpec& spec) {
    if (records.empty()) throw EmptySplitError("split_dataset: no records");
    DatasetSplit out;
    Rng rng(spec.seed);
    if (spec.mode == SplitSpec::Mode::Uniform) {
        std::vector<std::size_t> idx(records.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(idx);
        std::size_t n_test = static_cast<std::size_t>(
            std::llround(spec.test_fraction * static_cast<double>(records.size())));
        std::size_t rest = records.size() - n_test;
        std::size_t n_val = static_cast<std::size_t>(std::llround(
            static_cast<double>(rest) * spec.val_parts / (spec.train_parts + spec.val_parts)));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const CurveRecord& r = records[idx[i]];
            if (i < n_test) out.test.push_back(r);
            else if (i < n_test + n_val) out.val.push_back(r);
            else out.train.push_back(r);
        }
    } else {
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (records[i].conductor >= spec.cut_lo && records[i].conductor < spec.cut_hi)
                out.test.push_back(records[i]);
            else if (records[i].conductor < spec.cut_lo)
                rest.push_back(i);
            // conductors >= cut_hi are not used
        }
        rng.shuffle(rest);
        std::size_t n_val = static_cast<std::size_t>(std::llround(
            static_cast<double>(rest.size()) * spec.val_parts /
            (spec.train_parts + spec.val_parts)));
        for (std::size_t i = 0; i < rest.size(); ++i) {
            if (i < n_val) out.val.push_back(records[rest[i]]);
            else out.train.push_back(records[rest[i]]);
        }
    }
    if (out.train.empty() || out.val.empty() || out.test.empty())
        throw EmptySplitError("split_dataset: a split part came out empty");
    return out;
}

/// Binary relabeling: 0 below the threshold, 1 at or above it.
inline std::vector<CurveRecord> merge_binary_labels(const std::vector<CurveRecord>& records,
                                                    int high_rank_threshold) {
    std::vector<CurveRecord> out = records;
    for (CurveRecord& r : out) {
        if (r.rank_label == kRankUnset) continue;
        r.rank_label = r.rank_label >= high_rank_threshold ? 1 : 0;
    }
    return out;
}

/// Loss weights total/(K * count_c); the count-weighted mean is 1.
inline std::vector<double> class_weights(const std::vector<int>& labels, int num_classes) {
    std::vector<std::size_t> counts(num_classes, 0);
    for (int l : labels) {
        if (l < 0 || l >= num_classes) throw DomainError("class_weights: label out of range");
        counts[l]++;
    }
    std::vector<double> w(num_classes);
    for (int c = 0; c < num_classes; ++c) {
        if (counts[c] == 0)
            throw MissingClassError("class_weights: class " + std::to_string(c) +
                                    " absent from the training labels");
        w[c] = static_cast<double>(labels.size()) /
               (static_cast<double>(num_classes) * static_cast<double>(counts[c]));
    }
    return w;
}

}  // namespace ecrank
