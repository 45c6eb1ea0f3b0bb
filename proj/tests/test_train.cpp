#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "ecrank/nn/train.hpp"
#include "nn_testutil.hpp"

using namespace ecrank;
using namespace ecrank::nn;

namespace {

/// Two well-separated Gaussian blobs in the plane.
LabeledData separable_blobs(std::size_t n, Rng& rng) {
    LabeledData d;
    d.features = Tensor({n, 2});
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int cls = static_cast<int>(rng.below(2));
        double cx = cls == 0 ? -2.0 : 2.0;
        d.features.data[2 * i] = cx + 0.3 * rng.normal();
        d.features.data[2 * i + 1] = -cx + 0.3 * rng.normal();
        d.labels[i] = cls;
    }
    return d;
}

}  // namespace

TEST_CASE("adam scalar semantics") {
    // zero gradient and zero weight decay: parameters unchanged
    AdamScalarState st;
    double p = adam_scalar_step(1.5, 0.0, st, 0.1, 0.9, 0.99, 1e-5, 0.0);
    REQUIRE(p == 1.5);

    // first step has magnitude ~ lr for any nonzero gradient
    AdamScalarState st2;
    double p2 = adam_scalar_step(0.0, 0.3, st2, 0.1, 0.9, 0.99, 1e-5, 0.0);
    REQUIRE(std::fabs(p2 + 0.1) < 1e-4);
}

TEST_CASE("adam two steps against the hand recursion") {
    const double lr = 0.1, b1 = 0.9, b2 = 0.99, eps = 1e-5, wd = 0.0;
    const double g1 = 0.3, g2 = -0.2;
    // hand-computed moment recursion
    double m1 = (1 - b1) * g1, v1 = (1 - b2) * g1 * g1;
    double x1 = 0.0 - lr * (m1 / (1 - b1)) / (std::sqrt(v1 / (1 - b2)) + eps);
    double m2 = b1 * m1 + (1 - b1) * g2, v2 = b2 * v1 + (1 - b2) * g2 * g2;
    double x2 = x1 - lr * (m2 / (1 - b1 * b1)) / (std::sqrt(v2 / (1 - b2 * b2)) + eps);

    AdamScalarState st;
    double p = adam_scalar_step(0.0, g1, st, lr, b1, b2, eps, wd);
    REQUIRE(p == Catch::Approx(x1).margin(1e-12));
    p = adam_scalar_step(p, g2, st, lr, b1, b2, eps, wd);
    REQUIRE(p == Catch::Approx(x2).margin(1e-12));

    // the tensor optimizer matches the scalar recursion on a 1x1 dense layer
    Rng rng(12);
    Model tiny;
    tiny.arch = "fcnn";
    tiny.num_classes = 1;
    tiny.input_features = 1;
    tiny.layers.push_back(std::make_unique<Dense>(1, 1, rng));
    Tensor* W = tiny.layers[0]->params()[0];
    W->data[0] = 0.0;
    TrainConfig cfg;
    cfg.beta2 = b2;
    cfg.eps = eps;
    cfg.weight_decay = wd;
    Adam opt(tiny, cfg);
    for (double g : {g1, g2}) {
        Tensor in({1, 1});
        in.data[0] = g;  // dW = in for a unit upstream gradient
        tiny.forward(in, true, nullptr);
        Tensor up({1, 1});
        up.data[0] = 1.0;
        tiny.backward(up);
        opt.step(lr, b1);
    }
    REQUIRE(W->data[0] == Catch::Approx(x2).margin(1e-12));
}

TEST_CASE("one_cycle schedule") {
    const double lr_max = 1.2e-3;
    const std::size_t total = 400;
    auto s0 = one_cycle(0, total, lr_max);
    REQUIRE(s0.lr == Catch::Approx(lr_max / 25.0).epsilon(1e-12));
    REQUIRE(s0.beta1 == Catch::Approx(0.95).epsilon(1e-12));

    std::size_t warm = static_cast<std::size_t>(std::llround(0.25 * total));
    auto peak = one_cycle(warm, total, lr_max);
    REQUIRE(peak.lr == Catch::Approx(lr_max).epsilon(1e-12));
    REQUIRE(peak.beta1 == Catch::Approx(0.85).epsilon(1e-12));

    auto last = one_cycle(total - 1, total, lr_max);
    REQUIRE(last.lr <= lr_max / 1e4);
    REQUIRE(last.beta1 == Catch::Approx(0.95).epsilon(1e-12));

    // continuity across the boundary and lr_max as the global maximum
    auto before = one_cycle(warm - 1, total, lr_max);
    auto after = one_cycle(warm + 1, total, lr_max);
    REQUIRE(std::fabs(before.lr - peak.lr) < 0.05 * lr_max);
    REQUIRE(std::fabs(after.lr - peak.lr) < 0.05 * lr_max);
    double max_lr = 0.0;
    for (std::size_t s = 0; s < total; ++s) max_lr = std::max(max_lr, one_cycle(s, total, lr_max).lr);
    REQUIRE(max_lr == Catch::Approx(lr_max).epsilon(1e-12));
}

TEST_CASE("training solves a separable toy problem") {
    Rng data_rng(13);
    LabeledData train_set = separable_blobs(400, data_rng);
    LabeledData val_set = separable_blobs(100, data_rng);

    Rng init(14);
    Model m = build_fcnn(2, 2, 0.0, init);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 64;
    cfg.lr_max = 1e-2;
    cfg.seed = 15;
    TrainResult res = train(m, train_set, val_set, cfg);
    REQUIRE(res.history.size() == 10);
    REQUIRE(res.best_val_mcc == 1.0);

    Evaluation ev = evaluate(m, val_set, {});
    REQUIRE(ev.metrics.mcc == 1.0);
}

TEST_CASE("zero epochs leave the model unchanged") {
    Rng init(16);
    Model m = build_fcnn(2, 2, 0.0, init);
    std::vector<Tensor> before = m.snapshot();
    Rng data_rng(17);
    LabeledData d = separable_blobs(50, data_rng);
    TrainConfig cfg;
    cfg.epochs = 0;
    TrainResult res = train(m, d, d, cfg);
    REQUIRE(res.history.empty());
    std::vector<Tensor> after = m.snapshot();
    for (std::size_t t = 0; t < before.size(); ++t)
        for (std::size_t i = 0; i < before[t].numel(); ++i)
            REQUIRE(before[t][i] == after[t][i]);
}

TEST_CASE("training is deterministic for a fixed seed") {
    Rng data_rng(18);
    LabeledData train_set = separable_blobs(200, data_rng);
    LabeledData val_set = separable_blobs(60, data_rng);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 32;
    cfg.lr_max = 3e-3;
    cfg.seed = 19;

    auto run = [&]() {
        Rng init(20);
        Model m = build_fcnn(2, 2, 0.2, init);
        TrainResult r = train(m, train_set, val_set, cfg);
        return std::make_pair(r, m.snapshot());
    };
    auto [r1, p1] = run();
    auto [r2, p2] = run();
    REQUIRE(r1.history.size() == r2.history.size());
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
        REQUIRE(r1.history[i].train_loss == r2.history[i].train_loss);
        REQUIRE(r1.history[i].val_loss == r2.history[i].val_loss);
        REQUIRE(r1.history[i].val_mcc == r2.history[i].val_mcc);
    }
    for (std::size_t t = 0; t < p1.size(); ++t)
        for (std::size_t i = 0; i < p1[t].numel(); ++i) REQUIRE(p1[t][i] == p2[t][i]);
}

TEST_CASE("non-finite loss aborts with diagnostics") {
    Rng init(21);
    Model m = build_fcnn(2, 2, 0.0, init);
    LabeledData d;
    d.features = Tensor({4, 2});
    d.features.data = {1.0, 2.0, 1e308, 1e308, 0.5, -1.0, 2.0, 0.25};
    d.labels = {0, 1, 0, 1};
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    REQUIRE_THROWS_AS(train(m, d, d, cfg), NonfiniteLossError);
}

TEST_CASE("class weights reach the loss") {
    Rng data_rng(22);
    LabeledData d = separable_blobs(64, data_rng);
    Rng init(23);
    Model m = build_fcnn(2, 2, 0.0, init);
    Tensor batch = d.features;
    Tensor logits = m.forward(batch, false, nullptr);
    double balanced = cross_entropy_weighted(logits, d.labels, {1.0, 1.0}).loss;
    double skew = cross_entropy_weighted(logits, d.labels, {10.0, 0.1}).loss;
    REQUIRE(balanced != skew);
}

TEST_CASE("history csv format") {
    namespace fs = std::filesystem;
    std::string path = (fs::temp_directory_path() / "ecrank_history_test.csv").string();
    std::vector<EpochStats> h = {{0, 0.5, 0.6, 0.25}, {1, 0.25, 0.375, 0.5}};
    write_history_csv(path, h);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "epoch,train_loss,val_loss,val_mcc");
    std::getline(in, line);
    REQUIRE(line == "0,0.5,0.59999999999999998,0.25");
    std::remove(path.c_str());
}

TEST_CASE("extract_cutoffs") {
    // train a 2-feature classifier whose label depends only on the sum value
    Rng data_rng(24);
    LabeledData d;
    std::size_t n = 600;
    d.features = Tensor({n, 2});
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = data_rng.real(-3.0, 3.0);
        double cond = data_rng.real(0.3, 1.0);
        d.features.data[2 * i] = sum;
        d.features.data[2 * i + 1] = cond;
        d.labels[i] = sum > 0.5 ? 1 : 0;
    }
    Rng init(25);
    Model m = build_fcnn(2, 2, 0.0, init);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.batch_size = 64;
    cfg.lr_max = 1e-2;
    cfg.seed = 26;
    train(m, d, d, cfg);

    std::vector<double> conductors = {1e3, 1e4, 1e5};
    std::vector<double> sums;
    for (double s = -3.0; s <= 3.0; s += 0.05) sums.push_back(s);
    auto rows = extract_cutoffs(m, conductors, sums, std::log(1e6));
    REQUIRE(rows.size() == conductors.size());  // one boundary per conductor
    for (auto& r : rows) {
        REQUIRE(r.class_low == 0);
        REQUIRE(r.class_high == 1);
        REQUIRE(std::fabs(r.sum_value - 0.5) < 0.5);
        // re-evaluate at the bracket endpoints to confirm the flip
        Tensor probe({2, 2});
        probe.data = {r.sum_value - 0.025, std::exp(r.log10_conductor * std::log(10.0)),
                      r.sum_value + 0.025, std::exp(r.log10_conductor * std::log(10.0))};
        probe.data[1] = std::log(probe.data[1]) / std::log(1e6);
        probe.data[3] = std::log(probe.data[3]) / std::log(1e6);
        Tensor lo = m.forward(probe, false, nullptr);
        int c0 = lo.data[0] > lo.data[1] ? 0 : 1;
        int c1 = lo.data[2] > lo.data[3] ? 0 : 1;
        REQUIRE(c0 == r.class_low);
        REQUIRE(c1 == r.class_high);
    }

    // a model exactly constant in the conductor produces horizontal lines:
    // zero the conductor column of the input layer and rescan
    Tensor* W0 = m.layers[0]->params()[0];
    for (std::size_t o = 0; o < W0->dim(0); ++o) W0->data[o * 2 + 1] = 0.0;
    auto flat = extract_cutoffs(m, conductors, sums, std::log(1e6));
    REQUIRE(flat.size() == conductors.size());
    std::set<double> values;
    for (auto& r : flat) values.insert(r.sum_value);
    REQUIRE(values.size() == 1);
}
