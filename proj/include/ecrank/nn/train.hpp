#pragma once

// Training: Adam with decoupled weight decay, the one-cycle cosine
// schedule for learning rate and momentum, the mini-batch loop with the
// best-validation-MCC snapshot, and the cutoff extraction used on trained
// two-feature sum classifiers.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ecrank/errors.hpp"
#include "ecrank/nn/layers.hpp"
#include "ecrank/nn/metrics.hpp"
#include "ecrank/nn/model.hpp"
#include "ecrank/rng.hpp"

namespace ecrank::nn {

struct TrainConfig {
    int epochs = 40;
    std::size_t batch_size = 2048;
    double lr_max = 1e-3;
    double beta1 = 0.9;   // used when the one-cycle schedule is disabled
    double beta2 = 0.99;
    double eps = 1e-5;
    double weight_decay = 1e-3;
    std::vector<double> class_weights;  // empty = uniform
    std::uint64_t seed = 0;
    double pct_start = 0.25;
    bool one_cycle = true;
};

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

class Adam {
public:
    Adam(Model& model, const TrainConfig& cfg) : model_(model), cfg_(cfg) {
        for (Tensor* p : model.parameters()) {
            m_.emplace_back(p->shape);
            v_.emplace_back(p->shape);
        }
    }

    /// One update from the accumulated gradients; clears them afterwards.
    void step(double lr, double beta1) {
        ++t_;
        auto params = model_.parameters();
        auto grads = model_.gradients();
        const double bc1 = 1.0 - std::pow(beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& p = *params[i];
            Tensor& g = *grads[i];
            Tensor& m = m_[i];
            Tensor& v = v_[i];
            for (std::size_t j = 0; j < p.numel(); ++j) {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
                double mhat = m[j] / bc1;
                double vhat = v[j] / bc2;
                p[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
                p[j] -= lr * cfg_.weight_decay * p[j];  // decoupled decay
            }
            g.zero();
        }
    }

    int steps_taken() const { return t_; }

private:
    Model& model_;
    TrainConfig cfg_;
    std::vector<Tensor> m_, v_;
    int t_ = 0;
};

/// Single scalar-parameter Adam update, exposed for the unit oracle.
struct AdamScalarState {
    double m = 0.0, v = 0.0;
    int t = 0;
};

inline double adam_scalar_step(double param, double grad, AdamScalarState& st, double lr,
                               double beta1, double beta2, double eps, double wd) {
    ++st.t;
    st.m = beta1 * st.m + (1.0 - beta1) * grad;
    st.v = beta2 * st.v + (1.0 - beta2) * grad * grad;
    double mhat = st.m / (1.0 - std::pow(beta1, st.t));
    double vhat = st.v / (1.0 - std::pow(beta2, st.t));
    param -= lr * mhat / (std::sqrt(vhat) + eps);
    param -= lr * wd * param;
    return param;
}

// ---------------------------------------------------------------------------
// One-cycle schedule
// ---------------------------------------------------------------------------

struct ScheduledStep {
    double lr;
    double beta1;
};

/// Cosine one-cycle: lr rises lr_max/25 -> lr_max over the first pct_start
/// of the run while beta1 falls 0.95 -> 0.85, then lr anneals to
/// lr_max/(25*10^4) while beta1 returns to 0.95.
inline ScheduledStep one_cycle(std::size_t step, std::size_t total_steps, double lr_max,
                               double pct_start = 0.25) {
    if (total_steps == 0 || step >= total_steps)
        throw DomainError("one_cycle: step out of range");
    const double lr_start = lr_max / 25.0;
    const double lr_final = lr_start / 1e4;
    std::size_t warm = static_cast<std::size_t>(std::llround(pct_start * total_steps));
    if (warm >= total_steps) warm = total_steps - 1;
    auto cosine = [](double from, double to, double x) {
        return from + (to - from) * 0.5 * (1.0 - std::cos(3.141592653589793 * x));
    };
    if (step <= warm) {
        double x = warm == 0 ? 1.0 : static_cast<double>(step) / warm;
        return {cosine(lr_start, lr_max, x), cosine(0.95, 0.85, x)};
    }
    std::size_t span = total_steps - 1 - warm;
    double x = span == 0 ? 1.0 : static_cast<double>(step - warm) / span;
    return {cosine(lr_max, lr_final, x), cosine(0.85, 0.95, x)};
}

// ---------------------------------------------------------------------------
// Data plumbing
// ---------------------------------------------------------------------------

/// Features (N, ...) with integer class labels.
struct LabeledData {
    Tensor features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    std::size_t row_elems() const { return features.numel() / std::max<std::size_t>(1, size()); }
};

namespace detail {

inline Tensor gather_rows(const Tensor& all, const std::vector<std::size_t>& idx,
                          std::size_t begin, std::size_t end) {
    std::size_t rows = end - begin;
    std::size_t elems = all.numel() / all.dim(0);
    std::vector<std::size_t> shape = all.shape;
    shape[0] = rows;
    Tensor out(shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = &all.data[idx[begin + r] * elems];
        std::copy(src, src + elems, &out.data[r * elems]);
    }
    return out;
}

}  // namespace detail

inline std::vector<int> predict(Model& model, const Tensor& features,
                                std::size_t batch_size = 1024) {
    std::size_t n = features.dim(0);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::vector<int> out(n);
    for (std::size_t start = 0; start < n; start += batch_size) {
        std::size_t end = std::min(n, start + batch_size);
        Tensor batch = detail::gather_rows(features, idx, start, end);
        Tensor logits = model.forward(batch, false, nullptr);
        std::size_t k = logits.dim(1);
        for (std::size_t r = 0; r < end - start; ++r) {
            const double* z = &logits.data[r * k];
            int best = 0;
            for (std::size_t j = 1; j < k; ++j)
                if (z[j] > z[best]) best = static_cast<int>(j);
            out[start + r] = best;
        }
    }
    return out;
}

struct Evaluation {
    double loss = 0.0;
    Metrics metrics;
};

inline Evaluation evaluate(Model& model, const LabeledData& data,
                           const std::vector<double>& weights, std::size_t batch_size = 1024) {
    std::size_t n = data.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    double loss_sum = 0.0, weight_sum = 0.0;
    std::vector<int> preds(n);
    for (std::size_t start = 0; start < n; start += batch_size) {
        std::size_t end = std::min(n, start + batch_size);
        Tensor batch = detail::gather_rows(data.features, idx, start, end);
        std::vector<int> labels(data.labels.begin() + start, data.labels.begin() + end);
        Tensor logits = model.forward(batch, false, nullptr);
        LossResult lr = cross_entropy_weighted(logits, labels, weights);
        double bw = 0.0;
        for (int y : labels) bw += weights.empty() ? 1.0 : weights[y];
        loss_sum += lr.loss * bw;
        weight_sum += bw;
        std::size_t k = logits.dim(1);
        for (std::size_t r = 0; r < end - start; ++r) {
            const double* z = &logits.data[r * k];
            int best = 0;
            for (std::size_t j = 1; j < k; ++j)
                if (z[j] > z[best]) best = static_cast<int>(j);
            preds[start + r] = best;
        }
    }
    Evaluation ev;
    ev.loss = weight_sum > 0 ? loss_sum / weight_sum : 0.0;
    ev.metrics = confusion_and_mcc(preds, data.labels, model.num_classes);
    return ev;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_mcc = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    double best_val_mcc = -2.0;
    int best_epoch = -1;
};

inline void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "epoch,train_loss,val_loss,val_mcc\n";
    char buf[160];
    for (const EpochStats& e : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss,
                      e.val_loss, e.val_mcc);
        out << buf;
    }
}

/// Mini-batch training with seeded shuffling and the one-cycle schedule;
/// keeps the parameter snapshot with the best validation MCC (earliest
/// epoch on ties) and restores it before returning.
inline TrainResult train(Model& model, const LabeledData& train_set, const LabeledData& val_set,
                         const TrainConfig& cfg) {
    if (train_set.size() == 0 || val_set.size() == 0)
        throw EmptySplitError("train: empty train or validation set");
    TrainResult result;
    if (cfg.epochs == 0) return result;

    Rng rng(cfg.seed);
    Adam opt(model, cfg);
    const std::size_t n = train_set.size();
    const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = batches * static_cast<std::size_t>(cfg.epochs);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<Tensor> best_snapshot;
    std::size_t global_step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0, weight_sum = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            std::size_t start = b * cfg.batch_size;
            std::size_t end = std::min(n, start + cfg.batch_size);
            Tensor batch = detail::gather_rows(train_set.features, order, start, end);
            std::vector<int> labels(end - start);
            for (std::size_t r = 0; r < labels.size(); ++r)
                labels[r] = train_set.labels[order[start + r]];

            Tensor logits = model.forward(batch, true, &rng);
            LossResult lr = cross_entropy_weighted(logits, labels, cfg.class_weights);
            if (!std::isfinite(lr.loss))
                throw NonfiniteLossError("train: loss became non-finite at epoch " +
                                         std::to_string(epoch));
            double bw = 0.0;
            for (int y : labels) bw += cfg.class_weights.empty() ? 1.0 : cfg.class_weights[y];
            loss_sum += lr.loss * bw;
            weight_sum += bw;

            model.backward(lr.grad);
            ScheduledStep sched =
                cfg.one_cycle ? one_cycle(global_step, total_steps, cfg.lr_max, cfg.pct_start)
                              : ScheduledStep{cfg.lr_max, cfg.beta1};
            opt.step(sched.lr, sched.beta1);
            ++global_step;
        }

        Evaluation ev = evaluate(model, val_set, cfg.class_weights, cfg.batch_size);
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = weight_sum > 0 ? loss_sum / weight_sum : 0.0;
        stats.val_loss = ev.loss;
        stats.val_mcc = ev.metrics.mcc;
        result.history.push_back(stats);
        if (stats.val_mcc > result.best_val_mcc) {
            result.best_val_mcc = stats.val_mcc;
            result.best_epoch = epoch;
            best_snapshot = model.snapshot();
        }
    }
    if (!best_snapshot.empty()) model.restore(best_snapshot);
    return result;
}

// ---------------------------------------------------------------------------
// Cutoff extraction for two-feature sum classifiers
// ---------------------------------------------------------------------------

struct CutoffRow {
    double log10_conductor;
    double sum_value;  // midpoint of the bracketing grid cell
    int class_low;
    int class_high;
};

/// Scan a (sum value, normalized conductor) classifier over a grid and
/// record where the argmax class flips between adjacent sum values.
inline std::vector<CutoffRow> extract_cutoffs(Model& model,
                                              const std::vector<double>& conductor_grid,
                                              const std::vector<double>& sum_value_grid,
                                              double log_n_max) {
    if (model.input_features != 2)
        throw ArchMismatchError("extract_cutoffs: model must take (sum, conductor)");
    std::vector<CutoffRow> rows;
    for (double N : conductor_grid) {
        double norm = std::log(N) / log_n_max;
        Tensor batch({sum_value_grid.size(), 2});
        for (std::size_t i = 0; i < sum_value_grid.size(); ++i) {
            batch.data[2 * i] = sum_value_grid[i];
            batch.data[2 * i + 1] = norm;
        }
        Tensor logits = model.forward(batch, false, nullptr);
        std::size_t k = logits.dim(1);
        std::vector<int> cls(sum_value_grid.size());
        for (std::size_t i = 0; i < cls.size(); ++i) {
            const double* z = &logits.data[i * k];
            int best = 0;
            for (std::size_t j = 1; j < k; ++j)
                if (z[j] > z[best]) best = static_cast<int>(j);
            cls[i] = best;
        }
        for (std::size_t i = 0; i + 1 < cls.size(); ++i) {
            if (cls[i] != cls[i + 1]) {
                rows.push_back({std::log10(N),
                                0.5 * (sum_value_grid[i] + sum_value_grid[i + 1]), cls[i],
                                cls[i + 1]});
            }
        }
    }
    return rows;
}

}  // namespace ecrank::nn
