#pragma once

// Confusion matrix, accuracy, and the Matthews correlation coefficient:
// the binary formula for two classes and the Gorodkin R_K statistic for
// more, with MCC = 0 whenever a denominator vanishes.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ecrank/errors.hpp"

namespace ecrank::nn {

struct Metrics {
    int num_classes = 0;
    std::vector<std::int64_t> confusion;  // K x K, rows = true, cols = predicted
    double mcc = 0.0;
    double accuracy = 0.0;

    std::int64_t at(int truth, int pred) const { return confusion[truth * num_classes + pred]; }
};

inline double binary_mcc(std::int64_t tp, std::int64_t tn, std::int64_t fp, std::int64_t fn) {
    double denom = std::sqrt(static_cast<double>(tp + fp) * static_cast<double>(tp + fn) *
                             static_cast<double>(tn + fp) * static_cast<double>(tn + fn));
    if (denom == 0.0) return 0.0;
    return (static_cast<double>(tp) * tn - static_cast<double>(fp) * fn) / denom;
}

/// Gorodkin's R_K over a K x K confusion matrix; equals the binary MCC at
/// K = 2.
inline double rk_mcc(const std::vector<std::int64_t>& confusion, int k) {
    double s = 0.0, c = 0.0;
    std::vector<double> t(k, 0.0), p(k, 0.0);
    for (int i = 0; i < k; ++i) {
        c += static_cast<double>(confusion[i * k + i]);
        for (int j = 0; j < k; ++j) {
            double v = static_cast<double>(confusion[i * k + j]);
            s += v;
            t[i] += v;
            p[j] += v;
        }
    }
    double tp_sum = 0.0, tt = 0.0, pp = 0.0;
    for (int i = 0; i < k; ++i) {
        tp_sum += t[i] * p[i];
        tt += t[i] * t[i];
        pp += p[i] * p[i];
    }
    double denom = std::sqrt((s * s - pp) * (s * s - tt));
    if (denom == 0.0) return 0.0;
    return (c * s - tp_sum) / denom;
}

inline Metrics confusion_and_mcc(const std::vector<int>& predictions,
                                 const std::vector<int>& labels, int num_classes) {
    if (predictions.size() != labels.size())
        throw ShapeMismatchError("confusion_and_mcc: size mismatch");
    Metrics m;
    m.num_classes = num_classes;
    m.confusion.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        int y = labels[i], yhat = predictions[i];
        if (y < 0 || y >= num_classes || yhat < 0 || yhat >= num_classes)
            throw DomainError("confusion_and_mcc: class out of range");
        m.confusion[y * num_classes + yhat]++;
        if (y == yhat) ++correct;
    }
    m.accuracy = labels.empty() ? 0.0 : static_cast<double>(correct) / labels.size();
    if (num_classes == 2) {
        m.mcc = binary_mcc(m.at(1, 1), m.at(0, 0), m.at(0, 1), m.at(1, 0));
    } else {
        m.mcc = rk_mcc(m.confusion, num_classes);
    }
    return m;
}

/// Reinterpret a K-class confusion matrix as binary low/high by merging
/// classes below/at the threshold, without re-predicting.
inline Metrics merge_confusion_binary(const Metrics& metrics, int high_threshold) {
    Metrics m;
    m.num_classes = 2;
    m.confusion.assign(4, 0);
    std::int64_t correct = 0, total = 0;
    for (int i = 0; i < metrics.num_classes; ++i) {
        for (int j = 0; j < metrics.num_classes; ++j) {
            int bi = i >= high_threshold ? 1 : 0;
            int bj = j >= high_threshold ? 1 : 0;
            std::int64_t v = metrics.at(i, j);
            m.confusion[bi * 2 + bj] += v;
            total += v;
            if (bi == bj) correct += v;
        }
    }
    m.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    m.mcc = binary_mcc(m.at(1, 1), m.at(0, 0), m.at(0, 1), m.at(1, 0));
    return m;
}

}  // namespace ecrank::nn
