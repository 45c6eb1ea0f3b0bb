#pragma once

// Layers with exact analytic backward passes: 1D convolution (stride 1 or
// 2, zero padding (KS-1)/2), batch normalization over (N, L) per channel,
// ReLU, inverted dropout, dense, and a flatten adapter. Forward caches
// whatever backward needs; parameter gradients accumulate per call into
// the layer's grad tensors (zeroed by the optimizer step).

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ecrank/nn/tensor.hpp"
#include "ecrank/rng.hpp"

namespace ecrank::nn {

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& in, bool training, Rng* rng) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::string kind() const = 0;

    /// Trainable parameters and their gradient slots, pairwise aligned.
    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<Tensor*> grads() { return {}; }
    /// Everything that must be serialized (parameters plus running state).
    virtual std::vector<Tensor*> persistent() { return params(); }
};

// ---------------------------------------------------------------------------

class Conv1d : public Layer {
public:
    Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, int stride,
           Rng& rng)
        : cin_(in_channels), cout_(out_channels), ks_(kernel), stride_(stride) {
        if (kernel % 2 == 0) throw ConfigInvariantViolationError("Conv1d: kernel must be odd");
        if (stride != 1 && stride != 2)
            throw ConfigInvariantViolationError("Conv1d: stride must be 1 or 2");
        weight_ = Tensor({cout_, cin_, ks_});
        bias_ = Tensor({cout_});
        grad_weight_ = Tensor({cout_, cin_, ks_});
        grad_bias_ = Tensor({cout_});
        double bound = std::sqrt(6.0 / static_cast<double>(cin_ * ks_));
        for (double& w : weight_.data) w = rng.real(-bound, bound);
    }

    Tensor forward(const Tensor& in, bool, Rng*) override {
        if (in.shape.size() != 3 || in.dim(1) != cin_)
            throw ShapeMismatchError("Conv1d: expected (N, C_in, L)");
        input_ = in;
        const std::size_t n = in.dim(0), lin = in.dim(2);
        const std::size_t lout = (lin - 1) / stride_ + 1;  // (L + 2p - KS)/s + 1
        Tensor out({n, cout_, lout});
        const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(ks_ / 2);
#pragma omp parallel for schedule(static)
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t co = 0; co < cout_; ++co) {
                double* dst = &out.data[(b * cout_ + co) * lout];
                for (std::size_t o = 0; o < lout; ++o) dst[o] = bias_[co];
                for (std::size_t ci = 0; ci < cin_; ++ci) {
                    const double* src = &in.data[(b * cin_ + ci) * lin];
                    const double* w = &weight_.data[(co * cin_ + ci) * ks_];
                    for (std::size_t k = 0; k < ks_; ++k) {
                        const double wk = w[k];
                        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - pad;
                        // valid o range: 0 <= o*stride + off < lin
                        std::size_t o_lo =
                            off < 0 ? static_cast<std::size_t>((-off + stride_ - 1) / stride_) : 0;
                        std::ptrdiff_t hi_num = static_cast<std::ptrdiff_t>(lin) - 1 - off;
                        if (hi_num < 0) continue;
                        std::size_t o_hi =
                            std::min(lout, static_cast<std::size_t>(hi_num / stride_) + 1);
                        const double* s = src + off;
                        if (stride_ == 1) {
                            for (std::size_t o = o_lo; o < o_hi; ++o) dst[o] += wk * s[o];
                        } else {
                            for (std::size_t o = o_lo; o < o_hi; ++o) dst[o] += wk * s[2 * o];
                        }
                    }
                }
            }
        }
        return out;
    }

    Tensor backward(const Tensor& go) override {
        const std::size_t n = input_.dim(0), lin = input_.dim(2), lout = go.dim(2);
        const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(ks_ / 2);
        Tensor gi({n, cin_, lin});
        // parameter gradients: parallel over output channel, race-free
#pragma omp parallel for schedule(static)
        for (std::size_t co = 0; co < cout_; ++co) {
            double gb = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                const double* g = &go.data[(b * cout_ + co) * lout];
                for (std::size_t o = 0; o < lout; ++o) gb += g[o];
                for (std::size_t ci = 0; ci < cin_; ++ci) {
                    const double* src = &input_.data[(b * cin_ + ci) * lin];
                    double* gw = &grad_weight_.data[(co * cin_ + ci) * ks_];
                    for (std::size_t k = 0; k < ks_; ++k) {
                        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - pad;
                        double acc = 0.0;
                        for (std::size_t o = 0; o < lout; ++o) {
                            std::ptrdiff_t i = static_cast<std::ptrdiff_t>(o * stride_) + off;
                            if (i >= 0 && i < static_cast<std::ptrdiff_t>(lin))
                                acc += g[o] * src[i];
                        }
                        gw[k] += acc;
                    }
                }
            }
            grad_bias_[co] += gb;
        }
        // input gradient: parallel over batch, race-free
#pragma omp parallel for schedule(static)
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t co = 0; co < cout_; ++co) {
                const double* g = &go.data[(b * cout_ + co) * lout];
                for (std::size_t ci = 0; ci < cin_; ++ci) {
                    double* dst = &gi.data[(b * cin_ + ci) * lin];
                    const double* w = &weight_.data[(co * cin_ + ci) * ks_];
                    for (std::size_t k = 0; k < ks_; ++k) {
                        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - pad;
                        const double wk = w[k];
                        for (std::size_t o = 0; o < lout; ++o) {
                            std::ptrdiff_t i = static_cast<std::ptrdiff_t>(o * stride_) + off;
                            if (i >= 0 && i < static_cast<std::ptrdiff_t>(lin))
                                dst[i] += wk * g[o];
                        }
                    }
                }
            }
        }
        return gi;
    }

    std::string kind() const override { return "conv1d"; }
    std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
    std::vector<Tensor*> grads() override { return {&grad_weight_, &grad_bias_}; }

    std::size_t out_len(std::size_t lin) const { return (lin - 1) / stride_ + 1; }

private:
    std::size_t cin_, cout_, ks_;
    int stride_;
    Tensor weight_, bias_, grad_weight_, grad_bias_;
    Tensor input_;
};

// ---------------------------------------------------------------------------

class BatchNorm1d : public Layer {
public:
    explicit BatchNorm1d(std::size_t channels, double eps = 1e-5, double momentum = 0.1)
        : c_(channels), eps_(eps), momentum_(momentum) {
        gamma_ = Tensor({c_});
        beta_ = Tensor({c_});
        for (double& g : gamma_.data) g = 1.0;
        running_mean_ = Tensor({c_});
        running_var_ = Tensor({c_});
        for (double& v : running_var_.data) v = 1.0;
        grad_gamma_ = Tensor({c_});
        grad_beta_ = Tensor({c_});
    }

    Tensor forward(const Tensor& in, bool training, Rng*) override {
        if (in.shape.size() != 3 || in.dim(1) != c_)
            throw ShapeMismatchError("BatchNorm1d: expected (N, C, L)");
        const std::size_t n = in.dim(0), l = in.dim(2);
        const double count = static_cast<double>(n * l);
        training_ = training;
        Tensor out(in.shape);
        xhat_ = Tensor(in.shape);
        invstd_ = Tensor({c_});
#pragma omp parallel for schedule(static)
        for (std::size_t c = 0; c < c_; ++c) {
            double mean, var;
            if (training) {
                double s = 0.0;
                for (std::size_t b = 0; b < n; ++b) {
                    const double* src = &in.data[(b * c_ + c) * l];
                    for (std::size_t i = 0; i < l; ++i) s += src[i];
                }
                mean = s / count;
                double v = 0.0;
                for (std::size_t b = 0; b < n; ++b) {
                    const double* src = &in.data[(b * c_ + c) * l];
                    for (std::size_t i = 0; i < l; ++i) v += (src[i] - mean) * (src[i] - mean);
                }
                var = v / count;
                running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
                running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * var;
            } else {
                mean = running_mean_[c];
                var = running_var_[c];
            }
            const double inv = 1.0 / std::sqrt(var + eps_);
            invstd_[c] = inv;
            for (std::size_t b = 0; b < n; ++b) {
                const double* src = &in.data[(b * c_ + c) * l];
                double* xh = &xhat_.data[(b * c_ + c) * l];
                double* dst = &out.data[(b * c_ + c) * l];
                for (std::size_t i = 0; i < l; ++i) {
                    xh[i] = (src[i] - mean) * inv;
                    dst[i] = gamma_[c] * xh[i] + beta_[c];
                }
            }
        }
        return out;
    }

    Tensor backward(const Tensor& go) override {
        const std::size_t n = go.dim(0), l = go.dim(2);
        const double count = static_cast<double>(n * l);
        Tensor gi(go.shape);
#pragma omp parallel for schedule(static)
        for (std::size_t c = 0; c < c_; ++c) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                const double* g = &go.data[(b * c_ + c) * l];
                const double* xh = &xhat_.data[(b * c_ + c) * l];
                for (std::size_t i = 0; i < l; ++i) {
                    sum_g += g[i];
                    sum_gx += g[i] * xh[i];
                }
            }
            grad_beta_[c] += sum_g;
            grad_gamma_[c] += sum_gx;
            const double inv = invstd_[c];
            for (std::size_t b = 0; b < n; ++b) {
                const double* g = &go.data[(b * c_ + c) * l];
                const double* xh = &xhat_.data[(b * c_ + c) * l];
                double* dst = &gi.data[(b * c_ + c) * l];
                if (training_) {
                    for (std::size_t i = 0; i < l; ++i)
                        dst[i] = gamma_[c] * inv *
                                 (g[i] - sum_g / count - xh[i] * sum_gx / count);
                } else {
                    for (std::size_t i = 0; i < l; ++i) dst[i] = gamma_[c] * inv * g[i];
                }
            }
        }
        return gi;
    }

    std::string kind() const override { return "batchnorm1d"; }
    std::vector<Tensor*> params() override { return {&gamma_, &beta_}; }
    std::vector<Tensor*> grads() override { return {&grad_gamma_, &grad_beta_}; }
    std::vector<Tensor*> persistent() override {
        return {&gamma_, &beta_, &running_mean_, &running_var_};
    }

private:
    std::size_t c_;
    double eps_, momentum_;
    bool training_ = true;
    Tensor gamma_, beta_, running_mean_, running_var_;
    Tensor grad_gamma_, grad_beta_;
    Tensor xhat_, invstd_;
};

// ---------------------------------------------------------------------------

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& in, bool, Rng*) override {
        mask_.assign(in.numel(), 0);
        Tensor out(in.shape);
        for (std::size_t i = 0; i < in.numel(); ++i) {
            if (in[i] > 0.0) {
                out[i] = in[i];
                mask_[i] = 1;
            }
        }
        return out;
    }
    Tensor backward(const Tensor& go) override {
        Tensor gi(go.shape);
        for (std::size_t i = 0; i < go.numel(); ++i) gi[i] = mask_[i] ? go[i] : 0.0;
        return gi;
    }
    std::string kind() const override { return "relu"; }

private:
    std::vector<unsigned char> mask_;
};

class Dropout : public Layer {
public:
    explicit Dropout(double rate) : rate_(rate) {
        if (rate < 0.0 || rate >= 1.0)
            throw ConfigInvariantViolationError("Dropout: rate must be in [0, 1)");
    }

    Tensor forward(const Tensor& in, bool training, Rng* rng) override {
        if (!training || rate_ == 0.0) {
            active_ = false;
            return in;
        }
        if (!rng) throw Error("Dropout: training forward needs an rng");
        active_ = true;
        const double keep = 1.0 - rate_;
        const double scale = 1.0 / keep;
        mask_.assign(in.numel(), 0.0);
        Tensor out(in.shape);
        for (std::size_t i = 0; i < in.numel(); ++i) {
            if (rng->real() < keep) {
                mask_[i] = scale;
                out[i] = in[i] * scale;
            }
        }
        return out;
    }

    Tensor backward(const Tensor& go) override {
        if (!active_) return go;
        Tensor gi(go.shape);
        for (std::size_t i = 0; i < go.numel(); ++i) gi[i] = go[i] * mask_[i];
        return gi;
    }

    std::string kind() const override { return "dropout"; }
    double rate() const { return rate_; }

private:
    double rate_;
    bool active_ = false;
    std::vector<double> mask_;
};

// ---------------------------------------------------------------------------

class Dense : public Layer {
public:
    Dense(std::size_t in_features, std::size_t out_features, Rng& rng)
        : fin_(in_features), fout_(out_features) {
        weight_ = Tensor({fout_, fin_});
        bias_ = Tensor({fout_});
        grad_weight_ = Tensor({fout_, fin_});
        grad_bias_ = Tensor({fout_});
        double bound = std::sqrt(6.0 / static_cast<double>(fin_));
        for (double& w : weight_.data) w = rng.real(-bound, bound);
    }

    Tensor forward(const Tensor& in, bool, Rng*) override {
        if (in.shape.size() != 2 || in.dim(1) != fin_)
            throw ShapeMismatchError("Dense: expected (N, F_in)");
        input_ = in;
        const std::size_t n = in.dim(0);
        Tensor out({n, fout_});
#pragma omp parallel for schedule(static)
        for (std::size_t b = 0; b < n; ++b) {
            const double* src = &in.data[b * fin_];
            double* dst = &out.data[b * fout_];
            for (std::size_t o = 0; o < fout_; ++o) {
                const double* w = &weight_.data[o * fin_];
                double acc = bias_[o];
                for (std::size_t i = 0; i < fin_; ++i) acc += w[i] * src[i];
                dst[o] = acc;
            }
        }
        return out;
    }

    Tensor backward(const Tensor& go) override {
        const std::size_t n = input_.dim(0);
        Tensor gi({n, fin_});
#pragma omp parallel for schedule(static)
        for (std::size_t o = 0; o < fout_; ++o) {
            double gb = 0.0;
            double* gw = &grad_weight_.data[o * fin_];
            for (std::size_t b = 0; b < n; ++b) {
                const double g = go.data[b * fout_ + o];
                gb += g;
                const double* src = &input_.data[b * fin_];
                for (std::size_t i = 0; i < fin_; ++i) gw[i] += g * src[i];
            }
            grad_bias_[o] += gb;
        }
#pragma omp parallel for schedule(static)
        for (std::size_t b = 0; b < n; ++b) {
            double* dst = &gi.data[b * fin_];
            const double* g = &go.data[b * fout_];
            for (std::size_t o = 0; o < fout_; ++o) {
                const double* w = &weight_.data[o * fin_];
                const double go_v = g[o];
                for (std::size_t i = 0; i < fin_; ++i) dst[i] += go_v * w[i];
            }
        }
        return gi;
    }

    std::string kind() const override { return "dense"; }
    std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
    std::vector<Tensor*> grads() override { return {&grad_weight_, &grad_bias_}; }

private:
    std::size_t fin_, fout_;
    Tensor weight_, bias_, grad_weight_, grad_bias_;
    Tensor input_;
};

/// (N, C, 1) -> (N, C) adapter between the convolution stack and the head.
class Flatten : public Layer {
public:
    Tensor forward(const Tensor& in, bool, Rng*) override {
        in_shape_ = in.shape;
        Tensor out = in;
        std::size_t rest = 1;
        for (std::size_t i = 1; i < in.shape.size(); ++i) rest *= in.shape[i];
        out.shape = {in.dim(0), rest};
        return out;
    }
    Tensor backward(const Tensor& go) override {
        Tensor gi = go;
        gi.shape = in_shape_;
        return gi;
    }
    std::string kind() const override { return "flatten"; }

private:
    std::vector<std::size_t> in_shape_;
};

// ---------------------------------------------------------------------------
// Weighted cross-entropy on logits
// ---------------------------------------------------------------------------

struct LossResult {
    double loss = 0.0;
    Tensor grad;  // d loss / d logits
};

/// Weighted mean of per-sample cross-entropy: sum w_{y_i} (-log softmax_i[y_i])
/// divided by sum w_{y_i}; gradients are exact and log-sum-exp stabilized.
inline LossResult cross_entropy_weighted(const Tensor& logits, const std::vector<int>& labels,
                                         const std::vector<double>& weights) {
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    if (labels.size() != n) throw ShapeMismatchError("cross_entropy_weighted: labels/logits");
    LossResult res;
    res.grad = Tensor(logits.shape);
    double total_w = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= k)
            throw DomainError("cross_entropy_weighted: label out of range");
        total_w += weights.empty() ? 1.0 : weights[y];
    }
    double loss = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        const double* z = &logits.data[b * k];
        double m = z[0];
        for (std::size_t j = 1; j < k; ++j) m = std::max(m, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(z[j] - m);
        const double lse = m + std::log(sum);
        const int y = labels[b];
        const double w = weights.empty() ? 1.0 : weights[y];
        loss += w * (lse - z[y]);
        double* g = &res.grad.data[b * k];
        for (std::size_t j = 0; j < k; ++j) {
            double p = std::exp(z[j] - lse);
            g[j] = w * (p - (static_cast<int>(j) == y ? 1.0 : 0.0)) / total_w;
        }
    }
    res.loss = loss / total_w;
    return res;
}

}  // namespace ecrank::nn
