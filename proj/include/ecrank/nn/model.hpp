#pragma once

// Sequential models: the CNN over 3 x pi(N) input matrices and the small
// FCNN over precomputed features, plus the versioned binary model file.
//
// CNN: a preparatory convolution taking 3 channels to 64, L1 stride-1
// convolutions, L2 stride-2 convolutions (each halving the length, down to
// exactly 1), L3 stride-1 convolutions - every convolution followed by
// ReLU then batch normalization - and a final dense 64 -> num_classes.
//
// FCNN: dense(F -> 128), three dense(128 -> 128) and dense(128 -> K), with
// dropout and ReLU between consecutive dense layers.

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ecrank/errors.hpp"
#include "ecrank/nn/layers.hpp"
#include "ecrank/rng.hpp"

namespace ecrank::nn {

struct CnnConfig {
    int l1 = 0;
    int l2 = 0;  // 0 means the default ceil(log2(input_len))
    int l3 = 3;
    int kernel = 17;
    int channels = 64;
    std::size_t input_len = 0;
    int num_classes = 0;

    int effective_l2() const {
        if (l2 > 0) return l2;
        int k = 0;
        std::size_t v = 1;
        while (v < input_len) {
            v *= 2;
            ++k;
        }
        return k;
    }

    void validate() const {
        if (kernel % 2 == 0 || kernel < 1)
            throw ConfigInvariantViolationError("CnnConfig: kernel size must be odd");
        if (channels != 64)
            throw ConfigInvariantViolationError("CnnConfig: channel width is fixed at 64");
        if (input_len < 1 || num_classes < 2)
            throw ConfigInvariantViolationError("CnnConfig: bad input_len/num_classes");
        if (l1 < 0 || l3 < 0 || l2 < 0)
            throw ConfigInvariantViolationError("CnnConfig: negative layer count");
        // ceil(input_len / 2^L2) must be exactly 1
        std::size_t len = input_len;
        for (int i = 0; i < effective_l2(); ++i) len = (len + 1) / 2;
        if (len != 1)
            throw ConfigInvariantViolationError(
                "CnnConfig: L2 reducing layers do not bring the length to 1");
    }
};

struct Model {
    std::string arch;  // "cnn" | "fcnn"
    std::map<std::string, std::string> descriptor;
    std::vector<std::unique_ptr<Layer>> layers;
    int num_classes = 0;
    std::size_t input_features = 0;  // fcnn: F; cnn: input_len

    Tensor forward(const Tensor& in, bool training, Rng* rng) {
        Tensor x = in;
        for (auto& l : layers) x = l->forward(x, training, rng);
        return x;
    }

    Tensor backward(const Tensor& grad_out) {
        Tensor g = grad_out;
        for (auto it = layers.rbegin(); it != layers.rend(); ++it) g = (*it)->backward(g);
        return g;
    }

    std::vector<Tensor*> parameters() {
        std::vector<Tensor*> out;
        for (auto& l : layers)
            for (Tensor* t : l->params()) out.push_back(t);
        return out;
    }

    std::vector<Tensor*> gradients() {
        std::vector<Tensor*> out;
        for (auto& l : layers)
            for (Tensor* t : l->grads()) out.push_back(t);
        return out;
    }

    std::vector<Tensor*> persistent_tensors() {
        std::vector<Tensor*> out;
        for (auto& l : layers)
            for (Tensor* t : l->persistent()) out.push_back(t);
        return out;
    }

    void zero_grad() {
        for (Tensor* g : gradients()) g->zero();
    }

    std::vector<Tensor> snapshot() {
        std::vector<Tensor> out;
        for (Tensor* t : persistent_tensors()) out.push_back(*t);
        return out;
    }

    void restore(const std::vector<Tensor>& snap) {
        auto tensors = persistent_tensors();
        if (snap.size() != tensors.size()) throw Error("Model::restore: snapshot mismatch");
        for (std::size_t i = 0; i < snap.size(); ++i) *tensors[i] = snap[i];
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (Tensor* t : parameters()) n += t->numel();
        return n;
    }
};

inline Model build_cnn(const CnnConfig& cfg, Rng& rng) {
    cfg.validate();
    Model m;
    m.arch = "cnn";
    m.num_classes = cfg.num_classes;
    m.input_features = cfg.input_len;
    const int l2 = cfg.effective_l2();
    auto add_block = [&](int stride) {
        std::size_t cin = m.layers.empty() ? 3 : 64;
        m.layers.push_back(std::make_unique<Conv1d>(cin, 64, cfg.kernel, stride, rng));
        m.layers.push_back(std::make_unique<ReLU>());
        m.layers.push_back(std::make_unique<BatchNorm1d>(64));
    };
    add_block(1);  // preparatory: 3 -> 64
    for (int i = 0; i < cfg.l1; ++i) add_block(1);
    for (int i = 0; i < l2; ++i) add_block(2);
    for (int i = 0; i < cfg.l3; ++i) add_block(1);
    m.layers.push_back(std::make_unique<Flatten>());
    m.layers.push_back(std::make_unique<Dense>(64, cfg.num_classes, rng));

    m.descriptor["arch"] = "cnn";
    m.descriptor["input_len"] = std::to_string(cfg.input_len);
    m.descriptor["l1"] = std::to_string(cfg.l1);
    m.descriptor["l2"] = std::to_string(l2);
    m.descriptor["l3"] = std::to_string(cfg.l3);
    m.descriptor["kernel"] = std::to_string(cfg.kernel);
    m.descriptor["num_classes"] = std::to_string(cfg.num_classes);
    return m;
}

inline Model build_fcnn(std::size_t num_features, int num_classes, double dropout_rate,
                        Rng& rng) {
    if (num_features < 1) throw ConfigInvariantViolationError("build_fcnn: num_features >= 1");
    Model m;
    m.arch = "fcnn";
    m.num_classes = num_classes;
    m.input_features = num_features;
    m.layers.push_back(std::make_unique<Dense>(num_features, 128, rng));
    for (int i = 0; i < 3; ++i) {
        m.layers.push_back(std::make_unique<Dropout>(dropout_rate));
        m.layers.push_back(std::make_unique<ReLU>());
        m.layers.push_back(std::make_unique<Dense>(128, 128, rng));
    }
    m.layers.push_back(std::make_unique<Dropout>(dropout_rate));
    m.layers.push_back(std::make_unique<ReLU>());
    m.layers.push_back(std::make_unique<Dense>(128, num_classes, rng));

    m.descriptor["arch"] = "fcnn";
    m.descriptor["num_features"] = std::to_string(num_features);
    m.descriptor["num_classes"] = std::to_string(num_classes);
    std::ostringstream dr;
    dr << dropout_rate;
    m.descriptor["dropout"] = dr.str();
    return m;
}

// ---------------------------------------------------------------------------
// Model file: magic, version, key-value descriptor, then the persistent
// tensors in declaration order (shape-prefixed little-endian f64).
// ---------------------------------------------------------------------------

namespace detail {

constexpr char kModelMagic[4] = {'E', 'C', 'R', 'K'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void put_le(std::ofstream& out, T v) {
    unsigned char buf[sizeof(T)];
    auto u = static_cast<std::make_unsigned_t<T>>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = (u >> (8 * i)) & 0xff;
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::ifstream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T)))
        throw ParseError("model file: truncated");
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
    return static_cast<T>(u);
}

}  // namespace detail

inline void save_model(Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(detail::kModelMagic, 4);
    detail::put_le<std::uint32_t>(out, detail::kModelVersion);
    std::string desc;
    for (auto& [k, v] : model.descriptor) desc += k + "=" + v + "\n";
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(desc.size()));
    out.write(desc.data(), static_cast<std::streamsize>(desc.size()));
    auto tensors = model.persistent_tensors();
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (Tensor* t : tensors) {
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t->shape.size()));
        for (std::size_t d : t->shape) detail::put_le<std::uint64_t>(out, d);
        for (double x : t->data) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(x));
            std::memcpy(&bits, &x, sizeof(bits));
            detail::put_le<std::uint64_t>(out, bits);
        }
    }
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, detail::kModelMagic, 4) != 0)
        throw ParseError(path + ": not a model file");
    std::uint32_t version = detail::get_le<std::uint32_t>(in);
    if (version != detail::kModelVersion)
        throw ParseError(path + ": unsupported model version " + std::to_string(version));
    std::uint32_t desc_len = detail::get_le<std::uint32_t>(in);
    std::string desc(desc_len, '\0');
    if (!in.read(desc.data(), desc_len)) throw ParseError(path + ": truncated descriptor");
    std::map<std::string, std::string> kv;
    std::istringstream lines(desc);
    std::string line;
    while (std::getline(lines, line)) {
        auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }

    Rng init_rng(0);  // weights are overwritten below
    Model m;
    if (kv.at("arch") == "cnn") {
        CnnConfig cfg;
        cfg.input_len = std::stoull(kv.at("input_len"));
        cfg.l1 = std::stoi(kv.at("l1"));
        cfg.l2 = std::stoi(kv.at("l2"));
        cfg.l3 = std::stoi(kv.at("l3"));
        cfg.kernel = std::stoi(kv.at("kernel"));
        cfg.num_classes = std::stoi(kv.at("num_classes"));
        m = build_cnn(cfg, init_rng);
    } else if (kv.at("arch") == "fcnn") {
        m = build_fcnn(std::stoull(kv.at("num_features")), std::stoi(kv.at("num_classes")),
                       std::stod(kv.at("dropout")), init_rng);
    } else {
        throw ParseError(path + ": unknown arch '" + kv.at("arch") + "'");
    }
    m.descriptor = kv;

    std::uint32_t count = detail::get_le<std::uint32_t>(in);
    auto tensors = m.persistent_tensors();
    if (count != tensors.size()) throw ParseError(path + ": tensor count mismatch");
    for (Tensor* t : tensors) {
        std::uint32_t ndim = detail::get_le<std::uint32_t>(in);
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) d = detail::get_le<std::uint64_t>(in);
        if (shape != t->shape) throw ParseError(path + ": tensor shape mismatch");
        for (double& x : t->data) {
            std::uint64_t bits = detail::get_le<std::uint64_t>(in);
            std::memcpy(&x, &bits, sizeof(x));
        }
    }
    return m;
}

}  // namespace ecrank::nn
