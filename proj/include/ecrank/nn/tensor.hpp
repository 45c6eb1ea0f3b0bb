#pragma once

// Dense row-major tensor of 64-bit floats.

#include <cstddef>
#include <numeric>
#include <vector>

#include "ecrank/errors.hpp"

namespace ecrank::nn {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), 0.0);
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline void require_shape(const Tensor& t, const std::vector<std::size_t>& shape,
                          const char* where) {
    if (t.shape != shape) throw ShapeMismatchError(std::string(where) + ": unexpected shape");
}

}  // namespace ecrank::nn
