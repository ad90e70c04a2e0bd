#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sea/errors.hpp"

namespace sea::nn {

// Dense row-major tensor with value semantics. Scalar type is a template
// parameter: float for training, double for gradient checks.
template <class S>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<S> data;

    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shp) {
        Tensor t;
        std::size_t n = 1;
        for (const auto d : shp) n *= d;
        t.shape = std::move(shp);
        t.data.assign(n, S{0});
        return t;
    }

    static Tensor from(std::vector<std::size_t> shp, std::vector<S> values) {
        Tensor t;
        std::size_t n = 1;
        for (const auto d : shp) n *= d;
        if (n != values.size()) throw ValidationError("tensor: shape does not match data length");
        t.shape = std::move(shp);
        t.data = std::move(values);
        return t;
    }

    std::size_t numel() const { return data.size(); }

    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    S& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    const S& at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    template <class T>
    Tensor<T> cast() const {
        Tensor<T> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T>(data[i]);
        return out;
    }
};

}  // namespace sea::nn
