#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "unlearn/errors.hpp"

namespace unlearn {

// Row-major dense array of 64-bit floats. Rank is dynamic but nearly all
// uses are 2-D (batch x features) or 1-D (bias vectors).
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (element_count(shape) != data.size()) {
            throw DimensionError("tensor data length does not match its shape");
        }
    }

    static std::size_t element_count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    static Tensor zeros(std::vector<std::size_t> s) {
        const std::size_t n = element_count(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    const double* row(std::size_t r) const { return data.data() + r * cols(); }
    double* row(std::size_t r) { return data.data() + r * cols(); }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    bool all_finite() const {
        for (double v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
};

inline void require_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) {
        throw NumericError(what + " contains a non-finite value");
    }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
    if (!a.same_shape(b)) {
        throw DimensionError(what + ": shapes differ");
    }
}

} // namespace unlearn
