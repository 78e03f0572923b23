#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rotdef/errors.hpp"

namespace rotdef {

/// Dense multi-dimensional array of doubles, row-major.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    Tensor(std::vector<std::size_t> s, std::vector<double> values)
        : shape(std::move(s)), data(std::move(values)) {
        if (element_count(shape) != data.size()) {
            throw DimensionError("tensor: shape covers " + std::to_string(element_count(shape)) +
                                 " elements but " + std::to_string(data.size()) + " values given");
        }
    }

    static Tensor zeros(std::vector<std::size_t> s) {
        Tensor t;
        t.data.assign(element_count(s), 0.0);
        t.shape = std::move(s);
        return t;
    }

    static std::size_t element_count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // Rank-specific indexers; callers are expected to have checked rank.
    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }
    double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    double& at(std::size_t c, std::size_t h, std::size_t w) {
        return data[(c * shape[1] + h) * shape[2] + w];
    }
    double at(std::size_t c, std::size_t h, std::size_t w) const {
        return data[(c * shape[1] + h) * shape[2] + w];
    }
    double& at(std::size_t o, std::size_t c, std::size_t h, std::size_t w) {
        return data[((o * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    double at(std::size_t o, std::size_t c, std::size_t h, std::size_t w) const {
        return data[((o * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    bool all_finite() const {
        for (double v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
};

inline std::string shape_string(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    out += "]";
    return out;
}

}  // namespace rotdef
